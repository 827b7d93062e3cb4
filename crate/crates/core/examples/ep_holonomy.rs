//! Encircling the exceptional point at x = −1 once gives ℐ = [[0, 1], [−1, 0]],
//! whatever the radius of the circle.
//!
//! Run with `cargo run --release --example ep_holonomy`.

use ep_holonomy::model::{lambda_ref_minus, EpModel, ReferenceConstants};
use ep_holonomy::path::LoopSpec;
use ep_holonomy::transport::{classify_holonomy, integrate_transport, lambda_trace};
use ep_holonomy::matrix::frobenius_distance;

fn main() -> ep_holonomy::error::Result<()> {
    let i_hol = ReferenceConstants::new().i_hol;
    for rho in [0.2, 0.5, 1.0, 1.5, 1.9] {
        let res = integrate_transport(&LoopSpec::circle_ep_minus(rho).to_path()?, &EpModel, 20_000)?;
        let class = classify_holonomy(&res.holonomy);
        let lam_end = lambda_trace(&res)?.last().unwrap().lambda;
        println!(
            "ρ = {rho:.1}: {} (‖U − ℐ‖ = {:.2e}), λ(2π) = {:.3} vs closed form {:.3}",
            class.label.as_str(),
            frobenius_distance(&res.holonomy, &i_hol)?,
            lam_end,
            lambda_ref_minus(rho, std::f64::consts::TAU)?
        );
    }
    println!("holonomy at ρ = 1:\n{:?}", integrate_transport(&LoopSpec::circle_ep_minus(1.0).to_path()?, &EpModel, 20_000)?.holonomy);
    Ok(())
}
