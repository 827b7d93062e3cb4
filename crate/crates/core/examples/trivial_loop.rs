//! A loop that encloses no exceptional point comes back to the identity.
//!
//! Run with `cargo run --example trivial_loop`.

use std::f64::consts::TAU;

use ep_holonomy::model::{lambda_ref_origin, EpModel};
use ep_holonomy::path::LoopSpec;
use ep_holonomy::transport::{classify_holonomy, integrate_transport, lambda_trace};

fn main() -> ep_holonomy::error::Result<()> {
    for r in [0.3, 0.5, 0.9] {
        let path = LoopSpec::circle_origin(r).to_path()?;
        let res = integrate_transport(&path, &EpModel, 20_000)?;
        let class = classify_holonomy(&res.holonomy);

        // the evolution operator stays diagonal in the S basis, with entries λ and 1/λ
        let trace = lambda_trace(&res)?;
        let worst = trace
            .iter()
            .map(|p| (p.lambda - lambda_ref_origin(r, p.s).unwrap()).norm())
            .fold(0.0, f64::max);
        let mid = trace[trace.len() / 2].lambda;

        println!(
            "r = {r:.1}: holonomy {:<8} distance {:.2e}  est_error {:.2e}  λ(π) = {:.6}  max |λ − λ_ref| {:.2e}",
            class.label.as_str(),
            class.distance,
            res.est_error,
            mid,
            worst
        );
        assert!(trace.last().unwrap().s == TAU);
    }
    Ok(())
}
