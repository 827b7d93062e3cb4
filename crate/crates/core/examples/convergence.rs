//! Fourth-order convergence of the fixed-step integrator, read off the
//! Richardson error estimate.
//!
//! Run with `cargo run --release --example convergence`.

use ep_holonomy::model::EpModel;
use ep_holonomy::path::LoopSpec;
use ep_holonomy::transport::integrate_transport;

fn main() -> ep_holonomy::error::Result<()> {
    let path = LoopSpec::circle_ep_minus(1.9).to_path()?;
    let mut prev: Option<f64> = None;
    for steps in [2500, 5000, 10_000, 20_000] {
        let e = integrate_transport(&path, &EpModel, steps)?.est_error;
        match prev {
            Some(p) => println!("{steps:>6} steps  est_error {e:.3e}  ratio {:.2}", p / e),
            None => println!("{steps:>6} steps  est_error {e:.3e}"),
        }
        prev = Some(e);
    }
    Ok(())
}
