//! Winding around the exceptional point as a four-step gate:
//! |0⟩ → |1⟩ → −|0⟩ → −|1⟩ → |0⟩ with |1⟩ ≡ ℐ|0⟩.
//!
//! Run with `cargo run --release --example gate_cycle`.

use ep_holonomy::metric::StateVector;
use ep_holonomy::model::EpModel;
use ep_holonomy::path::LoopSpec;
use ep_holonomy::transport::{integrate_transport, transport_state};
use num_complex::Complex64;

fn main() -> ep_holonomy::error::Result<()> {
    let once = integrate_transport(&LoopSpec::circle_ep_minus(0.8).to_path()?, &EpModel, 20_000)?;
    let zero = StateVector::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
    let one = transport_state(&zero, &once)?;

    let labels = ["|1⟩", "−|0⟩", "−|1⟩", "|0⟩"];
    let targets = [one.clone(), zero.scaled((-1.0).into()), one.scaled((-1.0).into()), zero.clone()];
    let mut psi = zero.clone();
    for (label, target) in labels.iter().zip(&targets) {
        psi = transport_state(&psi, &once)?;
        println!("after another loop: {label:<5} off by {:.2e}   ψ = {:?}", psi.distance(target), psi.components());
    }
    Ok(())
}
