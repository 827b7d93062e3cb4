//! The metric G is carried along with the state, so ⟨ψ|G|ψ⟩ is conserved
//! even though the plain Euclidean norm is not.
//!
//! Run with `cargo run --release --example metric_norm`.

use ep_holonomy::matrix::ComplexMat;
use ep_holonomy::metric::{norm_along_path, StateVector};
use ep_holonomy::model::{BasePoint, EpModel};
use ep_holonomy::path::{LoopSpec, Path};

fn main() -> ep_holonomy::error::Result<()> {
    let g0 = ComplexMat::identity(2);
    let psi0 = StateVector::basis(2, 0);

    // non-Hermitian H at (0.5, 0): pure time evolution for five time units
    let leg = Path::line(BasePoint::txy(0.0, 0.5, 0.0), BasePoint::txy(5.0, 0.5, 0.0))?;
    let tr = norm_along_path(&psi0, &leg, &EpModel, &g0, 20_000)?;
    println!("time leg:   max |<ψ|G|ψ> − 1| = {:.2e}, max |<ψ|ψ> − 1| = {:.3}", tr.max_deviation, tr.max_euclidean_drift);
    for smp in tr.samples.iter().step_by(4000) {
        println!("  t = {:.2}  <ψ|G|ψ> = {:.15}  <ψ|ψ> = {:.6}", smp.s * 5.0, smp.metric_norm, smp.euclidean_norm);
    }

    let lp = LoopSpec::circle_ep_minus(1.0).to_path()?;
    let tr = norm_along_path(&psi0, &lp, &EpModel, &g0, 20_000)?;
    let j = &tr.joint;
    println!(
        "EP loop:    norm drift {:.2e}, min eig(G) {:.3}, ‖U†G U − G₀‖ = {:.2e} (est_error {:.2e})",
        tr.max_deviation,
        j.min_eigenvalue,
        j.metric_holonomy_defect(),
        j.est_error
    );
    Ok(())
}
