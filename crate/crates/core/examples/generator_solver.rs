//! Solving the determining equations for the generators at a point, and
//! transporting with a Hamiltonian family defined outside the crate.
//!
//! Run with `cargo run --release --example generator_solver`.

use ep_holonomy::generator::{assemble_k, solve_generator_pair, SolvedField};
use ep_holonomy::matrix::{frobenius_distance, ComplexMat};
use ep_holonomy::model::{dh_dx, hamiltonian_at, kx_closed, BasePoint, EpModel, HamiltonianFamily};
use ep_holonomy::path::LoopSpec;
use ep_holonomy::transport::{classify_holonomy, integrate_transport};
use num_complex::Complex64;

/// The model Hamiltonian plus a constant energy shift, which leaves every generator unchanged.
struct Shifted(f64);

impl HamiltonianFamily for Shifted {
    fn dim(&self) -> usize {
        2
    }
    fn n_params(&self) -> usize {
        2
    }
    fn hamiltonian(&self, p: &BasePoint) -> ComplexMat {
        let shift = ComplexMat::identity(2).scale(Complex64::new(self.0, 0.0));
        &hamiltonian_at(p.q[0], p.q[1]) + &shift
    }
    fn partial(&self, i: usize, p: &BasePoint) -> ComplexMat {
        EpModel.partial(i, p)
    }
}

fn main() -> ep_holonomy::error::Result<()> {
    let (x, y, t) = (0.3, -0.4, 0.7);
    let p = BasePoint::txy(t, x, y);
    let pair = solve_generator_pair(&EpModel, 0, &p)?;
    let (r1, r0) = pair.residuals(&hamiltonian_at(x, y), &dh_dx())?;
    println!("K_x at ({x}, {y}, t = {t}):\n{:?}", assemble_k(&pair, t));
    println!("distance to closed form {:.2e}", frobenius_distance(&assemble_k(&pair, t), &kx_closed(x, y, t)?)?);
    println!("determining-equation residuals {r1:.2e}, {r0:.2e}");

    let field = SolvedField::new(Shifted(2.5));
    let res = integrate_transport(&LoopSpec::circle_ep_minus(1.0).to_path()?, &field, 20_000)?;
    println!("shifted family around x = −1: {}", classify_holonomy(&res.holonomy).label.as_str());
    Ok(())
}
