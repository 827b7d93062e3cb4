//! The loop around x = +1 is the mirror image of the loop around x = −1, and
//! its holonomy is ℐ⁻¹ = −ℐ.
//!
//! Run with `cargo run --release --example mirror_ep`.

use ep_holonomy::matrix::frobenius_distance;
use ep_holonomy::model::{apply_t_symmetry, EpModel, ReferenceConstants};
use ep_holonomy::path::LoopSpec;
use ep_holonomy::transport::{classify_holonomy, integrate_transport};

fn main() -> ep_holonomy::error::Result<()> {
    let rho = 1.0;
    let minus = integrate_transport(&LoopSpec::circle_ep_minus(rho).to_path()?, &EpModel, 20_000)?;
    let plus = integrate_transport(&LoopSpec::circle_ep_plus(rho).to_path()?, &EpModel, 20_000)?;

    let i_inv = ReferenceConstants::new().i_hol.inverse()?;
    println!("U[γ+] classifies as {}", classify_holonomy(&plus.holonomy).label.as_str());
    println!("‖U[γ+] − ℐ⁻¹‖      = {:.2e}", frobenius_distance(&plus.holonomy, &i_inv)?);
    println!(
        "‖T U[γ−] T − U[γ+]‖ = {:.2e}",
        frobenius_distance(&apply_t_symmetry(&minus.holonomy), &plus.holonomy)?
    );
    Ok(())
}
