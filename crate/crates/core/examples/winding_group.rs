//! Holonomies compose like powers of ℐ, which has order four.
//!
//! Winding N times around x = −1 gives ℐ^N. A large circle around both
//! exceptional points winds once around each in the same sense and gives
//! ℐ² = −𝟙, while a figure-eight that meets them with opposite senses gives 𝟙.
//!
//! Run with `cargo run --release --example winding_group`.

use ep_holonomy::model::EpModel;
use ep_holonomy::path::{LoopSpec, Path};
use ep_holonomy::transport::{classify_holonomy, integrate_transport};

fn report(name: &str, path: &Path) -> ep_holonomy::error::Result<()> {
    let res = integrate_transport(path, &EpModel, 20_000)?;
    let class = classify_holonomy(&res.holonomy);
    println!("{name:<28} {:<8} distance {:.2e}", class.label.as_str(), class.distance);
    Ok(())
}

fn main() -> ep_holonomy::error::Result<()> {
    for n in [-1, 0, 1, 2, 3, 4, 8] {
        report(&format!("winding {n} around x = −1"), &LoopSpec::circle_ep_minus(1.0).with_winding(n).to_path()?)?;
    }
    report("circle r = 3 (both EPs)", &Path::circle(0.0, [0.0, 0.0], 3.0, 0.0, 1.0)?)?;

    // both lobes pass through the origin: counter-clockwise around x = −1, clockwise around x = +1
    let left = Path::circle(0.0, [-1.0, 0.0], 1.0, 0.0, 1.0)?;
    let right = LoopSpec::circle_ep_plus(1.0).to_path()?;
    report("figure-eight", &left.concat(&right)?)?;
    Ok(())
}
