//! Zero-curvature residuals of the closed-form generators on a grid, written as CSV.
//!
//! Run with `cargo run --release --example flatness_scan -- [out.csv] [t]`.

use std::path::PathBuf;

use ep_holonomy::scenario::{report_flatness, Rect};

fn main() -> ep_holonomy::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "flatness.csv".into()));
    let t: f64 = args.next().map(|s| s.parse().expect("t must be a number")).unwrap_or(0.0);

    let scan = report_flatness(Rect::square(2.0), 41, t, &out)?;
    println!(
        "t = {t}: {} points checked, {} inside the EP clearance, largest residual {:.2e}",
        scan.admissible, scan.skipped, scan.max_residual
    );
    println!("wrote {}", out.display());
    Ok(())
}
