//! A parameter sweep through the scenario runner: one directory per config
//! plus an index keyed by config hash.
//!
//! Run with `cargo run --release --example sweep_rho -- [out_dir]`.

use std::path::PathBuf;

use ep_holonomy::scenario::{sweep, ScenarioConfig, ScenarioKind};

fn main() -> ep_holonomy::error::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep_out".into()));
    let grid: Vec<ScenarioConfig> = [0.2, 0.5, 1.0, 1.5, 1.9]
        .into_iter()
        .map(|rho| ScenarioConfig {
            rho,
            trace_stride: 20,
            ..ScenarioConfig::new(ScenarioKind::EpMinus)
        })
        .collect();

    for entry in sweep(&grid, &root)? {
        let s = entry.summary.as_ref().expect("every ρ in (0, 2) is admissible");
        let class = s.classification.as_ref().unwrap();
        println!(
            "ρ = {:.1}  {}  distance {:.2e}  exit {}  -> {}",
            entry.params.rho,
            class.label.as_str(),
            class.distance,
            entry.exit_code,
            root.join(&entry.dir).display()
        );
    }
    Ok(())
}
