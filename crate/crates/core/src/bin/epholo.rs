//! Command-line front end to the scenario runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ep_holonomy::error::{Error, Result};
use ep_holonomy::scenario::{
    config_from_pairs, error_exit_code, exit, exit_code, parse_config_text, report_flatness, run_scenario,
    sweep, Rect, ScenarioConfig, ScenarioKind,
};

#[derive(Parser)]
#[command(name = "epholo", version, about = "Holonomy experiments around exceptional points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv and summary.json.
    Run(RunArgs),
    /// Run the cartesian product of comma-separated values, one directory per config.
    Sweep(SweepArgs),
    /// Write zero-curvature residuals on a grid.
    Flatness(FlatnessArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    winding: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Time slice of the loop.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    /// Keep every n-th step in the trace.
    #[arg(long)]
    stride: Option<String>,
    /// Record wall-clock time (outputs are then no longer byte-reproducible).
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let fields = [
            ("r", &self.r),
            ("rho", &self.rho),
            ("winding", &self.winding),
            ("steps", &self.steps),
            ("t", &self.t),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("grid", &self.grid),
            ("samples", &self.samples),
            ("stride", &self.stride),
        ];
        for (k, v) in fields {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        }
        if let Some(o) = &self.out {
            out.push(("out".into(), o.display().to_string()));
        }
        if self.timing {
            out.push(("timing".into(), "true".into()));
        }
        out
    }

    fn file_pairs(&self) -> Result<Vec<(String, String)>> {
        match &self.config {
            Some(p) => parse_config_text(&std::fs::read_to_string(p)?),
            None => Ok(Vec::new()),
        }
    }

    fn scenario(&self) -> Result<Option<ScenarioKind>> {
        self.scenario.as_deref().map(str::parse).transpose()
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: RunArgs,
}

#[derive(Args)]
struct FlatnessArgs {
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    y_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    y_max: f64,
    #[arg(long, default_value_t = 41)]
    grid: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value = "flatness.csv")]
    out: PathBuf,
}

fn build_config(args: &RunArgs) -> Result<ScenarioConfig> {
    let mut cfg = config_from_pairs(args.scenario()?, &args.file_pairs()?, &args.pairs())?;
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("out"));
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> i32 {
    let outcome = build_config(args).and_then(|cfg| run_scenario(&cfg));
    match &outcome {
        Ok(s) => {
            for c in &s.checks {
                let mark = if c.pass { "pass" } else { "FAIL" };
                println!("{mark} {:<28} {:.3e} (tol {:.1e})", c.name, c.value, c.tol);
            }
            if let Some(cl) = &s.classification {
                println!("holonomy {} at distance {:.3e}", cl.label.as_str(), cl.distance);
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    exit_code(&outcome)
}

/// Every combination of the comma-separated flag values.
fn expand(args: &RunArgs) -> Result<(Vec<ScenarioConfig>, PathBuf)> {
    let file = args.file_pairs()?;
    let mut grid: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (k, v) in args.pairs() {
        if k == "out" {
            continue;
        }
        let values: Vec<&str> = v.split(',').map(str::trim).collect();
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                let k = k.clone();
                values.iter().map(move |val| {
                    let mut p = prefix.clone();
                    p.push((k.clone(), val.to_string()));
                    p
                })
            })
            .collect();
    }
    let mut scenarios = match &args.scenario {
        Some(s) => s.split(',').map(|x| x.trim().parse().map(Some)).collect::<Result<Vec<_>>>()?,
        None => vec![None],
    };
    scenarios.dedup();
    let mut cfgs = Vec::new();
    for kind in &scenarios {
        for overrides in &grid {
            cfgs.push(config_from_pairs(*kind, &file, overrides)?);
        }
    }
    let root = args.out.clone().unwrap_or_else(|| PathBuf::from("sweep"));
    Ok((cfgs, root))
}

fn run_sweep(args: &SweepArgs) -> i32 {
    let result = expand(&args.base).and_then(|(cfgs, root)| sweep(&cfgs, &root).map(|e| (e, root)));
    match result {
        Ok((entries, root)) => {
            let mut worst = exit::PASS;
            for e in &entries {
                println!("{} {:<14} exit {} {}", &e.hash[..12], e.scenario.as_str(), e.exit_code, e.error.as_deref().unwrap_or(""));
                if e.exit_code != exit::PASS && worst == exit::PASS {
                    worst = e.exit_code;
                }
            }
            println!("index written to {}", root.join("index.json").display());
            worst
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

fn run_flatness(args: &FlatnessArgs) -> i32 {
    let bounds = Rect {
        x_min: args.x_min,
        x_max: args.x_max,
        y_min: args.y_min,
        y_max: args.y_max,
    };
    let outcome = if args.tol > 0.0 {
        report_flatness(bounds, args.grid, args.t, &args.out)
    } else {
        Err(Error::Config("tolerance must be positive".into()))
    };
    match outcome {
        Ok(scan) => {
            println!(
                "{} admissible, {} skipped, max residual {:.3e}",
                scan.admissible, scan.skipped, scan.max_residual
            );
            if scan.max_residual < args.tol {
                exit::PASS
            } else {
                exit::CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    // usage errors are configuration errors, not failed checks
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INVALID_CONFIG as u8 } else { 0 });
        }
    };
    let code = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Flatness(a) => run_flatness(a),
    };
    ExitCode::from(code as u8)
}
