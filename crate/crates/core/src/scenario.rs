//! Named experiments over the model, with CSV traces and JSON summaries.
//!
//! Every run is a pure function of its [`ScenarioConfig`]: repeated runs write
//! byte-identical files unless wall-clock timing is requested explicitly.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, ErrorClass, Result};
use crate::fd::Stencil;
use crate::generator::{assemble_k, solve_generator_pair};
use crate::matrix::{c, ComplexMat, C64};
use crate::metric::{norm_along_path, StateVector};
use crate::model::{
    apply_t_symmetry, dh_dx, dh_dy, flatness_residuals, hamiltonian_at, kx_closed, ky_closed,
    lambda_ref_minus, lambda_ref_origin, lambda_ref_plus, BasePoint, EpLocus, EpModel,
    ReferenceConstants,
};
use crate::path::{LoopSpec, Path};
use crate::transport::{
    classify_holonomy_with_tol, integrate_transport_with, lambda_trace_with_tol, HolonomyLabel,
    TransportConfig, TransportResult, DEFAULT_EP_CLEARANCE,
};

/// Fewest RK4 steps per loop a scenario accepts.
pub const MIN_SCENARIO_STEPS: usize = 1000;
/// Radius of the both-EP circle when none is given.
pub const DEFAULT_BOTH_EPS_RADIUS: f64 = 3.0;
/// Tolerance for solver-versus-closed-form agreement in `k-check`.
pub const K_CHECK_TOL: f64 = 1e-9;
/// Tolerance for the determining-equation residuals in `k-check`.
pub const K_RESIDUAL_TOL: f64 = 1e-10;
/// Exclusion radius around each EP for `k-check` sample points.
pub const K_CHECK_EXCLUSION: f64 = 0.05;
/// Step of the five-point stencil used for flatness residuals.
pub const FLATNESS_STEP: f64 = 1e-4;
/// Bound on the per-step asymmetry of the metric before symmetrization.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Process exit statuses of the runner.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CHECK_FAILED: i32 = 2;
    pub const INVALID_CONFIG: i32 = 3;
    pub const NUMERICAL_ABORT: i32 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    NoEp,
    EpMinus,
    EpPlus,
    BothEps,
    Winding,
    GateCycle,
    FlatnessScan,
    KCheck,
    MetricCheck,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::NoEp,
        ScenarioKind::EpMinus,
        ScenarioKind::EpPlus,
        ScenarioKind::BothEps,
        ScenarioKind::Winding,
        ScenarioKind::GateCycle,
        ScenarioKind::FlatnessScan,
        ScenarioKind::KCheck,
        ScenarioKind::MetricCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::NoEp => "no-ep",
            ScenarioKind::EpMinus => "ep-minus",
            ScenarioKind::EpPlus => "ep-plus",
            ScenarioKind::BothEps => "both-eps",
            ScenarioKind::Winding => "winding",
            ScenarioKind::GateCycle => "gate-cycle",
            ScenarioKind::FlatnessScan => "flatness-scan",
            ScenarioKind::KCheck => "k-check",
            ScenarioKind::MetricCheck => "metric-check",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::Config(format!("unknown scenario '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Everything that determines the numbers a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub r: f64,
    pub rho: f64,
    pub winding: i32,
    pub steps: usize,
    pub time_slice: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub grid: usize,
    pub samples: usize,
    pub trace_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Origin-loop radius, or the both-EP circle radius. `None` picks the scenario default.
    pub r: Option<f64>,
    pub rho: f64,
    pub winding: i32,
    /// RK4 steps per traversal of the loop.
    pub steps: usize,
    pub time_slice: f64,
    pub tolerance: f64,
    /// Where files go; `None` computes the summary only.
    pub output_dir: Option<PathBuf>,
    /// Seeds the random initial state of `gate-cycle` and the sample points of `k-check`.
    pub seed: u64,
    /// Points per axis of `flatness-scan`.
    pub grid: usize,
    /// Random points drawn by `k-check`.
    pub samples: usize,
    /// Write every n-th step to the trace.
    pub trace_stride: usize,
    /// Record wall-clock time in the summary, which makes it non-reproducible.
    pub timing: bool,
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            r: None,
            rho: 1.0,
            winding: 1,
            steps: 20_000,
            time_slice: 0.0,
            tolerance: 1e-6,
            output_dir: None,
            seed: 0,
            grid: 41,
            samples: 1000,
            trace_stride: 1,
            timing: false,
        }
    }

    pub fn resolved_r(&self) -> f64 {
        self.r.unwrap_or(match self.scenario {
            ScenarioKind::BothEps => DEFAULT_BOTH_EPS_RADIUS,
            _ => 0.5,
        })
    }

    pub fn params(&self) -> ScenarioParams {
        ScenarioParams {
            r: self.resolved_r(),
            rho: self.rho,
            winding: self.winding,
            steps: self.steps,
            time_slice: self.time_slice,
            tolerance: self.tolerance,
            seed: self.seed,
            grid: self.grid,
            samples: self.samples,
            trace_stride: self.trace_stride,
        }
    }

    /// Hex SHA-256 of the scenario name and its parameters.
    pub fn hash(&self) -> String {
        let key = serde_json::json!({ "scenario": self.scenario, "params": self.params() });
        let digest = Sha256::digest(key.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < MIN_SCENARIO_STEPS {
            return Err(Error::Config(format!(
                "steps must be at least {MIN_SCENARIO_STEPS}, got {}",
                self.steps
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !self.time_slice.is_finite() {
            return Err(Error::Config("time slice must be finite".into()));
        }
        if self.grid < 2 {
            return Err(Error::Config(format!("grid must be at least 2, got {}", self.grid)));
        }
        if self.samples == 0 || self.trace_stride == 0 {
            return Err(Error::Config("samples and trace stride must be positive".into()));
        }
        match self.scenario {
            ScenarioKind::NoEp => LoopSpec::circle_origin(self.resolved_r()).validate(),
            ScenarioKind::EpMinus | ScenarioKind::Winding | ScenarioKind::GateCycle => {
                LoopSpec::circle_ep_minus(self.rho).validate()
            }
            ScenarioKind::EpPlus => LoopSpec::circle_ep_plus(self.rho).validate(),
            ScenarioKind::BothEps => {
                let r = self.resolved_r();
                // radii within the EP clearance of 1 are left to the integrator to refuse
                if r.is_finite() && r >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "both-eps circle needs a radius of at least 1, got {r}"
                    )))
                }
            }
            ScenarioKind::MetricCheck => {
                LoopSpec::circle_origin(self.resolved_r()).validate()?;
                LoopSpec::circle_ep_minus(self.rho).validate()
            }
            ScenarioKind::FlatnessScan | ScenarioKind::KCheck => Ok(()),
        }
    }

    /// Sets one field from a `key = value` pair.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
        }
        match key {
            "scenario" => self.scenario = value.parse()?,
            "r" => self.r = Some(num(key, value)?),
            "rho" => self.rho = num(key, value)?,
            "winding" => self.winding = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "t" | "time_slice" => self.time_slice = num(key, value)?,
            "tol" | "tolerance" => self.tolerance = num(key, value)?,
            "out" | "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "seed" => self.seed = num(key, value)?,
            "grid" => self.grid = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "stride" | "trace_stride" => self.trace_stride = num(key, value)?,
            "timing" => self.timing = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }
}

/// Parses the flat `key = value` format; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Builds a config from file pairs, then applies `overrides` on top.
pub fn config_from_pairs(
    scenario: Option<ScenarioKind>,
    file: &[(String, String)],
    overrides: &[(String, String)],
) -> Result<ScenarioConfig> {
    let from_file = file
        .iter()
        .rev()
        .find(|(k, _)| k == "scenario")
        .map(|(_, v)| v.parse())
        .transpose()?;
    let kind = scenario
        .or(from_file)
        .ok_or_else(|| Error::Config("no scenario given".into()))?;
    let mut cfg = ScenarioConfig::new(kind);
    for (k, v) in file.iter().chain(overrides) {
        if k != "scenario" {
            cfg.apply(k, v)?;
        }
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixParts {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixParts {
    pub fn from_mat(m: &ComplexMat) -> Self {
        let n = m.dim();
        Self {
            re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_mat(&self) -> Result<ComplexMat> {
        let n = self.re.len();
        if self.im.len() != n || self.re.iter().chain(&self.im).any(|row| row.len() != n) {
            return Err(Error::Config("holonomy arrays are not square".into()));
        }
        Ok(ComplexMat::from_fn(n, |i, j| c(self.re[i][j], self.im[i][j])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: HolonomyLabel,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    /// Passes when `value < tol`. A non-finite value fails and is stored as `f64::MAX`.
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Self {
        let finite = value.is_finite();
        Self {
            name: name.into(),
            pass: finite && value < tol,
            value: if finite { value } else { f64::MAX },
            tol,
        }
    }

    /// Passes when `value > tol`.
    pub fn above(name: impl Into<String>, value: f64, tol: f64) -> Self {
        let finite = value.is_finite();
        Self {
            name: name.into(),
            pass: finite && value > tol,
            value: if finite { value } else { f64::MAX },
            tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: ScenarioKind,
    pub params: ScenarioParams,
    pub holonomy: Option<MatrixParts>,
    pub classification: Option<Classification>,
    pub max_lambda_dev: Option<f64>,
    pub est_error: Option<f64>,
    /// `None` unless timing was requested.
    pub wall_time_s: Option<f64>,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Maps a run outcome to the process exit status.
pub fn exit_code(outcome: &Result<RunSummary>) -> i32 {
    match outcome {
        Ok(s) if s.passed() => exit::PASS,
        Ok(_) => exit::CHECK_FAILED,
        Err(e) => error_exit_code(e),
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::InvalidConfig => exit::INVALID_CONFIG,
        ErrorClass::NumericalAbort => exit::NUMERICAL_ABORT,
        ErrorClass::Other => exit::OTHER,
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn create_file(path: &FsPath) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Closed-form `λ(θ)` for the standard circles.
#[derive(Debug, Clone, Copy)]
enum LambdaRef {
    Origin(f64),
    Minus(f64),
    Plus(f64),
}

impl LambdaRef {
    fn at(self, theta: f64) -> Result<C64> {
        match self {
            LambdaRef::Origin(r) => lambda_ref_origin(r, theta),
            LambdaRef::Minus(rho) => lambda_ref_minus(rho, theta),
            LambdaRef::Plus(rho) => lambda_ref_plus(rho, theta),
        }
    }
}

/// One transported loop together with its trace columns.
struct LoopRun {
    result: TransportResult,
    /// `(θ, λ, λ_ref, |Ξ_offdiag|)` per sample.
    lambda: Vec<(f64, C64, Option<C64>, f64)>,
    max_lambda_dev: Option<f64>,
    max_offdiag: f64,
}

/// Integrates one loop; an error estimate above `max_est_error` aborts with `StepTooCoarse`.
fn run_loop(
    path: &Path,
    steps: usize,
    max_est_error: f64,
    theta_sign: f64,
    reference: Option<LambdaRef>,
) -> Result<LoopRun> {
    let cfg = TransportConfig {
        max_est_error: Some(max_est_error),
        ..TransportConfig::new(steps)
    };
    let result = integrate_transport_with(path, &EpModel, &cfg)?;
    let trace = lambda_trace_with_tol(&result, f64::INFINITY)?;
    let mut lambda = Vec::with_capacity(trace.len());
    let mut max_dev: Option<f64> = None;
    let mut max_offdiag = 0.0f64;
    for smp in &trace {
        let theta = theta_sign * smp.s;
        let lref = reference.map(|r| r.at(theta)).transpose()?;
        if let Some(l) = lref {
            let d = (smp.lambda - l).norm();
            max_dev = Some(max_dev.map_or(d, |m| m.max(d)));
        }
        max_offdiag = max_offdiag.max(smp.offdiag);
        lambda.push((theta, smp.lambda, lref, smp.offdiag));
    }
    Ok(LoopRun {
        result,
        lambda,
        max_lambda_dev: max_dev,
        max_offdiag,
    })
}

const TRACE_HEADER: &str = "s,theta,x,y,u00_re,u00_im,u01_re,u01_im,u10_re,u10_im,u11_re,u11_im,lambda_re,lambda_im,lambda_ref_re,lambda_ref_im,xi_offdiag";

fn write_trace(path: &FsPath, run: &LoopRun, stride: usize) -> Result<()> {
    let mut w = create_file(path)?;
    writeln!(w, "{TRACE_HEADER}")?;
    let n = run.result.samples.len();
    for (k, (smp, (theta, lam, lref, off))) in run.result.samples.iter().zip(&run.lambda).enumerate() {
        if k % stride != 0 && k + 1 != n {
            continue;
        }
        let u = &smp.u;
        let mut row = vec![num(smp.s), num(*theta), num(smp.point.q[0]), num(smp.point.q[1])];
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            row.push(num(u[(i, j)].re));
            row.push(num(u[(i, j)].im));
        }
        row.push(num(lam.re));
        row.push(num(lam.im));
        row.push(opt_num(lref.map(|l| l.re)));
        row.push(opt_num(lref.map(|l| l.im)));
        row.push(num(*off));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// The loop, the expected power of `ℐ`, the λ reference and the sign of `θ` along `s`.
fn loop_setup(cfg: &ScenarioConfig) -> Result<(Path, i64, Option<LambdaRef>, f64)> {
    let w = cfg.winding;
    let t = cfg.time_slice;
    let (spec, power, reference) = match cfg.scenario {
        ScenarioKind::NoEp => {
            let r = cfg.resolved_r();
            (LoopSpec::circle_origin(r), 0, Some(LambdaRef::Origin(r)))
        }
        ScenarioKind::EpMinus | ScenarioKind::Winding | ScenarioKind::GateCycle => (
            LoopSpec::circle_ep_minus(cfg.rho),
            w as i64,
            Some(LambdaRef::Minus(cfg.rho)),
        ),
        ScenarioKind::EpPlus => (
            LoopSpec::circle_ep_plus(cfg.rho),
            -(w as i64),
            Some(LambdaRef::Plus(cfg.rho)),
        ),
        ScenarioKind::BothEps => (
            LoopSpec::custom(Path::circle(t, [0.0, 0.0], cfg.resolved_r(), 0.0, 1.0)?),
            2 * w as i64,
            None,
        ),
        other => return Err(Error::Config(format!("{other} is not a loop scenario"))),
    };
    let spec = spec.with_winding(w).at_time(t);
    // the closed-form λ references hold on the t = 0 slice only
    let reference = reference.filter(|_| t == 0.0);
    Ok((spec.to_path()?, power, reference, f64::from(w.signum())))
}

fn i_power(k: i64) -> ComplexMat {
    ReferenceConstants::new().i_hol.pow(k).expect("ℐ is invertible")
}

fn loop_checks(cfg: &ScenarioConfig, run: &LoopRun, power: i64) -> Vec<Check> {
    let tol = cfg.tolerance;
    let u = &run.result.holonomy;
    let mut checks = Vec::new();
    // away from t = 0 the holonomy class is recorded but not asserted
    if cfg.time_slice == 0.0 {
        checks.push(Check::below(
            "holonomy",
            (u - &i_power(power)).frobenius_norm(),
            tol,
        ));
        checks.push(Check::below("s_diagonal", run.max_offdiag, tol));
        if let Some(d) = run.max_lambda_dev {
            checks.push(Check::below("lambda_reference", d, tol));
        }
    }
    checks.push(Check::below("determinant", run.result.max_det_deviation, tol));
    checks
}

fn summary_for(cfg: &ScenarioConfig, u: &ComplexMat) -> RunSummary {
    let class = classify_holonomy_with_tol(u, cfg.tolerance);
    RunSummary {
        scenario: cfg.scenario,
        params: cfg.params(),
        holonomy: Some(MatrixParts::from_mat(u)),
        classification: Some(Classification {
            label: class.label,
            distance: class.distance,
        }),
        max_lambda_dev: None,
        est_error: None,
        wall_time_s: None,
        checks: Vec::new(),
    }
}

fn run_loop_scenario(cfg: &ScenarioConfig) -> Result<RunSummary> {
    let (path, power, reference, sign) = loop_setup(cfg)?;
    let run = run_loop(&path, cfg.steps, cfg.tolerance, sign, reference)?;
    let mut checks = loop_checks(cfg, &run, power);

    if cfg.scenario == ScenarioKind::EpPlus {
        // the mirror loop must be the T-conjugate of the loop around ℓ_-
        let mut minus_cfg = cfg.clone();
        minus_cfg.scenario = ScenarioKind::EpMinus;
        let (mpath, _, _, _) = loop_setup(&minus_cfg)?;
        let minus = integrate_transport_with(&mpath, &EpModel, &TransportConfig::new(cfg.steps))?;
        let mirrored = apply_t_symmetry(&minus.holonomy);
        checks.push(Check::below(
            "t_symmetry",
            (&mirrored - &run.result.holonomy).frobenius_norm(),
            2.0 * cfg.tolerance,
        ));
    }

    if let Some(dir) = &cfg.output_dir {
        write_trace(&dir.join("trace.csv"), &run, cfg.trace_stride)?;
    }
    let mut summary = summary_for(cfg, &run.result.holonomy);
    summary.max_lambda_dev = run.max_lambda_dev;
    summary.est_error = Some(run.result.est_error);
    summary.checks = checks;
    Ok(summary)
}

/// A normalized state that is not close to either eigenvector of `ℐ`.
fn random_gate_state(seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let z: Vec<C64> = (0..2)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let n = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
        if n < 1e-3 {
            continue;
        }
        let psi = StateVector::new(z.iter().map(|x| x / n).collect());
        // eigenvectors of ℐ are (1, ±i)/√2
        let a = psi.components();
        let overlap = |s: f64| (a[0] + c(0.0, -s) * a[1]).norm_sqr() / 2.0;
        if overlap(1.0) < 0.9 && overlap(-1.0) < 0.9 {
            return psi;
        }
    }
}

fn run_gate_cycle(cfg: &ScenarioConfig) -> Result<RunSummary> {
    let mut one = cfg.clone();
    one.winding = 1;
    let (path, _, reference, sign) = loop_setup(&one)?;
    let forward = run_loop(&path, cfg.steps, cfg.tolerance, sign, reference)?;
    let backward = integrate_transport_with(
        &path.reversed(),
        &EpModel,
        &TransportConfig {
            record_samples: false,
            max_est_error: Some(cfg.tolerance),
            ..TransportConfig::new(cfg.steps)
        },
    )?;

    let zero = random_gate_state(cfg.seed);
    let i_hol = ReferenceConstants::new().i_hol;
    // |0⟩ → |1⟩ → −|0⟩ → −|1⟩ → |0⟩ with |1⟩ ≡ ℐ|0⟩, then the same cycle backwards under ℐ⁻¹
    let mut checks = Vec::new();
    for (label, u, step) in [("forward", &forward.result.holonomy, 1i64), ("backward", &backward.holonomy, -1)] {
        let mut psi = zero.components().to_vec();
        for k in 1..=4i64 {
            psi = u.mul_vec(&psi)?;
            let expected = i_power(step * k).mul_vec(zero.components())?;
            let dist = StateVector::new(psi.clone()).distance(&StateVector::new(expected));
            checks.push(Check::below(format!("{label}_{k}"), dist, cfg.tolerance));
        }
    }
    // |0⟩ and |1⟩ must be linearly independent for the cycle to be a gate
    let a = zero.components();
    let b = i_hol.mul_vec(a)?;
    checks.push(Check::above("not_eigenstate", (a[0] * b[1] - a[1] * b[0]).norm(), cfg.tolerance));

    if let Some(dir) = &cfg.output_dir {
        write_trace(&dir.join("trace.csv"), &forward, cfg.trace_stride)?;
    }
    let mut summary = summary_for(cfg, &forward.result.holonomy);
    summary.max_lambda_dev = forward.max_lambda_dev;
    summary.est_error = Some(forward.result.est_error.max(backward.est_error));
    summary.checks = checks;
    Ok(summary)
}

fn run_metric_check(cfg: &ScenarioConfig) -> Result<RunSummary> {
    let t = cfg.time_slice;
    let r = cfg.resolved_r();
    let loops: Vec<(&str, Path)> = vec![
        ("no_ep", LoopSpec::circle_origin(r).at_time(t).to_path()?),
        ("ep_minus", LoopSpec::circle_ep_minus(cfg.rho).at_time(t).to_path()?),
        ("ep_plus", LoopSpec::circle_ep_plus(cfg.rho).at_time(t).to_path()?),
        ("both_eps", Path::circle(t, [0.0, 0.0], DEFAULT_BOTH_EPS_RADIUS, 0.0, 1.0)?),
        (
            "time_leg",
            Path::line(BasePoint::txy(t, 0.5, 0.0), BasePoint::txy(t + 5.0, 0.5, 0.0))?,
        ),
    ];
    let g0 = ComplexMat::identity(2);
    let psi0 = StateVector::basis(2, 0);

    let traces = loops
        .par_iter()
        .map(|(name, p)| norm_along_path(&psi0, p, &EpModel, &g0, cfg.steps).map(|n| (*name, p.is_closed(), n)))
        .collect::<Result<Vec<_>>>()?;

    let mut checks = Vec::new();
    let mut est_error = 0.0f64;
    for (name, closed, tr) in &traces {
        let j = &tr.joint;
        est_error = est_error.max(j.est_error);
        checks.push(Check::below(format!("norm_drift/{name}"), tr.max_deviation, cfg.tolerance));
        checks.push(Check::above(format!("positivity/{name}"), j.min_eigenvalue, 0.0));
        checks.push(Check::below(
            format!("hermiticity/{name}"),
            j.max_asymmetry,
            HERMITICITY_TOL,
        ));
        if *closed {
            // the bound has a round-off floor so a perfectly converged run is not held to zero
            let bound = 5.0 * j.est_error.max(f64::EPSILON);
            checks.push(Check::below(format!("metric_holonomy/{name}"), j.metric_holonomy_defect(), bound));
        }
    }

    if let Some(dir) = &cfg.output_dir {
        let mut w = create_file(&dir.join("metric.csv"))?;
        writeln!(w, "path,s,metric_norm_re,metric_norm_im,euclidean_norm")?;
        for (name, _, tr) in &traces {
            let n = tr.samples.len();
            for (k, smp) in tr.samples.iter().enumerate() {
                if k % cfg.trace_stride != 0 && k + 1 != n {
                    continue;
                }
                writeln!(
                    w,
                    "{name},{},{},{},{}",
                    num(smp.s),
                    num(smp.metric_norm),
                    num(smp.metric_norm_imag),
                    num(smp.euclidean_norm)
                )?;
            }
        }
        w.flush()?;
    }

    let minus = &traces[1].2.joint;
    let mut summary = summary_for(cfg, &minus.u);
    summary.est_error = Some(est_error);
    summary.checks = checks;
    Ok(summary)
}

/// Axis-aligned rectangle in the `(x, y)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn square(half: f64) -> Self {
        Self {
            x_min: -half,
            x_max: half,
            y_min: -half,
            y_max: half,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessRow {
    pub x: f64,
    pub y: f64,
    /// `None` marks a point skipped for lying inside the EP clearance.
    pub residuals: Option<[f64; 3]>,
    pub ep_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessScan {
    pub t: f64,
    pub rows: Vec<FlatnessRow>,
    /// Largest residual over admissible points, zero when there are none.
    pub max_residual: f64,
    pub admissible: usize,
    pub skipped: usize,
}

impl FlatnessScan {
    pub fn write_csv(&self, path: &FsPath) -> Result<()> {
        let mut w = create_file(path)?;
        writeln!(w, "x,y,residual_tq_x,residual_tq_y,residual_xy,distance_to_nearest_EP")?;
        for row in &self.rows {
            let res = match row.residuals {
                Some(r) => r.map(num).join(","),
                None => "skip,skip,skip".to_string(),
            };
            writeln!(w, "{},{},{res},{}", num(row.x), num(row.y), num(row.ep_distance))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Zero-curvature residuals of the closed-form generators on a `grid × grid` lattice.
pub fn flatness_scan(bounds: Rect, grid: usize, t: f64, clearance: f64) -> Result<FlatnessScan> {
    if grid < 2 {
        return Err(Error::Config(format!("grid must be at least 2, got {grid}")));
    }
    let coords = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (grid - 1) as f64;
    let locus = EpLocus::model();
    let rows = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (iy, ix) = (idx / grid, idx % grid);
            let x = coords(bounds.x_min, bounds.x_max, ix);
            let y = coords(bounds.y_min, bounds.y_max, iy);
            let ep_distance = locus.nearest_distance(x, y);
            let residuals = if ep_distance < clearance {
                None
            } else {
                let r = flatness_residuals(x, y, t, Stencil::Central4, FLATNESS_STEP)?;
                Some([r.tq_x, r.tq_y, r.xy])
            };
            Ok(FlatnessRow {
                x,
                y,
                residuals,
                ep_distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let admissible = rows.iter().filter(|r| r.residuals.is_some()).count();
    let max_residual = rows
        .iter()
        .filter_map(|r| r.residuals)
        .flatten()
        .fold(0.0, f64::max);
    Ok(FlatnessScan {
        t,
        skipped: rows.len() - admissible,
        rows,
        max_residual,
        admissible,
    })
}

/// Scans flatness and writes the CSV to `out`.
pub fn report_flatness(bounds: Rect, grid: usize, t: f64, out: &FsPath) -> Result<FlatnessScan> {
    let scan = flatness_scan(bounds, grid, t, DEFAULT_EP_CLEARANCE)?;
    scan.write_csv(out)?;
    Ok(scan)
}

fn run_flatness(cfg: &ScenarioConfig) -> Result<RunSummary> {
    let scan = flatness_scan(Rect::square(2.0), cfg.grid, cfg.time_slice, DEFAULT_EP_CLEARANCE)?;
    if let Some(dir) = &cfg.output_dir {
        scan.write_csv(&dir.join("flatness.csv"))?;
    }
    Ok(RunSummary {
        scenario: cfg.scenario,
        params: cfg.params(),
        holonomy: None,
        classification: None,
        max_lambda_dev: None,
        est_error: None,
        wall_time_s: None,
        checks: vec![Check::below("max_residual", scan.max_residual, cfg.tolerance)],
    })
}

/// Uniform points in `[−2, 2]²` outside the exclusion disks around the EPs.
pub fn sample_admissible_points(seed: u64, n: usize, exclusion: f64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locus = EpLocus::model();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        if locus.nearest_distance(p[0], p[1]) > exclusion {
            out.push(p);
        }
    }
    out
}

fn run_k_check(cfg: &ScenarioConfig) -> Result<RunSummary> {
    let t = cfg.time_slice;
    let points = sample_admissible_points(cfg.seed, cfg.samples, K_CHECK_EXCLUSION);
    let rows = points
        .par_iter()
        .map(|&[x, y]| {
            let p = BasePoint::txy(t, x, y);
            let h = hamiltonian_at(x, y);
            let kx = solve_generator_pair(&EpModel, 0, &p)?;
            let ky = solve_generator_pair(&EpModel, 1, &p)?;
            let dx = (&assemble_k(&kx, t) - &kx_closed(x, y, t)?).frobenius_norm();
            let dy = (&assemble_k(&ky, t) - &ky_closed(x, y, t)?).frobenius_norm();
            let (rx1, rx0) = kx.residuals(&h, &dh_dx())?;
            let (ry1, ry0) = ky.residuals(&h, &dh_dy())?;
            Ok([x, y, dx, dy, rx1, rx0, ry1, ry0])
        })
        .collect::<Result<Vec<_>>>()?;

    let max_col = |cols: &[usize]| {
        rows.iter()
            .flat_map(|r| cols.iter().map(move |&k| r[k]))
            .fold(0.0, f64::max)
    };
    let checks = vec![
        Check::below("solver_vs_closed_form", max_col(&[2, 3]), K_CHECK_TOL),
        Check::below("determining_residuals", max_col(&[4, 5, 6, 7]), K_RESIDUAL_TOL),
    ];
    if let Some(dir) = &cfg.output_dir {
        let mut w = create_file(&dir.join("kcheck.csv"))?;
        writeln!(w, "x,y,diff_kx,diff_ky,residual_kx_slope,residual_kx_intercept,residual_ky_slope,residual_ky_intercept")?;
        for r in &rows {
            writeln!(w, "{}", r.map(num).join(","))?;
        }
        w.flush()?;
    }
    Ok(RunSummary {
        scenario: cfg.scenario,
        params: cfg.params(),
        holonomy: None,
        classification: None,
        max_lambda_dev: None,
        est_error: None,
        wall_time_s: None,
        checks,
    })
}

/// Runs one scenario and, when an output directory is set, writes its trace and `summary.json`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let started = Instant::now();
    let mut summary = match cfg.scenario {
        ScenarioKind::NoEp
        | ScenarioKind::EpMinus
        | ScenarioKind::EpPlus
        | ScenarioKind::BothEps
        | ScenarioKind::Winding => run_loop_scenario(cfg)?,
        ScenarioKind::GateCycle => run_gate_cycle(cfg)?,
        ScenarioKind::FlatnessScan => run_flatness(cfg)?,
        ScenarioKind::KCheck => run_k_check(cfg)?,
        ScenarioKind::MetricCheck => run_metric_check(cfg)?,
    };
    if cfg.timing {
        summary.wall_time_s = Some(started.elapsed().as_secs_f64());
    }
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), summary.to_json()?)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub hash: String,
    pub scenario: ScenarioKind,
    pub params: ScenarioParams,
    /// Run directory relative to the sweep root.
    pub dir: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub summary: Option<RunSummary>,
}

/// Runs every config in parallel, each into `root/<hash>/`, then writes `root/index.json`.
///
/// Duplicate configs run once. A failing run is recorded and the sweep goes on.
pub fn sweep(grid: &[ScenarioConfig], root: &FsPath) -> Result<Vec<SweepEntry>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut seen = std::collections::HashSet::new();
    let unique: Vec<(String, ScenarioConfig)> = grid
        .iter()
        .map(|c| (c.hash(), c))
        .filter(|(h, _)| seen.insert(h.clone()))
        .map(|(h, c)| {
            let mut c = c.clone();
            c.output_dir = Some(root.join(&h));
            (h, c)
        })
        .collect();

    let entries: Vec<SweepEntry> = unique
        .par_iter()
        .map(|(hash, cfg)| {
            let outcome = run_scenario(cfg);
            SweepEntry {
                hash: hash.clone(),
                scenario: cfg.scenario,
                params: cfg.params(),
                dir: hash.clone(),
                exit_code: exit_code(&outcome),
                error: outcome.as_ref().err().map(|e| e.to_string()),
                summary: outcome.ok(),
            }
        })
        .collect();

    #[derive(Serialize)]
    struct IndexEntry<'a> {
        scenario: ScenarioKind,
        params: &'a ScenarioParams,
        dir: &'a str,
        exit_code: i32,
        error: &'a Option<String>,
    }
    let index: BTreeMap<&str, IndexEntry> = entries
        .iter()
        .map(|e| {
            (
                e.hash.as_str(),
                IndexEntry {
                    scenario: e.scenario,
                    params: &e.params,
                    dir: &e.dir,
                    exit_code: e.exit_code,
                    error: &e.error,
                },
            )
        })
        .collect();
    fs::create_dir_all(root)?;
    fs::write(root.join("index.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(entries)
}
