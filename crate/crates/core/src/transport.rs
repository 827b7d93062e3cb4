//! Evolution operators along paths, and the holonomies of closed loops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{frobenius_distance, ComplexMat, C64};
use crate::metric::StateVector;
use crate::model::{BasePoint, GeneratorField, ReferenceConstants};
use crate::ode::{self, MIN_STEPS_PER_SEGMENT};
use crate::path::{Path, CLOSURE_TOL};

/// Default minimum distance between a path and any exceptional locus.
pub const DEFAULT_EP_CLEARANCE: f64 = 1e-3;
/// Default Frobenius radius for recognising a power of `ℐ`.
pub const DEFAULT_CLASSIFICATION_TOL: f64 = 1e-6;
/// Default off-diagonal bound for `S⁻¹ U S` to count as diagonal.
pub const DEFAULT_DIAGONAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct TransportConfig {
    /// RK4 steps per path segment.
    pub steps: usize,
    pub ep_clearance: f64,
    /// Fail with `StepTooCoarse` when the error estimate exceeds this.
    pub max_est_error: Option<f64>,
    /// Keep `U(s)` at every step.
    pub record_samples: bool,
}

impl TransportConfig {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            ..Self::default()
        }
    }
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            steps: 20_000,
            ep_clearance: DEFAULT_EP_CLEARANCE,
            max_est_error: None,
            record_samples: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSample {
    pub s: f64,
    pub point: BasePoint,
    pub u: ComplexMat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSample {
    pub s: f64,
    /// `(S⁻¹ U S)₁₁`.
    pub lambda: C64,
    /// Largest off-diagonal magnitude of `S⁻¹ U S`.
    pub offdiag: f64,
}

/// Outcome of integrating the evolution operator along a path.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub samples: Vec<TransportSample>,
    /// `U` at the path end; the holonomy when the path is closed.
    pub holonomy: ComplexMat,
    pub closed: bool,
    pub start: BasePoint,
    pub end: BasePoint,
    /// Present when `S⁻¹ U S` stayed diagonal along the whole path.
    pub lambda_trace: Option<Vec<LambdaSample>>,
    /// Total RK4 steps of the reported solution.
    pub step_count: usize,
    /// Largest `‖U_N(s) − U_2N(s)‖_F` over the shared grid points.
    pub est_error: f64,
    /// Largest `|det U(s) − 1|` over the recorded samples.
    pub max_det_deviation: f64,
}

impl TransportResult {
    pub fn final_sample(&self) -> Option<&TransportSample> {
        self.samples.last()
    }
}

/// Integrates `dU/ds = −i (dq^μ/ds) K_μ U`, `U(s₀) = 𝟙`, with `steps` RK4 steps per segment.
pub fn integrate_transport<G: GeneratorField + ?Sized>(
    path: &Path,
    field: &G,
    steps: usize,
) -> Result<TransportResult> {
    integrate_transport_with(path, field, &TransportConfig::new(steps))
}

pub fn integrate_transport_with<G: GeneratorField + ?Sized>(
    path: &Path,
    field: &G,
    cfg: &TransportConfig,
) -> Result<TransportResult> {
    if cfg.steps < MIN_STEPS_PER_SEGMENT {
        return Err(Error::TooFewSteps {
            steps: cfg.steps,
            min: MIN_STEPS_PER_SEGMENT,
        });
    }
    let id = ComplexMat::identity(field.dim());

    let mut coarse: Vec<ComplexMat> = Vec::new();
    let mut samples = Vec::new();
    let mut max_det_deviation = 0.0f64;
    let holonomy = ode::integrate(
        path,
        field,
        cfg.steps,
        cfg.ep_clearance,
        id.clone(),
        ode::transport_rhs,
        |s, p, u| {
            max_det_deviation = max_det_deviation.max((u.determinant() - 1.0).norm());
            coarse.push(u.clone());
            if cfg.record_samples {
                samples.push(TransportSample {
                    s,
                    point: p.clone(),
                    u: u.clone(),
                });
            }
        },
    )?;

    // same path at twice the resolution; compare on the coarse grid
    let mut est_error = 0.0f64;
    let mut k = 0usize;
    ode::integrate(
        path,
        field,
        2 * cfg.steps,
        cfg.ep_clearance,
        id,
        ode::transport_rhs,
        |_, _, u| {
            if k.is_multiple_of(2) {
                if let Some(c) = coarse.get(k / 2) {
                    est_error = est_error.max((&*u - c).frobenius_norm());
                }
            }
            k += 1;
        },
    )?;
    if let Some(tol) = cfg.max_est_error {
        if !(est_error <= tol) {
            return Err(Error::StepTooCoarse {
                est_error,
                tolerance: tol,
            });
        }
    }

    let mut result = TransportResult {
        samples,
        holonomy,
        closed: path.is_closed(),
        start: path.start_point(),
        end: path.end_point(),
        lambda_trace: None,
        step_count: cfg.steps * path.segments().len(),
        est_error,
        max_det_deviation,
    };
    if field.dim() == 2 && !result.samples.is_empty() {
        result.lambda_trace = lambda_trace(&result).ok();
    }
    Ok(result)
}

/// `λ(s) = (S⁻¹ U(s) S)₁₁` along the recorded samples.
pub fn lambda_trace(result: &TransportResult) -> Result<Vec<LambdaSample>> {
    lambda_trace_with_tol(result, DEFAULT_DIAGONAL_TOL)
}

pub fn lambda_trace_with_tol(result: &TransportResult, tol: f64) -> Result<Vec<LambdaSample>> {
    let k = ReferenceConstants::new();
    let s_inv = k.s_inv();
    result
        .samples
        .iter()
        .map(|smp| {
            if smp.u.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: smp.u.dim(),
                });
            }
            let xi = &(&s_inv * &smp.u) * &k.s;
            let offdiag = xi[(0, 1)].norm().max(xi[(1, 0)].norm());
            if !(offdiag <= tol) {
                return Err(Error::NotDiagonalizedByS { s: smp.s, offdiag });
            }
            Ok(LambdaSample {
                s: smp.s,
                lambda: xi[(0, 0)],
                offdiag,
            })
        })
        .collect()
}

/// Element of the cyclic group generated by `ℐ`, or `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HolonomyLabel {
    #[serde(rename = "identity")]
    Identity,
    I,
    I2,
    I3,
    #[serde(rename = "other")]
    Other,
}

impl HolonomyLabel {
    /// `ℐ^k`, `k` taken mod 4.
    pub fn from_power(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => Self::Identity,
            1 => Self::I,
            2 => Self::I2,
            _ => Self::I3,
        }
    }

    pub fn power(self) -> Option<u8> {
        match self {
            Self::Identity => Some(0),
            Self::I => Some(1),
            Self::I2 => Some(2),
            Self::I3 => Some(3),
            Self::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::I => "I",
            Self::I2 => "I2",
            Self::I3 => "I3",
            Self::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyClass {
    pub label: HolonomyLabel,
    /// Frobenius distance to the nearest of `𝟙, ℐ, ℐ², ℐ³`.
    pub distance: f64,
    pub winding_mod4: Option<u8>,
}

pub fn classify_holonomy(h: &ComplexMat) -> HolonomyClass {
    classify_holonomy_with_tol(h, DEFAULT_CLASSIFICATION_TOL)
}

pub fn classify_holonomy_with_tol(h: &ComplexMat, tol: f64) -> HolonomyClass {
    if h.dim() != 2 {
        return HolonomyClass {
            label: HolonomyLabel::Other,
            distance: f64::INFINITY,
            winding_mod4: None,
        };
    }
    let i_hol = ReferenceConstants::new().i_hol;
    let mut power = ComplexMat::identity(2);
    let mut best = (0u8, f64::INFINITY);
    for k in 0..4u8 {
        let d = frobenius_distance(h, &power).unwrap_or(f64::INFINITY);
        if d < best.1 {
            best = (k, d);
        }
        power = &i_hol * &power;
    }
    let (k, distance) = best;
    if distance < tol {
        let label = HolonomyLabel::from_power(k as i64);
        HolonomyClass {
            label,
            distance,
            winding_mod4: Some(k),
        }
    } else {
        HolonomyClass {
            label: HolonomyLabel::Other,
            distance,
            winding_mod4: None,
        }
    }
}

/// Evolution operator of `a` followed by `b`: `U_b · U_a`.
pub fn compose(a: &TransportResult, b: &TransportResult) -> Result<ComplexMat> {
    let gap = a.end.distance(&b.start);
    if !(gap <= CLOSURE_TOL) {
        return Err(Error::EndpointMismatch(format!(
            "first path ends at {:?}, second starts at {:?}",
            a.end, b.start
        )));
    }
    b.holonomy.matmul(&a.holonomy)
}

/// Composes a chain of results in order of traversal.
pub fn compose_all(results: &[TransportResult]) -> Result<ComplexMat> {
    let (first, rest) = results
        .split_first()
        .ok_or_else(|| Error::InvalidPath("nothing to compose".into()))?;
    let mut acc = first.holonomy.clone();
    let mut prev = first;
    for r in rest {
        let gap = prev.end.distance(&r.start);
        if !(gap <= CLOSURE_TOL) {
            return Err(Error::EndpointMismatch(format!("gap {gap:e} between consecutive paths")));
        }
        acc = r.holonomy.matmul(&acc)?;
        prev = r;
    }
    Ok(acc)
}

/// `U ψ₀` at the path end.
pub fn transport_state(psi0: &StateVector, result: &TransportResult) -> Result<StateVector> {
    Ok(StateVector::new(result.holonomy.mul_vec(psi0.components())?))
}
