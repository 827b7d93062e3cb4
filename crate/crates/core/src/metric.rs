//! Metric evolution `∇_μ G = 0` and norm conservation along paths.
//!
//! The metric obeys `dG/ds = Σ_μ (dq^μ/ds)(i G K_μ − i K_μ† G)`, so that
//! `U† G(s) U = G(s₀)` for the evolution operator `U` of the same path and
//! `⟨ψ(s)|G(s)|ψ(s)⟩` is constant. `G` is re-symmetrised after every step and
//! the asymmetry removed is kept as a diagnostic.

use crate::error::{Error, Result};
use crate::matrix::{c, hermitian_eigenvalues2, is_positive_definite, ComplexMat, C64};
use crate::model::{BasePoint, Direction, GeneratorField};
use crate::ode::{self, MIN_STEPS_PER_SEGMENT};
use crate::path::Path;
use crate::transport::DEFAULT_EP_CLEARANCE;

const I: C64 = c(0.0, 1.0);

/// A state `|ψ⟩` in the fibre; normalisation is relative to a metric.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    components: Vec<C64>,
}

impl StateVector {
    pub fn new(components: Vec<C64>) -> Self {
        assert!(
            components.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "state components must be finite"
        );
        Self { components }
    }

    /// `|0⟩`, `|1⟩`, … of the computational basis.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![c(0.0, 0.0); dim];
        v[k] = c(1.0, 0.0);
        Self::new(v)
    }

    pub fn components(&self) -> &[C64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `⟨ψ|G|ψ⟩`.
    pub fn metric_norm(&self, g: &ComplexMat) -> Result<C64> {
        let gv = g.mul_vec(&self.components)?;
        Ok(self.components.iter().zip(&gv).map(|(a, b)| a.conj() * b).sum())
    }

    /// `⟨ψ|ψ⟩` in the plain Euclidean inner product.
    pub fn euclidean_norm_sqr(&self) -> f64 {
        self.components.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Rescaled so that `⟨ψ|G|ψ⟩ = 1`.
    pub fn normalized_in(&self, g: &ComplexMat) -> Result<Self> {
        let n = self.metric_norm(g)?.re;
        if !(n > 0.0) {
            return Err(Error::Domain("state has non-positive metric norm".into()));
        }
        let k = 1.0 / n.sqrt();
        Ok(Self::new(self.components.iter().map(|z| z * k).collect()))
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, k: C64) -> Self {
        Self::new(self.components.iter().map(|z| z * k).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub s: f64,
    pub point: BasePoint,
    pub g: ComplexMat,
}

#[derive(Debug, Clone)]
pub struct MetricState {
    pub g: ComplexMat,
    pub base: BasePoint,
    pub history: Vec<MetricSample>,
    /// Largest relative asymmetry `‖G − G†‖/‖G‖` removed by symmetrisation.
    pub max_asymmetry: f64,
    /// Smallest eigenvalue of `G` seen along the path.
    pub min_eigenvalue: f64,
}

fn min_eigenvalue(g: &ComplexMat) -> Result<f64> {
    if g.dim() == 2 {
        return Ok(hermitian_eigenvalues2(g)?[0]);
    }
    // only the sign matters beyond 2×2
    Ok(if is_positive_definite(g)? { f64::MIN_POSITIVE } else { 0.0 })
}

fn check_initial_metric(g0: &ComplexMat, s: f64) -> Result<()> {
    if !is_positive_definite(g0)? {
        return Err(Error::PositivityLost {
            s,
            min_eigenvalue: min_eigenvalue(g0)?,
        });
    }
    Ok(())
}

/// Per-step bookkeeping shared by the metric integrations.
struct MetricMonitor {
    max_asymmetry: f64,
    min_eigenvalue: f64,
    failure: Option<Error>,
}

impl MetricMonitor {
    fn new() -> Self {
        Self {
            max_asymmetry: 0.0,
            min_eigenvalue: f64::INFINITY,
            failure: None,
        }
    }

    fn visit(&mut self, s: f64, g: &mut ComplexMat) {
        let norm = g.frobenius_norm();
        if norm > 0.0 {
            self.max_asymmetry = self.max_asymmetry.max(g.hermitian_defect() / norm);
        }
        *g = g.hermitian_part();
        match min_eigenvalue(g) {
            Ok(m) => {
                self.min_eigenvalue = self.min_eigenvalue.min(m);
                if !(m > 0.0) && self.failure.is_none() {
                    self.failure = Some(Error::PositivityLost { s, min_eigenvalue: m });
                }
            }
            Err(e) => {
                if self.failure.is_none() {
                    self.failure = Some(e);
                }
            }
        }
    }
}

/// Integrates the metric along `path` from `g0` with `steps` RK4 steps per segment.
pub fn evolve_metric<G: GeneratorField + ?Sized>(
    path: &Path,
    field: &G,
    g0: &ComplexMat,
    steps: usize,
) -> Result<MetricState> {
    evolve_metric_with(path, field, g0, steps, DEFAULT_EP_CLEARANCE)
}

pub fn evolve_metric_with<G: GeneratorField + ?Sized>(
    path: &Path,
    field: &G,
    g0: &ComplexMat,
    steps: usize,
    ep_clearance: f64,
) -> Result<MetricState> {
    check_initial_metric(g0, path.start())?;
    let mut monitor = MetricMonitor::new();
    let mut history = Vec::new();
    let g = ode::integrate(path, field, steps, ep_clearance, g0.clone(), ode::metric_rhs, |s, p, g| {
        monitor.visit(s, g);
        history.push(MetricSample {
            s,
            point: p.clone(),
            g: g.clone(),
        });
    })?;
    if let Some(e) = monitor.failure {
        return Err(e);
    }
    Ok(MetricState {
        g,
        base: path.end_point(),
        history,
        max_asymmetry: monitor.max_asymmetry,
        min_eigenvalue: monitor.min_eigenvalue,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub s: f64,
    pub point: BasePoint,
    pub u: ComplexMat,
    pub g: ComplexMat,
}

/// `U` and `G` integrated together on one step grid.
#[derive(Debug, Clone)]
pub struct JointTransport {
    pub samples: Vec<JointSample>,
    pub u: ComplexMat,
    pub g: ComplexMat,
    pub g0: ComplexMat,
    /// Largest difference between the `N`- and `2N`-step solutions of `U` and `G` on the shared grid.
    pub est_error: f64,
    pub max_asymmetry: f64,
    pub min_eigenvalue: f64,
}

impl JointTransport {
    /// `‖U† G_end U − G₀‖_F`.
    pub fn metric_holonomy_defect(&self) -> f64 {
        let back = &(&self.u.adjoint() * &self.g) * &self.u;
        (&back - &self.g0).frobenius_norm()
    }
}

pub fn joint_transport<G: GeneratorField + ?Sized>(
    path: &Path,
    field: &G,
    g0: &ComplexMat,
    steps: usize,
) -> Result<JointTransport> {
    check_initial_metric(g0, path.start())?;
    if steps < MIN_STEPS_PER_SEGMENT {
        return Err(Error::TooFewSteps {
            steps,
            min: MIN_STEPS_PER_SEGMENT,
        });
    }
    let id = ComplexMat::identity(field.dim());
    let rhs = |a: &ComplexMat, y: &(ComplexMat, ComplexMat)| {
        (ode::transport_rhs(a, &y.0), ode::metric_rhs(a, &y.1))
    };

    let mut monitor = MetricMonitor::new();
    let mut samples = Vec::new();
    let (u, g) = ode::integrate(
        path,
        field,
        steps,
        DEFAULT_EP_CLEARANCE,
        (id.clone(), g0.clone()),
        rhs,
        |s, p, y| {
            monitor.visit(s, &mut y.1);
            samples.push(JointSample {
                s,
                point: p.clone(),
                u: y.0.clone(),
                g: y.1.clone(),
            });
        },
    )?;
    if let Some(e) = monitor.failure {
        return Err(e);
    }

    let mut est_error = 0.0f64;
    let mut k = 0usize;
    let mut fine_monitor = MetricMonitor::new();
    ode::integrate(
        path,
        field,
        2 * steps,
        DEFAULT_EP_CLEARANCE,
        (id, g0.clone()),
        rhs,
        |s, _, y| {
            fine_monitor.visit(s, &mut y.1);
            if k.is_multiple_of(2) {
                if let Some(c) = samples.get(k / 2) {
                    let du = (&y.0 - &c.u).frobenius_norm();
                    let dg = (&y.1 - &c.g).frobenius_norm();
                    est_error = est_error.max(du).max(dg);
                }
            }
            k += 1;
        },
    )?;

    Ok(JointTransport {
        samples,
        u,
        g,
        g0: g0.clone(),
        est_error,
        max_asymmetry: monitor.max_asymmetry,
        min_eigenvalue: monitor.min_eigenvalue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub s: f64,
    /// `Re ⟨ψ(s)|G(s)|ψ(s)⟩`.
    pub metric_norm: f64,
    /// `Im ⟨ψ(s)|G(s)|ψ(s)⟩`, zero up to round-off.
    pub metric_norm_imag: f64,
    /// `⟨ψ(s)|ψ(s)⟩` with the Euclidean inner product.
    pub euclidean_norm: f64,
}

#[derive(Debug, Clone)]
pub struct NormTrace {
    pub samples: Vec<NormSample>,
    /// `max |⟨ψ|G|ψ⟩ − 1|`.
    pub max_deviation: f64,
    /// `max |⟨ψ|ψ⟩ − 1|`.
    pub max_euclidean_drift: f64,
    pub joint: JointTransport,
}

/// Co-evolves `ψ` and `G` and records both norms of `ψ` along the path.
pub fn norm_along_path<G: GeneratorField + ?Sized>(
    psi0: &StateVector,
    path: &Path,
    field: &G,
    g0: &ComplexMat,
    steps: usize,
) -> Result<NormTrace> {
    let n0 = psi0.metric_norm(g0)?;
    if (n0 - 1.0).norm() > 1e-10 {
        return Err(Error::Domain(format!(
            "initial state must satisfy <psi|G|psi> = 1, got {n0}"
        )));
    }
    let joint = joint_transport(path, field, g0, steps)?;
    let mut samples = Vec::with_capacity(joint.samples.len());
    let mut max_deviation = 0.0f64;
    let mut max_euclidean_drift = 0.0f64;
    for smp in &joint.samples {
        let psi = StateVector::new(smp.u.mul_vec(psi0.components())?);
        let n = psi.metric_norm(&smp.g)?;
        let e = psi.euclidean_norm_sqr();
        max_deviation = max_deviation.max((n - 1.0).norm());
        max_euclidean_drift = max_euclidean_drift.max((e - 1.0).abs());
        samples.push(NormSample {
            s: smp.s,
            metric_norm: n.re,
            metric_norm_imag: n.im,
            euclidean_norm: e,
        });
    }
    Ok(NormTrace {
        samples,
        max_deviation,
        max_euclidean_drift,
        joint,
    })
}

/// `‖∂_μ G − i G K_μ + i K_μ† G‖_F` at `p`, given `G` and its derivative along `dir`.
pub fn compatibility_residual<G: GeneratorField + ?Sized>(
    field: &G,
    p: &BasePoint,
    g: &ComplexMat,
    dg: &ComplexMat,
    dir: Direction,
) -> Result<f64> {
    let k = field.generator(dir, p)?;
    let covariant = &(dg - &(g * &k).scale(I)) + &(&k.adjoint() * g).scale(I);
    Ok(covariant.frobenius_norm())
}

/// Compatibility residual along the path tangent at history sample `k`,
/// with `dG/ds` from central differences of the recorded trajectory.
pub fn trajectory_compatibility<G: GeneratorField + ?Sized>(
    field: &G,
    path: &Path,
    state: &MetricState,
    k: usize,
) -> Result<f64> {
    let h = &state.history;
    if k == 0 || k + 1 >= h.len() {
        return Err(Error::Domain(format!("sample {k} has no neighbours on both sides")));
    }
    let (prev, cur, next) = (&h[k - 1], &h[k], &h[k + 1]);
    let dg = (&next.g - &prev.g).scale_re(1.0 / (next.s - prev.s));
    let v = path.velocity(cur.s);
    let a = field.contract(&cur.point, &v)?.scale(-I);
    let expected = ode::metric_rhs(&a, &cur.g);
    Ok((&dg - &expected).frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{hamiltonian_at, EpModel, ReferenceConstants};
    use crate::path::LoopSpec;

    #[test]
    fn constant_path_keeps_metric() {
        let p = Path::constant(BasePoint::txy(0.0, 0.5, 0.0), 1.0).unwrap();
        let m = evolve_metric(&p, &EpModel, &ComplexMat::identity(2), 200).unwrap();
        assert_eq!(m.g, ComplexMat::identity(2));
    }

    #[test]
    fn hermitian_point_keeps_identity_metric_in_time() {
        let p = Path::line(BasePoint::txy(0.0, 0.0, 0.0), BasePoint::txy(5.0, 0.0, 0.0)).unwrap();
        let m = evolve_metric(&p, &EpModel, &ComplexMat::identity(2), 1000).unwrap();
        for smp in &m.history {
            assert!((&smp.g - &ComplexMat::identity(2)).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_initial_metric() {
        let p = LoopSpec::circle_origin(0.5).to_path().unwrap();
        let neg = ComplexMat::identity(2).scale_re(-1.0);
        assert!(matches!(
            evolve_metric(&p, &EpModel, &neg, 200),
            Err(Error::PositivityLost { .. })
        ));
        let skew = ComplexMat::real2(1.0, 0.5, 0.0, 1.0);
        assert!(matches!(
            evolve_metric(&p, &EpModel, &skew, 200),
            Err(Error::NotHermitian { .. })
        ));
        let psi = StateVector::new(vec![c(2.0, 0.0), c(0.0, 0.0)]);
        assert!(norm_along_path(&psi, &p, &EpModel, &ComplexMat::identity(2), 200).is_err());
    }

    #[test]
    fn compatibility_residual_examples() {
        let p = BasePoint::txy(0.0, 0.0, 0.0);
        let id = ComplexMat::identity(2);
        let zero = ComplexMat::zeros(2);
        assert_eq!(compatibility_residual(&EpModel, &p, &id, &zero, Direction::Time).unwrap(), 0.0);

        // 𝟙 + 0.1σ_z at a non-Hermitian point is not covariantly constant in time
        let q = BasePoint::txy(0.0, 0.5, 0.0);
        let k = ReferenceConstants::new();
        let g = id.add_scaled(0.1, &k.sigma_z);
        let r = compatibility_residual(&EpModel, &q, &g, &zero, Direction::Time).unwrap();
        assert!(r > 1e-2, "{r}");
        // and the direct evaluation agrees with −i G H + i H† G
        let h = hamiltonian_at(0.5, 0.0);
        let direct = (&(&h.adjoint() * &g) - &(&g * &h)).scale(I).frobenius_norm();
        assert!((r - direct).abs() < 1e-15);
    }

    #[test]
    fn state_vector_helpers() {
        let g = ComplexMat::real2(2.0, 0.0, 0.0, 1.0);
        let psi = StateVector::basis(2, 0).normalized_in(&g).unwrap();
        assert!((psi.metric_norm(&g).unwrap() - 1.0).norm() < 1e-15);
        assert!((psi.euclidean_norm_sqr() - 0.5).abs() < 1e-15);
    }
}
