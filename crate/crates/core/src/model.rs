//! Hamiltonian families and the two-level model with a pair of exceptional points.
//!
//! The model is
//!
//! ```text
//! H(x, y) = [[ −i x , 1 + i y ],
//!            [ 1 + i y ,  i x  ]]
//! ```
//!
//! with spectrum `±√((1 + i y)² − x²)`. The spectrum coalesces at
//! `(x, y) = (±1, 0)`, which become the lines `ℓ±(t) = (t, ±1, 0)` in the
//! time-parameter base space. The closed-form generators below are the
//! adiabatic-gauge solution of the flatness equations for this family and act
//! as the reference every numerical route is checked against.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::matrix::{c, commutator, ComplexMat, C64, DEFAULT_EP_THRESHOLD};

const I: C64 = c(0.0, 1.0);

/// A point `(t, q¹, …, qⁿ)` of the base space.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePoint {
    pub t: f64,
    pub q: SmallVec<[f64; 2]>,
}

impl BasePoint {
    pub fn new(t: f64, q: &[f64]) -> Self {
        Self {
            t,
            q: SmallVec::from_slice(q),
        }
    }

    /// A point of the two-parameter model base space.
    pub fn txy(t: f64, x: f64, y: f64) -> Self {
        Self {
            t,
            q: SmallVec::from_buf([x, y]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.q.iter().all(|v| v.is_finite())
    }

    /// Component along a base-space direction.
    pub fn coord(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Time => self.t,
            Direction::Param(i) => self.q[i],
        }
    }

    /// Copy with one coordinate shifted by `delta`.
    pub fn shifted(&self, dir: Direction, delta: f64) -> Self {
        let mut p = self.clone();
        match dir {
            Direction::Time => p.t += delta,
            Direction::Param(i) => p.q[i] += delta,
        }
        p
    }

    /// Euclidean distance in the full base space.
    pub fn distance(&self, other: &BasePoint) -> f64 {
        let dt = self.t - other.t;
        let dq: f64 = self
            .q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (dt * dt + dq).sqrt()
    }
}

/// A base-space direction: time (`q⁰`) or one of the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Time,
    Param(usize),
}

impl Direction {
    /// All directions of a base space with `n_params` parameters, time first.
    pub fn all(n_params: usize) -> impl Iterator<Item = Direction> {
        std::iter::once(Direction::Time).chain((0..n_params).map(Direction::Param))
    }
}

/// A Hamiltonian depending on a point of the base space.
pub trait HamiltonianFamily: Sync {
    fn dim(&self) -> usize;
    fn n_params(&self) -> usize;
    fn hamiltonian(&self, p: &BasePoint) -> ComplexMat;
    /// `∂H/∂qⁱ` at `p`, for parameter index `i`.
    fn partial(&self, i: usize, p: &BasePoint) -> ComplexMat;
    fn is_time_independent(&self) -> bool {
        true
    }
    /// Distance from `p` to the nearest known exceptional locus, if the family knows it.
    fn ep_distance(&self, _p: &BasePoint) -> Option<f64> {
        None
    }
}

/// A source of evolution generators `K_μ` on the base space (`K_0 = H`).
pub trait GeneratorField: Sync {
    fn dim(&self) -> usize;
    fn n_params(&self) -> usize;
    fn generator(&self, dir: Direction, p: &BasePoint) -> Result<ComplexMat>;

    /// Distance to the nearest singular locus of the generators.
    fn ep_distance(&self, _p: &BasePoint) -> f64 {
        f64::INFINITY
    }

    /// `Σ_μ v^μ K_μ(p)` for a tangent vector `v = (dt/ds, dq/ds)`.
    fn contract(&self, p: &BasePoint, v: &BasePoint) -> Result<ComplexMat> {
        let mut acc = ComplexMat::zeros(self.dim());
        for dir in Direction::all(self.n_params()) {
            let w = v.coord(dir);
            if w != 0.0 {
                acc = acc.add_scaled(w, &self.generator(dir, p)?);
            }
        }
        Ok(acc)
    }
}

/// `H(x, y)` of the two-level model.
pub fn hamiltonian_at(x: f64, y: f64) -> ComplexMat {
    let off = c(1.0, y);
    ComplexMat::mat2(-I * x, off, off, I * x)
}

/// `(1 + i y)² − x²`; the eigenvalues of `H(x, y)` are `±√discriminant`.
pub fn discriminant(x: f64, y: f64) -> C64 {
    let a = c(1.0, y);
    a * a - x * x
}

/// `∂H/∂x`.
pub fn dh_dx() -> ComplexMat {
    ComplexMat::mat2(-I, c(0.0, 0.0), c(0.0, 0.0), I)
}

/// `∂H/∂y`.
pub fn dh_dy() -> ComplexMat {
    ComplexMat::mat2(c(0.0, 0.0), I, I, c(0.0, 0.0))
}

fn checked_discriminant(x: f64, y: f64) -> Result<C64> {
    let d = discriminant(x, y);
    if !(d.norm() >= DEFAULT_EP_THRESHOLD) {
        return Err(Error::AtExceptionalPoint {
            discriminant: d.norm(),
        });
    }
    Ok(d)
}

/// Closed-form x-generator `K_x(x, y, t)`.
pub fn kx_closed(x: f64, y: f64, t: f64) -> Result<ComplexMat> {
    let d = checked_discriminant(x, y)?;
    let a = c(1.0, y);
    let pre = -1.0 / d;
    Ok(ComplexMat::mat2(
        pre * (-I * x * x * t),
        pre * (a * x * t - a / 2.0),
        pre * (a * x * t + a / 2.0),
        pre * (I * x * x * t),
    ))
}

/// Closed-form y-generator `K_y(x, y, t)`.
pub fn ky_closed(x: f64, y: f64, t: f64) -> Result<ComplexMat> {
    let d = checked_discriminant(x, y)?;
    let a = c(1.0, y);
    let pre = 1.0 / d;
    Ok(ComplexMat::mat2(
        pre * (a * x * t),
        pre * (I * a * a * t - I * x / 2.0),
        pre * (I * a * a * t + I * x / 2.0),
        pre * (-a * x * t),
    ))
}

/// `T·m·T` with `T = σ_x`; maps `H(x, y)` to `H(−x, y)`.
pub fn apply_t_symmetry(m: &ComplexMat) -> ComplexMat {
    assert_eq!(m.dim(), 2, "T symmetry acts on 2×2 matrices");
    ComplexMat::mat2(m[(1, 1)], m[(1, 0)], m[(0, 1)], m[(0, 0)])
}

/// `λ_𝒪(θ)` for the loop of radius `r` about the origin.
///
/// Solves `d ln λ/dθ = i r (r − i sin θ) / (2 (1 − r² + 2 i r sin θ))` with `λ(0) = 1`.
/// The denominator factors as `(1 + r e^{iθ})(1 − r e^{−iθ})`, which gives
/// `λ⁴ = (1 + r)(1 − r e^{−iθ}) / ((1 − r)(1 + r e^{iθ}))`. Its real part is
/// `∝ 1 − r² cos 2θ > 0`, so the principal fourth root is continuous in `θ`.
pub fn lambda_ref_origin(r: f64, theta: f64) -> Result<C64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("origin loop radius must lie in (0, 1), got {r}")));
    }
    let radicand = (1.0 + r) * (1.0 - C64::from_polar(r, -theta))
        / ((1.0 - r) * (1.0 + C64::from_polar(r, theta)));
    Ok(radicand.sqrt().sqrt())
}

/// `λ_-(θ)` for the loop of radius `ρ` about the exceptional point at `x = −1`.
pub fn lambda_ref_minus(rho: f64, theta: f64) -> Result<C64> {
    if !(rho > 0.0 && rho < 2.0) {
        return Err(Error::Domain(format!("EP loop radius must lie in (0, 2), got {rho}")));
    }
    let radicand = (2.0 - C64::from_polar(rho, -theta)) / (2.0 - rho);
    Ok(C64::from_polar(1.0, -theta / 4.0) * radicand.sqrt().sqrt())
}

/// `λ_+(θ) = 1/λ_-(θ)`: the loop about `x = +1` obeys the same equation with the sign flipped.
pub fn lambda_ref_plus(rho: f64, theta: f64) -> Result<C64> {
    Ok(lambda_ref_minus(rho, theta)?.inv())
}

/// Fixed matrices that appear in the holonomy analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConstants {
    /// Diagonalizes the loop generators: `S σ_z S⁻¹`.
    pub s: ComplexMat,
    pub sigma_z: ComplexMat,
    /// `σ_x`, the mirror `x ↦ −x`.
    pub t: ComplexMat,
    /// Holonomy of one counter-clockwise turn about `ℓ_-`.
    pub i_hol: ComplexMat,
    pub identity: ComplexMat,
}

impl ReferenceConstants {
    pub fn new() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            s: ComplexMat::mat2(c(h, 0.0), c(0.0, -h), c(0.0, -h), c(h, 0.0)),
            sigma_z: ComplexMat::real2(1.0, 0.0, 0.0, -1.0),
            t: ComplexMat::real2(0.0, 1.0, 1.0, 0.0),
            i_hol: ComplexMat::real2(0.0, 1.0, -1.0, 0.0),
            identity: ComplexMat::identity(2),
        }
    }

    /// `S⁻¹` (S is unitary, so this is `S†`).
    pub fn s_inv(&self) -> ComplexMat {
        self.s.adjoint()
    }
}

impl Default for ReferenceConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Exceptional points of the model and their world-lines in the base space.
#[derive(Debug, Clone, PartialEq)]
pub struct EpLocus {
    pub points: Vec<[f64; 2]>,
}

impl EpLocus {
    pub fn model() -> Self {
        Self {
            points: vec![[-1.0, 0.0], [1.0, 0.0]],
        }
    }

    /// `ℓ(t) = (t, point)` for each exceptional point.
    pub fn lines(&self, t: f64) -> Vec<BasePoint> {
        self.points.iter().map(|p| BasePoint::new(t, p)).collect()
    }

    /// Parameter-space distance from `(x, y)` to the nearest exceptional point.
    pub fn nearest_distance(&self, x: f64, y: f64) -> f64 {
        self.points
            .iter()
            .map(|p| (x - p[0]).hypot(y - p[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The two-level model as a Hamiltonian family with closed-form generators.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpModel;

impl HamiltonianFamily for EpModel {
    fn dim(&self) -> usize {
        2
    }
    fn n_params(&self) -> usize {
        2
    }
    fn hamiltonian(&self, p: &BasePoint) -> ComplexMat {
        hamiltonian_at(p.q[0], p.q[1])
    }
    fn partial(&self, i: usize, _p: &BasePoint) -> ComplexMat {
        match i {
            0 => dh_dx(),
            1 => dh_dy(),
            _ => panic!("model has two parameters, got index {i}"),
        }
    }
    fn ep_distance(&self, p: &BasePoint) -> Option<f64> {
        Some(EpLocus::model().nearest_distance(p.q[0], p.q[1]))
    }
}

impl GeneratorField for EpModel {
    fn dim(&self) -> usize {
        2
    }
    fn n_params(&self) -> usize {
        2
    }
    fn generator(&self, dir: Direction, p: &BasePoint) -> Result<ComplexMat> {
        let (x, y) = (p.q[0], p.q[1]);
        match dir {
            Direction::Time => Ok(hamiltonian_at(x, y)),
            Direction::Param(0) => kx_closed(x, y, p.t),
            Direction::Param(1) => ky_closed(x, y, p.t),
            Direction::Param(i) => Err(Error::DimensionMismatch { expected: 2, found: i + 1 }),
        }
    }
    fn ep_distance(&self, p: &BasePoint) -> f64 {
        EpLocus::model().nearest_distance(p.q[0], p.q[1])
    }
}

/// Frobenius norms of the zero-curvature residuals at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessResiduals {
    /// `‖∂_t K_x − ∂_x H + i[H, K_x]‖`
    pub tq_x: f64,
    /// `‖∂_t K_y − ∂_y H + i[H, K_y]‖`
    pub tq_y: f64,
    /// `‖∂_x K_y − ∂_y K_x + i[K_x, K_y]‖`
    pub xy: f64,
}

impl FlatnessResiduals {
    pub fn max(&self) -> f64 {
        self.tq_x.max(self.tq_y).max(self.xy)
    }
}

/// Curvature residuals of any generator field, derivatives by finite differences.
pub fn curvature_residuals<G: GeneratorField + ?Sized>(
    field: &G,
    p: &BasePoint,
    stencil: Stencil,
    h: f64,
) -> Result<Vec<(Direction, Direction, f64)>> {
    let dirs: Vec<Direction> = Direction::all(field.n_params()).collect();
    let mut out = Vec::new();
    for (a, &mu) in dirs.iter().enumerate() {
        for &nu in &dirs[a + 1..] {
            let d_mu_k_nu = fd::derivative(|e| field.generator(nu, &p.shifted(mu, e - p.coord(mu))), p.coord(mu), h, stencil)?;
            let d_nu_k_mu = fd::derivative(|e| field.generator(mu, &p.shifted(nu, e - p.coord(nu))), p.coord(nu), h, stencil)?;
            let k_mu = field.generator(mu, p)?;
            let k_nu = field.generator(nu, p)?;
            let comm = commutator(&k_mu, &k_nu)?;
            let res = &(&d_mu_k_nu - &d_nu_k_mu) + &comm.scale(I);
            out.push((mu, nu, res.frobenius_norm()));
        }
    }
    Ok(out)
}

/// Zero-curvature residuals of the closed-form model generators at `(t, x, y)`.
pub fn flatness_residuals(x: f64, y: f64, t: f64, stencil: Stencil, h: f64) -> Result<FlatnessResiduals> {
    let p = BasePoint::txy(t, x, y);
    let all = curvature_residuals(&EpModel, &p, stencil, h)?;
    let pick = |mu, nu| {
        all.iter()
            .find(|(a, b, _)| *a == mu && *b == nu)
            .map(|r| r.2)
            .unwrap_or(f64::NAN)
    };
    Ok(FlatnessResiduals {
        tq_x: pick(Direction::Time, Direction::Param(0)),
        tq_y: pick(Direction::Time, Direction::Param(1)),
        xy: pick(Direction::Param(0), Direction::Param(1)),
    })
}
