//! Adiabatic-gauge evolution generators for time-independent families.
//!
//! With the gauge `[∂_t K_i, H] = 0` every parameter generator is affine in
//! time, `K_i = t·K_i⁽¹⁾ + K_i⁽⁰⁾`, and zero curvature reduces to
//!
//! ```text
//! [K_i⁽¹⁾, H] = 0
//! K_i⁽¹⁾ + i[H, K_i⁽⁰⁾] = ∂_i H
//! ```
//!
//! In the eigenbasis `V` of `H` with `M = V⁻¹ (∂_i H) V` this is solved by
//! taking `K⁽¹⁾` as the diagonal of `M` and `K⁽⁰⁾` with entries
//! `−i M_ab / (λ_a − λ_b)` off the diagonal. The diagonal of `K⁽⁰⁾` is a
//! gauge freedom and is fixed to zero, which reproduces the closed-form model
//! generators.

use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::matrix::{c, commutator, eig2, ComplexMat, C64};
use crate::model::{BasePoint, Direction, GeneratorField, HamiltonianFamily};

const I: C64 = c(0.0, 1.0);

/// The time-slope and intercept of one parameter generator at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    /// Parameter index `i`.
    pub direction: usize,
    /// `K_i⁽¹⁾`, the coefficient of `t`.
    pub k1: ComplexMat,
    /// `K_i⁽⁰⁾`.
    pub k0: ComplexMat,
    pub base: BasePoint,
}

impl GeneratorPair {
    /// `(‖[K⁽¹⁾, H]‖, ‖K⁽¹⁾ + i[H, K⁽⁰⁾] − ∂_i H‖)`.
    pub fn residuals(&self, h: &ComplexMat, dh: &ComplexMat) -> Result<(f64, f64)> {
        let first = commutator(&self.k1, h)?.frobenius_norm();
        let second = &(&self.k1 + &commutator(h, &self.k0)?.scale(I)) - dh;
        Ok((first, second.frobenius_norm()))
    }
}

/// Solves the determining equations for parameter direction `i` at `p`.
pub fn solve_generator_pair<F: HamiltonianFamily + ?Sized>(
    family: &F,
    i: usize,
    p: &BasePoint,
) -> Result<GeneratorPair> {
    if !family.is_time_independent() {
        return Err(Error::NotTimeIndependent);
    }
    if i >= family.n_params() {
        return Err(Error::DimensionMismatch {
            expected: family.n_params(),
            found: i + 1,
        });
    }
    let h = family.hamiltonian(p);
    let eig = eig2(&h).map_err(|e| match e {
        Error::NearDegenerate { gap, .. } => Error::AtExceptionalPoint {
            discriminant: 0.25 * gap * gap,
        },
        other => other,
    })?;
    let v = &eig.right_eigenvectors;
    let v_inv = v.inverse()?;
    let m = &(&v_inv * &family.partial(i, p)) * v;
    let [l0, l1] = eig.eigenvalues;
    let zero = c(0.0, 0.0);
    let diag = ComplexMat::mat2(m[(0, 0)], zero, zero, m[(1, 1)]);
    let off = ComplexMat::mat2(
        zero,
        -I * m[(0, 1)] / (l0 - l1),
        -I * m[(1, 0)] / (l1 - l0),
        zero,
    );
    Ok(GeneratorPair {
        direction: i,
        k1: &(v * &diag) * &v_inv,
        k0: &(v * &off) * &v_inv,
        base: p.clone(),
    })
}

/// `t·K⁽¹⁾ + K⁽⁰⁾`.
pub fn assemble_k(pair: &GeneratorPair, t: f64) -> ComplexMat {
    pair.k0.add_scaled(t, &pair.k1)
}

/// Residual norms of the mixed-direction determining equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheckReport {
    /// `‖∂_i K_j⁽¹⁾ − ∂_j K_i⁽¹⁾ − i[K_j⁽⁰⁾, K_i⁽¹⁾] + i[K_i⁽⁰⁾, K_j⁽¹⁾]‖`
    pub slope_residual: f64,
    /// `‖∂_i K_j⁽⁰⁾ − ∂_j K_i⁽⁰⁾ − i[K_j⁽⁰⁾, K_i⁽⁰⁾]‖`
    pub intercept_residual: f64,
    /// `‖[K_i⁽¹⁾, K_j⁽¹⁾]‖`, the `t²` coefficient of the curvature.
    pub quadratic_residual: f64,
}

impl CrossCheckReport {
    pub fn max(&self) -> f64 {
        self.slope_residual
            .max(self.intercept_residual)
            .max(self.quadratic_residual)
    }
}

/// Checks the cross-derivative identities between two solved directions,
/// differentiating by re-solving at points shifted by `±h`.
pub fn cross_direction_check<F: HamiltonianFamily + ?Sized>(
    pa: &GeneratorPair,
    pb: &GeneratorPair,
    family: &F,
    p: &BasePoint,
    h: f64,
) -> Result<CrossCheckReport> {
    let (i, j) = (pa.direction, pb.direction);
    let solve_at = |dir: usize, along: usize, e: f64| {
        solve_generator_pair(family, dir, &p.shifted(Direction::Param(along), e))
    };
    let d = |dir: usize, along: usize, slope: bool| {
        fd::derivative(
            |e| {
                let pair = solve_at(dir, along, e)?;
                Ok(if slope { pair.k1 } else { pair.k0 })
            },
            0.0,
            h,
            Stencil::Central2,
        )
    };
    let di_kj1 = d(j, i, true)?;
    let dj_ki1 = d(i, j, true)?;
    let di_kj0 = d(j, i, false)?;
    let dj_ki0 = d(i, j, false)?;

    let slope_rhs = &commutator(&pb.k0, &pa.k1)?.scale(I) - &commutator(&pa.k0, &pb.k1)?.scale(I);
    let slope = &(&di_kj1 - &dj_ki1) - &slope_rhs;
    let intercept = &(&di_kj0 - &dj_ki0) - &commutator(&pb.k0, &pa.k0)?.scale(I);
    Ok(CrossCheckReport {
        slope_residual: slope.frobenius_norm(),
        intercept_residual: intercept.frobenius_norm(),
        quadratic_residual: commutator(&pa.k1, &pb.k1)?.frobenius_norm(),
    })
}

/// Generator field obtained by solving the determining equations pointwise.
#[derive(Debug, Clone)]
pub struct SolvedField<F> {
    pub family: F,
}

impl<F: HamiltonianFamily> SolvedField<F> {
    pub fn new(family: F) -> Self {
        Self { family }
    }
}

impl<F: HamiltonianFamily> GeneratorField for SolvedField<F> {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn n_params(&self) -> usize {
        self.family.n_params()
    }

    fn generator(&self, dir: Direction, p: &BasePoint) -> Result<ComplexMat> {
        match dir {
            Direction::Time => Ok(self.family.hamiltonian(p)),
            Direction::Param(i) => Ok(assemble_k(&solve_generator_pair(&self.family, i, p)?, p.t)),
        }
    }

    /// Uses the family's own locus when it knows one; otherwise the spectral gap.
    fn ep_distance(&self, p: &BasePoint) -> f64 {
        self.family.ep_distance(p).unwrap_or_else(|| {
            eig2(&self.family.hamiltonian(p))
                .map(|e| e.condition)
                .unwrap_or(0.0)
        })
    }
}
