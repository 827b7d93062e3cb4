//! Dense complex matrices of small dimension.
//!
//! Every operator in the crate (Hamiltonians, generators, metrics, evolution
//! operators) is a [`ComplexMat`]. Storage is inline for 2×2 so the
//! integrators do not allocate per step.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default absolute gap |λ₁ − λ₂| below which a 2×2 spectrum counts as degenerate.
pub const DEFAULT_EP_THRESHOLD: f64 = 1e-8;
/// Default absolute tolerance for matrix comparisons.
pub const DEFAULT_ATOL: f64 = 1e-10;
/// Default relative tolerance for matrix comparisons.
pub const DEFAULT_RTOL: f64 = 1e-10;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMat {
    dim: usize,
    data: SmallVec<[C64; 4]>,
}

impl ComplexMat {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            dim,
            data: SmallVec::from_vec(entries),
        })
    }

    /// 2×2 matrix `[[a, b], [c, d]]`.
    pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self {
            dim: 2,
            data: SmallVec::from_buf([a, b, c, d]),
        }
    }

    /// 2×2 matrix with real entries.
    pub fn real2(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::mat2(a.into(), b.into(), c.into(), d.into())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            data: SmallVec::from_elem(C64::new(0.0, 0.0), dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for col in 0..dim {
                m[(r, col)] = f(r, col);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, col| self[(col, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_re(&self, k: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// `self + k·other`, the workhorse of the Runge–Kutta stages.
    pub fn add_scaled(&self, k: f64, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b * k)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        check_dims(self, rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.dim;
        if n == 2 {
            let a = &self.data;
            let b = &rhs.data;
            return Self::mat2(
                a[0] * b[0] + a[1] * b[2],
                a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3],
            );
        }
        Self::from_fn(n, |r, col| (0..n).map(|k| self[(r, k)] * rhs[(k, col)]).sum())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| (0..self.dim).map(|k| self[(r, k)] * v[k]).sum())
            .collect())
    }

    /// Integer power; negative exponents invert first.
    pub fn pow(&self, n: i64) -> Result<Self> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut acc = Self::identity(self.dim);
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul_unchecked(&base);
        }
        Ok(acc)
    }

    pub fn determinant(&self) -> C64 {
        if self.dim == 1 {
            return self.data[0];
        }
        if self.dim == 2 {
            return self.data[0] * self.data[3] - self.data[1] * self.data[2];
        }
        match lu(self) {
            Some((lu, _, sign)) => (0..self.dim).map(|i| lu[(i, i)]).product::<C64>() * sign,
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.dim == 2 {
            let det = self.determinant();
            if det.norm() == 0.0 || !det.is_finite() {
                return Err(Error::Singular);
            }
            let inv = det.inv();
            let d = &self.data;
            return Ok(Self::mat2(d[3] * inv, -d[1] * inv, -d[2] * inv, d[0] * inv));
        }
        let (lu, perm, _) = lu(self).ok_or(Error::Singular)?;
        let n = self.dim;
        let mut inv = Self::zeros(n);
        for col in 0..n {
            // forward substitution on the permuted unit vector
            let mut y = vec![C64::new(0.0, 0.0); n];
            for r in 0..n {
                let rhs = if perm[r] == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                y[r] = rhs - (0..r).map(|k| lu[(r, k)] * y[k]).sum::<C64>();
            }
            for r in (0..n).rev() {
                let s: C64 = (r + 1..n).map(|k| lu[(r, k)] * inv[(k, col)]).sum();
                inv[(r, col)] = (y[r] - s) / lu[(r, r)];
            }
        }
        Ok(inv)
    }

    /// Frobenius norm of `self − self†`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for col in 0..self.dim {
                acc += (self[(r, col)] - self[(col, r)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `(self + self†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |r, col| (self[(r, col)] + self[(col, r)].conj()) * 0.5)
    }

    /// `‖self − other‖_F ≤ atol + rtol·‖other‖_F`.
    pub fn approx_eq(&self, other: &Self, atol: f64, rtol: f64) -> bool {
        self.dim == other.dim
            && frobenius_distance_unchecked(self, other) <= atol + rtol * other.frobenius_norm()
    }
}

/// Doolittle LU with partial pivoting. Returns `None` for singular input.
fn lu(m: &ComplexMat) -> Option<(ComplexMat, Vec<usize>, C64)> {
    let n = m.dim;
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = C64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))?;
        if a[(p, k)].norm() == 0.0 {
            return None;
        }
        if p != k {
            for col in 0..n {
                a.data.swap(p * n + col, k * n + col);
            }
            perm.swap(p, k);
            sign = -sign;
        }
        for r in k + 1..n {
            let f = a[(r, k)] / a[(k, k)];
            a[(r, k)] = f;
            for col in k + 1..n {
                let v = a[(k, col)];
                a[(r, col)] -= f * v;
            }
        }
    }
    Some((a, perm, sign))
}

fn check_dims(a: &ComplexMat, b: &ComplexMat) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

fn frobenius_distance_unchecked(a: &ComplexMat, b: &ComplexMat) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Conjugate transpose, as a free function.
pub fn adjoint(m: &ComplexMat) -> ComplexMat {
    m.adjoint()
}

/// `ab − ba`.
pub fn commutator(a: &ComplexMat, b: &ComplexMat) -> Result<ComplexMat> {
    check_dims(a, b)?;
    Ok(&a.mul_unchecked(b) - &b.mul_unchecked(a))
}

pub fn frobenius_distance(a: &ComplexMat, b: &ComplexMat) -> Result<f64> {
    check_dims(a, b)?;
    Ok(frobenius_distance_unchecked(a, b))
}

/// Analytic eigendecomposition of a diagonalizable 2×2 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp2 {
    pub eigenvalues: [C64; 2],
    /// Unit-norm right eigenvectors stored as columns.
    pub right_eigenvectors: ComplexMat,
    /// `|λ₁ − λ₂|`.
    pub condition: f64,
}

impl EigDecomp2 {
    /// `V · diag(λ) · V⁻¹`.
    pub fn reconstruct(&self) -> Result<ComplexMat> {
        let v = &self.right_eigenvectors;
        let d = ComplexMat::mat2(self.eigenvalues[0], c(0.0, 0.0), c(0.0, 0.0), self.eigenvalues[1]);
        Ok(v.mul_unchecked(&d).mul_unchecked(&v.inverse()?))
    }
}

pub fn eig2(m: &ComplexMat) -> Result<EigDecomp2> {
    eig2_with_threshold(m, DEFAULT_EP_THRESHOLD)
}

pub fn eig2_with_threshold(m: &ComplexMat, ep_threshold: f64) -> Result<EigDecomp2> {
    if m.dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: m.dim });
    }
    let [a, b, cc, d] = [m.data[0], m.data[1], m.data[2], m.data[3]];
    // λ² + pλ + q = 0 with p = −tr, q = det
    let p = -(a + d);
    let q = a * d - b * cc;
    let root = (p * p - q * 4.0).sqrt();
    // pick the sign that avoids cancellation in −(p ± root)/2
    let sgn = if (p.conj() * root).re >= 0.0 { 1.0 } else { -1.0 };
    let big = -(p + root * sgn) * 0.5;
    let (l1, l2) = if big.norm() == 0.0 {
        (c(0.0, 0.0), c(0.0, 0.0))
    } else {
        (big, q / big)
    };
    let gap = (l1 - l2).norm();
    if !(gap >= ep_threshold) {
        return Err(Error::NearDegenerate {
            gap,
            threshold: ep_threshold,
        });
    }
    let vec_for = |l: C64| -> [C64; 2] {
        let u = [b, l - a];
        let w = [l - d, cc];
        let nu = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
        let nw = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        if nu >= nw {
            [u[0] / nu, u[1] / nu]
        } else {
            [w[0] / nw, w[1] / nw]
        }
    };
    let v1 = vec_for(l1);
    let v2 = vec_for(l2);
    Ok(EigDecomp2 {
        eigenvalues: [l1, l2],
        right_eigenvectors: ComplexMat::mat2(v1[0], v2[0], v1[1], v2[1]),
        condition: gap,
    })
}

/// Eigenvalues of a Hermitian 2×2 matrix, ascending.
pub fn hermitian_eigenvalues2(m: &ComplexMat) -> Result<[f64; 2]> {
    if m.dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: m.dim });
    }
    let defect = m.hermitian_defect();
    if defect > DEFAULT_ATOL + DEFAULT_RTOL * m.frobenius_norm() {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    let half_tr = 0.5 * (m.data[0].re + m.data[3].re);
    let half_diff = 0.5 * (m.data[0].re - m.data[3].re);
    let radius = (half_diff * half_diff + m.data[1].norm_sqr()).sqrt();
    Ok([half_tr - radius, half_tr + radius])
}

/// True iff a Hermitian matrix has strictly positive spectrum.
pub fn is_positive_definite(m: &ComplexMat) -> Result<bool> {
    if m.dim == 2 {
        let defect = m.hermitian_defect();
        if defect > DEFAULT_ATOL + DEFAULT_RTOL * m.frobenius_norm() {
            return Err(Error::NotHermitian { asymmetry: defect });
        }
        let tr = m.trace().re;
        let det = m.determinant().re;
        return Ok(tr > 0.0 && det > 0.0);
    }
    let defect = m.hermitian_defect();
    if defect > DEFAULT_ATOL + DEFAULT_RTOL * m.frobenius_norm() {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    // Sylvester: all leading principal minors positive.
    for k in 1..=m.dim {
        let minor = ComplexMat::from_fn(k, |r, col| m[(r, col)]);
        if minor.determinant().re <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

impl Index<(usize, usize)> for ComplexMat {
    type Output = C64;
    fn index(&self, (r, col): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + col]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat {
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + col]
    }
}

impl Add for &ComplexMat {
    type Output = ComplexMat;
    fn add(self, rhs: &ComplexMat) -> ComplexMat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMat {
    type Output = ComplexMat;
    fn sub(self, rhs: &ComplexMat) -> ComplexMat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&ComplexMat> for ComplexMat {
    fn add_assign(&mut self, rhs: &ComplexMat) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Mul for &ComplexMat {
    type Output = ComplexMat;
    fn mul(self, rhs: &ComplexMat) -> ComplexMat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Mul<C64> for &ComplexMat {
    type Output = ComplexMat;
    fn mul(self, k: C64) -> ComplexMat {
        self.scale(k)
    }
}

impl Neg for &ComplexMat {
    type Output = ComplexMat;
    fn neg(self) -> ComplexMat {
        self.scale_re(-1.0)
    }
}

impl fmt::Debug for ComplexMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.dim {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for col in 0..self.dim {
                if col > 0 {
                    write!(f, ", ")?;
                }
                let z = self[(r, col)];
                write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
