//! Independent oracle for the integration tests: the closed-form generators
//! transcribed afresh and a bare RK4 on plain 2×2 arrays.
//! Only `to_m2` touches a library type, to read results back.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type M2 = [[C; 2]; 2];

const I: C = C::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn axpy(y: &M2, h: f64, k: &M2) -> M2 {
    let mut out = *y;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += k[i][j] * h;
        }
    }
    out
}

pub fn dist(a: &M2, b: &M2) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += (a[i][j] - b[i][j]).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn id() -> M2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

/// `ℐ = [[0, 1], [−1, 0]]`.
pub fn i_hol() -> M2 {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 0.0)]]
}

pub fn kx(x: f64, y: f64, t: f64) -> M2 {
    let a = 1.0 + I * y;
    let d = a * a - x * x;
    let s = -1.0 / d;
    [
        [s * (-I * x * x * t), s * (a * x * t - a / 2.0)],
        [s * (a * x * t + a / 2.0), s * (I * x * x * t)],
    ]
}

pub fn ky(x: f64, y: f64, t: f64) -> M2 {
    let a = 1.0 + I * y;
    let d = a * a - x * x;
    let s = 1.0 / d;
    [
        [s * (a * x * t), s * (I * a * a * t - I * x / 2.0)],
        [s * (I * a * a * t + I * x / 2.0), s * (-a * x * t)],
    ]
}

/// RK4 for `dU/dθ = −i (ẋ K_x + ẏ K_y) U` over `θ ∈ [0, 2π]` on the slice `t`,
/// for a curve given as `θ ↦ (x, y, ẋ, ẏ)`.
pub fn transport_loop(curve: impl Fn(f64) -> (f64, f64, f64, f64), n: usize, t: f64) -> M2 {
    let gen = |th: f64| {
        let (x, y, dx, dy) = curve(th);
        let (a, b) = (kx(x, y, t), ky(x, y, t));
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = -I * (a[i][j] * dx + b[i][j] * dy);
            }
        }
        out
    };
    let h = std::f64::consts::TAU / n as f64;
    let mut u = id();
    for k in 0..n {
        let th = k as f64 * h;
        let k1 = mul(&gen(th), &u);
        let k2 = mul(&gen(th + h / 2.0), &axpy(&u, h / 2.0, &k1));
        let k3 = mul(&gen(th + h / 2.0), &axpy(&u, h / 2.0, &k2));
        let k4 = mul(&gen(th + h), &axpy(&u, h, &k3));
        u = axpy(&axpy(&axpy(&axpy(&u, h / 6.0, &k1), h / 3.0, &k2), h / 3.0, &k3), h / 6.0, &k4);
    }
    u
}

/// Counter-clockwise circle `(cx + ρ cos θ, ρ sin θ)`.
pub fn ccw(cx: f64, rho: f64) -> impl Fn(f64) -> (f64, f64, f64, f64) {
    move |th| (cx + rho * th.cos(), rho * th.sin(), -rho * th.sin(), rho * th.cos())
}

/// Clockwise circle `(cx − ρ cos θ, ρ sin θ)`.
pub fn cw(cx: f64, rho: f64) -> impl Fn(f64) -> (f64, f64, f64, f64) {
    move |th| (cx - rho * th.cos(), rho * th.sin(), rho * th.sin(), rho * th.cos())
}

/// `U(θ)` rebuilt from `Ξ = diag(λ, 1/λ)` in the `S` basis.
pub fn u_from_lambda(l: C) -> M2 {
    let f = 1.0 / (2.0 * l);
    [
        [f * (1.0 + l * l), f * (-I * (1.0 - l * l))],
        [f * (I * (1.0 - l * l)), f * (1.0 + l * l)],
    ]
}

pub fn to_m2(m: &ep_holonomy::matrix::ComplexMat) -> M2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}
