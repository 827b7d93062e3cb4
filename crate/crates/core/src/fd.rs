//! Central finite differences of matrix-valued functions.

use crate::error::Result;
use crate::matrix::ComplexMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `(f(x+h) − f(x−h)) / 2h`, error O(h²).
    Central2,
    /// Five-point stencil, error O(h⁴).
    #[default]
    Central4,
}

impl Stencil {
    /// Step that balances truncation against round-off for O(1) functions.
    pub fn default_step(self) -> f64 {
        match self {
            Stencil::Central2 => 1e-5,
            Stencil::Central4 => 1e-4,
        }
    }
}

/// Derivative at `x` of `f` using the given stencil and step.
pub fn derivative<F>(f: F, x: f64, h: f64, stencil: Stencil) -> Result<ComplexMat>
where
    F: Fn(f64) -> Result<ComplexMat>,
{
    match stencil {
        Stencil::Central2 => {
            let fp = f(x + h)?;
            let fm = f(x - h)?;
            Ok((&fp - &fm).scale_re(0.5 / h))
        }
        Stencil::Central4 => {
            let f2p = f(x + 2.0 * h)?;
            let f1p = f(x + h)?;
            let f1m = f(x - h)?;
            let f2m = f(x - 2.0 * h)?;
            let num = (&f1p - &f1m).scale_re(8.0).add_scaled(-1.0, &(&f2p - &f2m));
            Ok(num.scale_re(1.0 / (12.0 * h)))
        }
    }
}
