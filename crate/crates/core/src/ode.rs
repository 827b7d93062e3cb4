//! Fixed-step classical Runge–Kutta for linear matrix ODEs driven along a path.

use crate::error::{Error, Result};
use crate::matrix::{c, ComplexMat};
use crate::model::{BasePoint, GeneratorField};
use crate::path::{Path, Segment};

/// Minimum number of steps accepted per path segment.
pub const MIN_STEPS_PER_SEGMENT: usize = 100;

pub(crate) trait OdeState: Clone {
    fn axpy(&self, h: f64, k: &Self) -> Self;
}

impl OdeState for ComplexMat {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        self.add_scaled(h, k)
    }
}

impl OdeState for (ComplexMat, ComplexMat) {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        (self.0.add_scaled(h, &k.0), self.1.add_scaled(h, &k.1))
    }
}

/// `A(s) = −i Σ_μ (dq^μ/ds) K_μ(γ(s))`, refusing points too close to a singular locus.
pub(crate) fn connection_at<G: GeneratorField + ?Sized>(
    field: &G,
    seg: &Segment,
    s: f64,
    clearance: f64,
) -> Result<(BasePoint, ComplexMat)> {
    let p = seg.position(s);
    let v = seg.velocity(s);
    let distance = field.ep_distance(&p);
    if distance < clearance {
        return Err(Error::PathThroughEp {
            s,
            distance,
            clearance,
        });
    }
    let a = field.contract(&p, &v)?.scale(c(0.0, -1.0));
    Ok((p, a))
}

/// Integrates `dY/ds = rhs(A(s), Y)` over every segment with `steps` steps each.
///
/// `on_step` sees the state after each step (and once at the start) and may
/// modify it in place.
pub(crate) fn integrate<G, S, R, F>(
    path: &Path,
    field: &G,
    steps: usize,
    clearance: f64,
    y0: S,
    rhs: R,
    mut on_step: F,
) -> Result<S>
where
    G: GeneratorField + ?Sized,
    S: OdeState,
    R: Fn(&ComplexMat, &S) -> S,
    F: FnMut(f64, &BasePoint, &mut S),
{
    if steps < MIN_STEPS_PER_SEGMENT {
        return Err(Error::TooFewSteps {
            steps,
            min: MIN_STEPS_PER_SEGMENT,
        });
    }
    let mut y = y0;
    let first = &path.segments()[0];
    on_step(first.start, &first.position(first.start), &mut y);
    for seg in path.segments() {
        let h = (seg.end - seg.start) / steps as f64;
        let (_, mut a_start) = connection_at(field, seg, seg.start, clearance)?;
        for k in 0..steps {
            let s = seg.start + k as f64 * h;
            // land exactly on the segment end
            let s_next = if k + 1 == steps { seg.end } else { s + h };
            let (_, a_mid) = connection_at(field, seg, s + 0.5 * h, clearance)?;
            let (p_end, a_end) = connection_at(field, seg, s_next, clearance)?;
            let k1 = rhs(&a_start, &y);
            let k2 = rhs(&a_mid, &y.axpy(0.5 * h, &k1));
            let k3 = rhs(&a_mid, &y.axpy(0.5 * h, &k2));
            let k4 = rhs(&a_end, &y.axpy(h, &k3));
            y = y
                .axpy(h / 6.0, &k1)
                .axpy(h / 3.0, &k2)
                .axpy(h / 3.0, &k3)
                .axpy(h / 6.0, &k4);
            on_step(s_next, &p_end, &mut y);
            a_start = a_end;
        }
    }
    Ok(y)
}

/// Right-hand side of the evolution-operator equation `dU/ds = A U`.
pub(crate) fn transport_rhs(a: &ComplexMat, u: &ComplexMat) -> ComplexMat {
    a * u
}

/// Right-hand side of the metric equation `dG/ds = −(G A + A† G)`.
pub(crate) fn metric_rhs(a: &ComplexMat, g: &ComplexMat) -> ComplexMat {
    let out = &(g * a) + &(&a.adjoint() * g);
    out.scale_re(-1.0)
}
