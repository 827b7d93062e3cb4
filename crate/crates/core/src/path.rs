//! Piecewise-smooth paths in the base space.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::BasePoint;

/// Tolerance for segment chaining and loop closure.
pub const CLOSURE_TOL: f64 = 1e-12;

type CurveFn = Arc<dyn Fn(f64) -> BasePoint + Send + Sync>;

/// One smooth piece `s ∈ [start, end]` with position and analytic velocity.
#[derive(Clone)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    position: CurveFn,
    velocity: CurveFn,
}

impl Segment {
    /// `velocity(s)` returns the tangent `(dt/ds, dq/ds)` packed as a [`BasePoint`].
    pub fn new<P, V>(start: f64, end: f64, position: P, velocity: V) -> Result<Self>
    where
        P: Fn(f64) -> BasePoint + Send + Sync + 'static,
        V: Fn(f64) -> BasePoint + Send + Sync + 'static,
    {
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::InvalidPath(format!(
                "segment domain [{start}, {end}] is empty or not finite"
            )));
        }
        Ok(Self {
            start,
            end,
            position: Arc::new(position),
            velocity: Arc::new(velocity),
        })
    }

    pub fn position(&self, s: f64) -> BasePoint {
        (self.position)(s)
    }

    pub fn velocity(&self, s: f64) -> BasePoint {
        (self.velocity)(s)
    }

    fn shifted(&self, offset: f64) -> Self {
        let pos = self.position.clone();
        let vel = self.velocity.clone();
        Self {
            start: self.start + offset,
            end: self.end + offset,
            position: Arc::new(move |s| pos(s - offset)),
            velocity: Arc::new(move |s| vel(s - offset)),
        }
    }

    /// The same curve traversed backwards on `[a + b − end, a + b − start]`.
    fn reversed(&self, a: f64, b: f64) -> Self {
        let pos = self.position.clone();
        let vel = self.velocity.clone();
        let sum = a + b;
        Self {
            start: sum - self.end,
            end: sum - self.start,
            position: Arc::new(move |s| pos(sum - s)),
            velocity: Arc::new(move |s| {
                let mut v = vel(sum - s);
                v.t = -v.t;
                v.q.iter_mut().for_each(|x| *x = -*x);
                v
            }),
        }
    }
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Segment")
            .field("start", &self.start)
            .field("end", &self.end)
            .field("from", &self.position(self.start))
            .field("to", &self.position(self.end))
            .finish()
    }
}

/// An ordered chain of segments with contiguous parameter domains.
#[derive(Clone, Debug)]
pub struct Path {
    segments: Vec<Segment>,
    closed: bool,
}

impl Path {
    /// Chains segments, shifting their domains so each starts where the previous ended.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidPath("path needs at least one segment".into()));
        }
        let mut chained: Vec<Segment> = Vec::with_capacity(segments.len());
        for seg in segments {
            let seg = match chained.last() {
                Some(prev) => {
                    let gap = prev.position(prev.end).distance(&seg.position(seg.start));
                    if !(gap <= CLOSURE_TOL) {
                        return Err(Error::InvalidPath(format!(
                            "segments do not chain: endpoint gap {gap:e}"
                        )));
                    }
                    seg.shifted(prev.end - seg.start)
                }
                None => seg,
            };
            chained.push(seg);
        }
        let first = &chained[0];
        let last = &chained[chained.len() - 1];
        let closed = first.position(first.start).distance(&last.position(last.end)) <= CLOSURE_TOL;
        Ok(Self {
            segments: chained,
            closed,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn start(&self) -> f64 {
        self.segments[0].start
    }

    pub fn end(&self) -> f64 {
        self.segments[self.segments.len() - 1].end
    }

    pub fn start_point(&self) -> BasePoint {
        self.segments[0].position(self.start())
    }

    pub fn end_point(&self) -> BasePoint {
        self.segments[self.segments.len() - 1].position(self.end())
    }

    fn segment_at(&self, s: f64) -> &Segment {
        self.segments
            .iter()
            .find(|seg| s <= seg.end)
            .unwrap_or(&self.segments[self.segments.len() - 1])
    }

    pub fn position(&self, s: f64) -> BasePoint {
        self.segment_at(s).position(s)
    }

    pub fn velocity(&self, s: f64) -> BasePoint {
        self.segment_at(s).velocity(s)
    }

    /// A path that stays at `p` for `s ∈ [0, length]`.
    pub fn constant(p: BasePoint, length: f64) -> Result<Self> {
        let zero = {
            let mut z = p.clone();
            z.t = 0.0;
            z.q.iter_mut().for_each(|x| *x = 0.0);
            z
        };
        Self::new(vec![Segment::new(0.0, length, move |_| p.clone(), move |_| zero.clone())?])
    }

    /// Straight line from `from` to `to` over `s ∈ [0, 1]`.
    pub fn line(from: BasePoint, to: BasePoint) -> Result<Self> {
        Self::new(vec![line_segment(&from, &to)?])
    }

    /// Circle in the `(x, y)` plane at fixed time:
    /// `(t, cx + R cos(φ₀ + σθ), cy + R sin(φ₀ + σθ))`, `θ ∈ [0, 2π]`, with `σ = ±1`.
    pub fn circle(t: f64, center: [f64; 2], radius: f64, phase: f64, orientation: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidPath(format!("circle radius must be positive, got {radius}")));
        }
        let sigma = orientation.signum();
        let seg = Segment::new(
            0.0,
            TAU,
            move |th| {
                let a = phase + sigma * th;
                BasePoint::txy(t, center[0] + radius * a.cos(), center[1] + radius * a.sin())
            },
            move |th| {
                let a = phase + sigma * th;
                BasePoint::txy(0.0, -sigma * radius * a.sin(), sigma * radius * a.cos())
            },
        )?;
        Self::new(vec![seg])
    }

    /// Closed polygon through `vertices` in the `(x, y)` plane at time `t`.
    pub fn polygon(t: f64, vertices: &[[f64; 2]]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPath("polygon needs at least three vertices".into()));
        }
        let pts: Vec<BasePoint> = vertices.iter().map(|v| BasePoint::txy(t, v[0], v[1])).collect();
        let segs = (0..pts.len())
            .map(|k| line_segment(&pts[k], &pts[(k + 1) % pts.len()]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(segs)
    }

    /// Axis-aligned square of side `side` centered at `center`, counter-clockwise.
    pub fn square(t: f64, center: [f64; 2], side: f64) -> Result<Self> {
        let h = 0.5 * side;
        let [cx, cy] = center;
        Self::polygon(
            t,
            &[[cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h], [cx - h, cy - h]],
        )
    }

    /// This path followed by `other`.
    pub fn concat(&self, other: &Path) -> Result<Self> {
        let mut segs = self.segments.clone();
        segs.extend(other.segments.iter().cloned());
        Self::new(segs)
    }

    /// The path traversed `n` times in a row; requires a closed path for `n > 1`.
    pub fn repeat(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPath("repeat count must be positive".into()));
        }
        if n > 1 && !self.closed {
            return Err(Error::InvalidPath("only closed paths can be repeated".into()));
        }
        let mut segs = Vec::with_capacity(self.segments.len() * n);
        for _ in 0..n {
            segs.extend(self.segments.iter().cloned());
        }
        Self::new(segs)
    }

    /// The same curve traversed backwards over the same parameter interval.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.start(), self.end());
        let segments = self.segments.iter().rev().map(|seg| seg.reversed(a, b)).collect();
        Self {
            segments,
            closed: self.closed,
        }
    }
}

fn line_segment(from: &BasePoint, to: &BasePoint) -> Result<Segment> {
    if from.q.len() != to.q.len() {
        return Err(Error::InvalidPath("line endpoints have different parameter counts".into()));
    }
    let from = from.clone();
    let mut delta = to.clone();
    delta.t -= from.t;
    for (d, f) in delta.q.iter_mut().zip(&from.q) {
        *d -= f;
    }
    let d2 = delta.clone();
    Segment::new(
        0.0,
        1.0,
        move |s| {
            let mut p = from.clone();
            p.t += s * d2.t;
            for (x, d) in p.q.iter_mut().zip(&d2.q) {
                *x += s * d;
            }
            p
        },
        move |_| delta.clone(),
    )
}

/// Which of the standard loops a [`LoopSpec`] describes.
#[derive(Clone, Debug)]
pub enum LoopKind {
    /// `(t₀, r cos θ, r sin θ)`, `0 < r < 1`: encloses no exceptional point.
    CircleOrigin { r: f64 },
    /// `(t₀, −1 + ρ cos θ, ρ sin θ)`, `0 < ρ < 2`: encloses `ℓ_-` only.
    CircleEpMinus { rho: f64 },
    /// `(t₀, 1 − ρ cos θ, ρ sin θ)`, `0 < ρ < 2`: encloses `ℓ_+` only.
    CircleEpPlus { rho: f64 },
    Custom(Path),
}

/// A closed loop, its signed repetition count and its time slice.
#[derive(Clone, Debug)]
pub struct LoopSpec {
    pub kind: LoopKind,
    pub winding: i32,
    pub time_slice: f64,
}

impl LoopSpec {
    pub fn circle_origin(r: f64) -> Self {
        Self {
            kind: LoopKind::CircleOrigin { r },
            winding: 1,
            time_slice: 0.0,
        }
    }

    pub fn circle_ep_minus(rho: f64) -> Self {
        Self {
            kind: LoopKind::CircleEpMinus { rho },
            winding: 1,
            time_slice: 0.0,
        }
    }

    pub fn circle_ep_plus(rho: f64) -> Self {
        Self {
            kind: LoopKind::CircleEpPlus { rho },
            winding: 1,
            time_slice: 0.0,
        }
    }

    pub fn custom(path: Path) -> Self {
        Self {
            kind: LoopKind::Custom(path),
            winding: 1,
            time_slice: 0.0,
        }
    }

    pub fn with_winding(mut self, winding: i32) -> Self {
        self.winding = winding;
        self
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.time_slice = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.time_slice.is_finite() {
            return Err(Error::Domain("time slice must be finite".into()));
        }
        match &self.kind {
            LoopKind::CircleOrigin { r } if !(*r > 0.0 && *r < 1.0) => {
                Err(Error::Domain(format!("origin loop needs 0 < r < 1, got {r}")))
            }
            LoopKind::CircleEpMinus { rho } | LoopKind::CircleEpPlus { rho }
                if !(*rho > 0.0 && *rho < 2.0) =>
            {
                Err(Error::Domain(format!("EP loop needs 0 < rho < 2, got {rho}")))
            }
            LoopKind::Custom(p) if !p.is_closed() => {
                Err(Error::Domain("custom loop path is not closed".into()))
            }
            _ => Ok(()),
        }
    }

    /// One positively oriented traversal.
    pub fn base_loop(&self) -> Result<Path> {
        self.validate()?;
        let t = self.time_slice;
        match &self.kind {
            LoopKind::CircleOrigin { r } => Path::circle(t, [0.0, 0.0], *r, 0.0, 1.0),
            LoopKind::CircleEpMinus { rho } => Path::circle(t, [-1.0, 0.0], *rho, 0.0, 1.0),
            LoopKind::CircleEpPlus { rho } => Path::circle(t, [1.0, 0.0], *rho, PI, -1.0),
            LoopKind::Custom(p) => Ok(p.clone()),
        }
    }

    /// The loop repeated `|winding|` times, reversed for negative winding.
    /// Zero winding gives a constant path at the loop's start point.
    pub fn to_path(&self) -> Result<Path> {
        let base = self.base_loop()?;
        match self.winding {
            0 => Path::constant(base.start_point(), base.end() - base.start()),
            w if w > 0 => base.repeat(w as usize),
            w => base.reversed().repeat(w.unsigned_abs() as usize),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_velocity(path: &Path, s: f64, h: f64) -> BasePoint {
        let p = path.position(s + h);
        let m = path.position(s - h);
        BasePoint::new((p.t - m.t) / (2.0 * h), &[(p.q[0] - m.q[0]) / (2.0 * h), (p.q[1] - m.q[1]) / (2.0 * h)])
    }

    fn assert_velocity_consistent(path: &Path) {
        for seg in path.segments() {
            for k in 1..10 {
                let s = seg.start + (seg.end - seg.start) * k as f64 / 10.0;
                let fd = fd_velocity(path, s, 1e-6);
                let v = path.velocity(s);
                assert!(fd.distance(&v) < 1e-8, "s = {s}: {fd:?} vs {v:?}");
            }
        }
    }

    #[test]
    fn standard_loops_are_closed_and_consistent() {
        for spec in [
            LoopSpec::circle_origin(0.5),
            LoopSpec::circle_ep_minus(1.0),
            LoopSpec::circle_ep_plus(1.5),
        ] {
            let p = spec.to_path().unwrap();
            assert!(p.is_closed());
            assert_velocity_consistent(&p);
        }
        let sq = Path::square(0.0, [-1.0, 0.0], 1.0).unwrap();
        assert!(sq.is_closed());
        assert_eq!(sq.segments().len(), 4);
        assert_velocity_consistent(&sq);
    }

    #[test]
    fn ep_plus_is_mirror_of_ep_minus() {
        let minus = LoopSpec::circle_ep_minus(0.7).to_path().unwrap();
        let plus = LoopSpec::circle_ep_plus(0.7).to_path().unwrap();
        for k in 0..=16 {
            let th = TAU * k as f64 / 16.0;
            let a = minus.position(th);
            let b = plus.position(th);
            assert!((a.q[0] + b.q[0]).abs() < 1e-15 && (a.q[1] - b.q[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn domains_chain_and_reverse() {
        let p = LoopSpec::circle_ep_minus(1.0).with_winding(3).to_path().unwrap();
        assert_eq!(p.segments().len(), 3);
        assert!((p.end() - 3.0 * TAU).abs() < 1e-12);
        let r = p.reversed();
        assert_eq!(r.start(), p.start());
        assert_eq!(r.end(), p.end());
        assert!(r.position(0.3).distance(&p.position(p.end() - 0.3)) < 1e-12);
        assert_velocity_consistent(&r);
        let neg = LoopSpec::circle_ep_minus(1.0).with_winding(-2).to_path().unwrap();
        assert_eq!(neg.segments().len(), 2);
        assert_velocity_consistent(&neg);
    }

    #[test]
    fn loop_domain_checks() {
        assert!(LoopSpec::circle_origin(1.0).to_path().is_err());
        assert!(LoopSpec::circle_origin(0.0).to_path().is_err());
        assert!(LoopSpec::circle_ep_minus(2.0).to_path().is_err());
        assert!(LoopSpec::circle_ep_plus(-1.0).to_path().is_err());
        let open = Path::line(BasePoint::txy(0.0, 0.0, 0.0), BasePoint::txy(0.0, 1.0, 0.0)).unwrap();
        assert!(!open.is_closed());
        assert!(LoopSpec::custom(open.clone()).to_path().is_err());
        assert!(open.repeat(2).is_err());
    }

    #[test]
    fn broken_chain_is_rejected() {
        let a = Path::line(BasePoint::txy(0.0, 0.0, 0.0), BasePoint::txy(0.0, 1.0, 0.0)).unwrap();
        let b = Path::line(BasePoint::txy(0.0, 2.0, 0.0), BasePoint::txy(0.0, 3.0, 0.0)).unwrap();
        assert!(a.concat(&b).is_err());
        let c = Path::line(BasePoint::txy(0.0, 1.0, 0.0), BasePoint::txy(1.0, 1.0, 0.0)).unwrap();
        let ac = a.concat(&c).unwrap();
        assert_eq!(ac.end(), 2.0);
        assert_eq!(ac.end_point(), BasePoint::txy(1.0, 1.0, 0.0));
    }

    #[test]
    fn zero_winding_is_constant() {
        let p = LoopSpec::circle_ep_minus(1.0).with_winding(0).to_path().unwrap();
        let v = p.velocity(1.0);
        assert_eq!(v.t, 0.0);
        assert!(v.q.iter().all(|x| *x == 0.0));
    }
}
