use serde::Serialize;

use crate::trace::PolygonalTrace;

/// A closed subinterval of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Restricts to `[from, hi]`.
    pub fn from(self, from: f64) -> Option<Self> {
        Self::new(self.lo.max(from), self.hi)
    }
}

/// Free subinterval of segment parameters `u` for which the segment point
/// is within `delta` of the fixed point, in both time and value.
///
/// The time constraint is an affine band and the value constraint is the
/// preimage of a ball under an affine map, so the result is one interval.
#[allow(clippy::too_many_arguments)]
pub fn edge_interval(pt: f64, pv: &[f64], t0: f64, t1: f64, v0: &[f64], v1: &[f64], delta: f64) -> Option<Interval> {
    let dt = t1 - t0;
    let mut lo = ((pt - delta - t0) / dt).max(0.0);
    let mut hi = ((pt + delta - t0) / dt).min(1.0);
    if lo > hi {
        return None;
    }

    let (mut dd, mut dw, mut ww) = (0.0, 0.0, 0.0);
    for k in 0..pv.len() {
        let d = v1[k] - v0[k];
        let w = pv[k] - v0[k];
        dd += d * d;
        dw += d * w;
        ww += w * w;
    }
    let d2 = delta * delta;
    if dd == 0.0 {
        return (ww <= d2).then_some(Interval { lo, hi });
    }
    let ustar = dw / dd;
    let mut rr = 0.0;
    for k in 0..pv.len() {
        let r = (pv[k] - v0[k]) - ustar * (v1[k] - v0[k]);
        rr += r * r;
    }
    let mut disc = d2 - rr;
    if disc < 0.0 {
        if disc > -1e-12 {
            disc = 0.0;
        } else {
            return None;
        }
    }
    let half = (disc / dd).sqrt();
    lo = lo.max(ustar - half);
    hi = hi.min(ustar + half);
    Interval::new(lo, hi)
}

/// The four free edge intervals of the cell pairing segment `i` of `a`
/// (parameter `s`) with segment `j` of `b` (parameter `u`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellGeometry {
    pub i: usize,
    pub j: usize,
    /// `s = 0`, parameterized by `u`.
    pub left: Option<Interval>,
    /// `s = 1`, parameterized by `u`.
    pub right: Option<Interval>,
    /// `u = 0`, parameterized by `s`.
    pub bottom: Option<Interval>,
    /// `u = 1`, parameterized by `s`.
    pub top: Option<Interval>,
}

impl CellGeometry {
    pub fn compute(a: &PolygonalTrace, b: &PolygonalTrace, i: usize, j: usize, delta: f64) -> Self {
        let (ta, tb) = (a.knots(), b.knots());
        let against_b = |k: usize| {
            edge_interval(
                ta[k],
                a.knot_value(k),
                tb[j],
                tb[j + 1],
                b.knot_value(j),
                b.knot_value(j + 1),
                delta,
            )
        };
        let against_a = |k: usize| {
            edge_interval(
                tb[k],
                b.knot_value(k),
                ta[i],
                ta[i + 1],
                a.knot_value(i),
                a.knot_value(i + 1),
                delta,
            )
        };
        Self {
            i,
            j,
            left: against_b(i),
            right: against_b(i + 1),
            bottom: against_a(j),
            top: against_a(j + 1),
        }
    }
}
