use super::free_space::{edge_interval, Interval};
use super::{EngineError, WindowParam};
use crate::trace::PolygonalTrace;

/// Column-by-column reachability state of the free-space sweep.
///
/// Column `i` holds, for each live row `j`, the reachable part of the left
/// edge of cell `(i, j)`. Rows outside the window or whose time ranges cannot
/// come within `delta` of the column are never materialized, so memory is
/// bounded by the window width.
#[derive(Debug, Clone)]
pub struct ReachFrontier<'a> {
    a: &'a PolygonalTrace,
    b: &'a PolygonalTrace,
    delta: f64,
    window: WindowParam,
    column: usize,
    row_lo: usize,
    left: Vec<Option<Interval>>,
    accepted: bool,
    dead: bool,
}

impl<'a> ReachFrontier<'a> {
    pub fn new(
        a: &'a PolygonalTrace,
        b: &'a PolygonalTrace,
        delta: f64,
        window: WindowParam,
    ) -> Result<Self, EngineError> {
        validate(a, b, delta)?;
        let origin_free = edge_interval(
            a.knots()[0],
            a.knot_value(0),
            b.knots()[0],
            b.knots()[1],
            b.knot_value(0),
            b.knot_value(1),
            delta,
        )
        .is_some_and(|iv| iv.contains(0.0));
        let end_in_window = window.admits(a.segments() - 1, b.segments() - 1);
        Ok(Self {
            a,
            b,
            delta,
            window,
            column: 0,
            row_lo: 0,
            left: vec![Interval::new(0.0, 0.0)],
            accepted: false,
            dead: !origin_free || !end_in_window,
        })
    }

    /// Index of the next column to process.
    pub fn column(&self) -> usize {
        self.column
    }

    /// Number of live cells in the current column.
    pub fn width(&self) -> usize {
        self.left.len()
    }

    pub fn is_finished(&self) -> bool {
        self.dead || self.column == self.a.segments()
    }

    /// Rows of column `i` that are inside the window and whose segment time
    /// span can come within `delta` of the column's time span.
    fn row_range(&self, i: usize) -> Option<(usize, usize)> {
        let (ta, tb) = (self.a.knots(), self.b.knots());
        let nb = self.b.segments();
        let w = self.window.radius();
        let mut lo = i.saturating_sub(w);
        let mut hi = i.saturating_add(w).min(nb - 1);
        let t_lo = ta[i] - self.delta;
        let t_hi = ta[i + 1] + self.delta;
        lo = lo.max(tb[1..].partition_point(|&t| t < t_lo));
        hi = hi.min(tb.partition_point(|&t| t <= t_hi).saturating_sub(1));
        (lo <= hi).then_some((lo, hi))
    }

    /// Processes one column and returns `false` once nothing is reachable.
    pub fn step(&mut self) -> bool {
        if self.is_finished() {
            return !self.dead;
        }
        let i = self.column;
        let (ta, tb) = (self.a.knots(), self.b.knots());
        let nb = self.b.segments();
        let Some((lo, hi)) = self.row_range(i) else {
            self.dead = true;
            return false;
        };

        let mut next = Vec::with_capacity(hi + 1 - lo);
        let mut bottom: Option<Interval> = if i == 0 && lo == 0 {
            Interval::new(0.0, 0.0)
        } else {
            None
        };
        let mut alive = false;
        for j in lo..=hi {
            let left = if j >= self.row_lo {
                self.left.get(j - self.row_lo).copied().flatten()
            } else {
                None
            };
            let (right, top) = if left.is_none() && bottom.is_none() {
                (None, None)
            } else {
                let free_right = edge_interval(
                    ta[i + 1],
                    self.a.knot_value(i + 1),
                    tb[j],
                    tb[j + 1],
                    self.b.knot_value(j),
                    self.b.knot_value(j + 1),
                    self.delta,
                );
                let free_top = edge_interval(
                    tb[j + 1],
                    self.b.knot_value(j + 1),
                    ta[i],
                    ta[i + 1],
                    self.a.knot_value(i),
                    self.a.knot_value(i + 1),
                    self.delta,
                );
                let right = match (bottom, left) {
                    (Some(_), _) => free_right,
                    (None, Some(l)) => free_right.and_then(|r| r.from(l.lo)),
                    (None, None) => None,
                };
                let top = match (left, bottom) {
                    (Some(_), _) => free_top,
                    (None, Some(bt)) => free_top.and_then(|t| t.from(bt.lo)),
                    (None, None) => None,
                };
                (right, top)
            };
            if i + 1 == self.a.segments() && j + 1 == nb {
                self.accepted = right.is_some_and(|r| r.hi >= 1.0) || top.is_some_and(|t| t.hi >= 1.0);
            }
            alive |= right.is_some() || top.is_some();
            next.push(right);
            bottom = top;
        }
        self.row_lo = lo;
        self.left = next;
        self.column += 1;
        if !alive {
            self.dead = true;
        }
        alive
    }

    /// Runs the sweep to completion and reports whether the terminal corner
    /// is reachable.
    pub fn run(mut self) -> bool {
        while !self.is_finished() {
            self.step();
        }
        !self.dead && self.accepted
    }
}

pub(crate) fn validate(a: &PolygonalTrace, b: &PolygonalTrace, delta: f64) -> Result<(), EngineError> {
    if a.dim() != b.dim() {
        return Err(EngineError::DimensionMismatch(a.dim(), b.dim()));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(EngineError::BadDelta(delta));
    }
    Ok(())
}

/// Decides whether `dist_S(a, b) <= delta` when segment `i` of `a` may only
/// be matched to segments `i - W ..= i + W` of `b`.
///
/// ```
/// use skorokhod::engine::{check_within, WindowParam};
/// use skorokhod::trace::SampledTrace;
///
/// let a = SampledTrace::from_rows(&[0.0, 1.0], &[vec![0.0], vec![0.0]]).unwrap().into();
/// let b = SampledTrace::from_rows(&[0.0, 1.0], &[vec![1.0], vec![1.0]]).unwrap().into();
/// assert!(!check_within(&a, &b, 0.5, WindowParam::Unbounded).unwrap());
/// assert!(check_within(&a, &b, 1.0, WindowParam::Unbounded).unwrap());
/// ```
pub fn check_within(
    a: &PolygonalTrace,
    b: &PolygonalTrace,
    delta: f64,
    window: WindowParam,
) -> Result<bool, EngineError> {
    Ok(ReachFrontier::new(a, b, delta, window)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::SampledTrace;

    fn tr(ts: &[f64], vs: &[f64]) -> PolygonalTrace {
        let rows: Vec<Vec<f64>> = vs.iter().map(|v| vec![*v]).collect();
        SampledTrace::from_rows(ts, &rows).unwrap().into()
    }

    fn ramp(start: f64) -> PolygonalTrace {
        tr(&[0.0, start, start + 0.1, 2.0], &[0.0, 0.0, 1.0, 1.0])
    }

    #[test]
    fn identity_at_zero() {
        let a = ramp(1.0);
        assert!(check_within(&a, &a, 0.0, WindowParam::Unbounded).unwrap());
        assert!(check_within(&a, &a, 0.0, WindowParam::Finite(1)).unwrap());
    }

    #[test]
    fn constant_gap() {
        let a = tr(&[0.0, 1.0], &[0.0, 0.0]);
        let b = tr(&[0.0, 1.0], &[1.0, 1.0]);
        assert!(!check_within(&a, &b, 0.5, WindowParam::Unbounded).unwrap());
        assert!(check_within(&a, &b, 1.0, WindowParam::Unbounded).unwrap());
    }

    #[test]
    fn shifted_ramp() {
        let a = ramp(1.0);
        let b = ramp(1.3);
        assert!(check_within(&a, &b, 0.35, WindowParam::Unbounded).unwrap());
        assert!(!check_within(&a, &b, 0.25, WindowParam::Unbounded).unwrap());
    }

    #[test]
    fn endpoint_conditions_are_forced() {
        let a = tr(&[0.0, 1.0], &[0.0, 0.0]);
        let b = tr(&[0.5, 1.0], &[0.0, 0.0]);
        assert!(!check_within(&a, &b, 0.4, WindowParam::Unbounded).unwrap());
        assert!(check_within(&a, &b, 0.5, WindowParam::Unbounded).unwrap());
    }

    #[test]
    fn window_excluding_end_cell_is_infeasible() {
        let a = tr(&[0.0, 1.0], &[0.0, 0.0]);
        let b = tr(&[0.0, 0.25, 0.5, 0.75, 1.0], &[0.0; 5]);
        assert!(!check_within(&a, &b, 10.0, WindowParam::Finite(2)).unwrap());
        assert!(check_within(&a, &b, 0.0, WindowParam::Finite(3)).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        let a = tr(&[0.0, 1.0], &[0.0, 0.0]);
        let b: PolygonalTrace = SampledTrace::from_rows(&[0.0, 1.0], &[vec![0.0, 0.0], vec![0.0, 0.0]])
            .unwrap()
            .into();
        assert!(matches!(
            check_within(&a, &b, 1.0, WindowParam::Unbounded),
            Err(EngineError::DimensionMismatch(1, 2))
        ));
        assert!(matches!(
            check_within(&a, &a, -1.0, WindowParam::Unbounded),
            Err(EngineError::BadDelta(_))
        ));
    }

    #[test]
    fn frontier_width_is_bounded_by_window() {
        let n = 500;
        let ts: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
        let vs: Vec<f64> = ts.iter().map(|t| (3.0 * t).sin()).collect();
        let a = tr(&ts, &vs);
        let mut f = ReachFrontier::new(&a, &a, 1e3, WindowParam::Finite(4)).unwrap();
        while !f.is_finished() {
            f.step();
            assert!(f.width() <= 9);
        }
    }
}
