use std::collections::BTreeSet;

use super::{PolygonalTrace, Predicate, TraceError};

/// A finitely-variable trace over a proposition alphabet.
///
/// Interval `k` is `[breakpoints[k], breakpoints[k + 1])` and carries
/// `letters[k]`; the final breakpoint carries the last letter.
#[derive(Debug, Clone, PartialEq)]
pub struct PropositionalTrace {
    breakpoints: Vec<f64>,
    letters: Vec<BTreeSet<String>>,
}

impl PropositionalTrace {
    pub fn new(breakpoints: Vec<f64>, letters: Vec<BTreeSet<String>>) -> Result<Self, TraceError> {
        if breakpoints.len() < 2 {
            return Err(TraceError::BadPropositional("need at least two breakpoints".into()));
        }
        if letters.len() + 1 != breakpoints.len() {
            return Err(TraceError::BadPropositional(format!(
                "{} breakpoints need {} letters, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                letters.len()
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(TraceError::BadPropositional("non-finite breakpoint".into()));
        }
        if let Some(k) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(TraceError::NonIncreasing { row: k + 2 });
        }
        Ok(Self { breakpoints, letters })
    }

    /// Convenience constructor from `(start, letters)` pieces and an end time.
    pub fn from_pieces<I, S>(pieces: I, end: f64) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = (f64, Vec<S>)>,
        S: Into<String>,
    {
        let mut breakpoints = Vec::new();
        let mut letters = Vec::new();
        for (t, props) in pieces {
            breakpoints.push(t);
            letters.push(props.into_iter().map(Into::into).collect());
        }
        breakpoints.push(end);
        Self::new(breakpoints, letters)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn letters(&self) -> &[BTreeSet<String>] {
        &self.letters
    }

    pub fn intervals(&self) -> usize {
        self.letters.len()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().expect("nonempty"))
    }

    /// Index of the interval whose letter applies at `t`.
    pub fn interval_at(&self, t: f64) -> Result<usize, TraceError> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(TraceError::OutOfDomain { t, lo, hi });
        }
        let k = self.breakpoints.partition_point(|&b| b <= t);
        Ok(k.saturating_sub(1).min(self.letters.len() - 1))
    }

    pub fn letter_at(&self, t: f64) -> Result<&BTreeSet<String>, TraceError> {
        Ok(&self.letters[self.interval_at(t)?])
    }

    /// Every proposition appearing in some letter.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.letters.iter().flatten().cloned().collect()
    }

    /// Merges adjacent intervals carrying equal letters.
    pub fn coalesced(&self) -> Self {
        let mut breakpoints = vec![self.breakpoints[0]];
        let mut letters: Vec<BTreeSet<String>> = Vec::new();
        for (k, letter) in self.letters.iter().enumerate() {
            if letters.last() != Some(letter) {
                if k > 0 {
                    breakpoints.push(self.breakpoints[k]);
                }
                letters.push(letter.clone());
            }
        }
        breakpoints.push(*self.breakpoints.last().expect("nonempty"));
        Self { breakpoints, letters }
    }

    /// Applies a strictly increasing time map to every breakpoint.
    pub fn retime<F: Fn(f64) -> f64>(&self, r: F) -> Result<Self, TraceError> {
        Self::new(self.breakpoints.iter().map(|&t| r(t)).collect(), self.letters.clone())
    }
}

const PROBES_PER_SEGMENT: usize = 32;

/// Converts a polygonal trace to a propositional one.
///
/// Breakpoints are the trace knots plus every time at which some predicate
/// changes truth value. Affine predicates are solved exactly per segment;
/// other predicates are probed at a fixed number of points per segment and
/// each detected change is refined by bisection to `1e-9 * tlen`.
pub fn booleanize(tr: &PolygonalTrace, preds: &[Predicate]) -> Result<PropositionalTrace, TraceError> {
    for p in preds {
        if p.f.arity() > tr.dim() {
            return Err(TraceError::PredicateArity {
                name: p.name.clone(),
                needed: p.f.arity(),
                dim: tr.dim(),
            });
        }
    }
    let (start, end) = tr.domain();
    let scale = (end - start).max(end.abs());
    let bisect_tol = 1e-9 * scale;
    let merge_tol = 1e-12 * scale;
    let knots = tr.knots();
    let dim = tr.dim();
    let mut buf = vec![0.0; dim];

    let mut breakpoints = vec![start];
    for k in 0..tr.segments() {
        let (t0, t1) = (knots[k], knots[k + 1]);
        let mut roots = Vec::new();
        for p in preds {
            if p.f.is_affine() {
                let g0 = p.f.eval(tr.knot_value(k));
                let g1 = p.f.eval(tr.knot_value(k + 1));
                if (g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0) {
                    roots.push(t0 + (g0 / (g0 - g1)) * (t1 - t0));
                }
            } else {
                let mut truth_at = |t: f64| {
                    tr.segment_point(k, t, &mut buf);
                    p.holds(&buf)
                };
                let probes: Vec<f64> = (0..=PROBES_PER_SEGMENT)
                    .map(|q| {
                        if q == PROBES_PER_SEGMENT {
                            t1
                        } else {
                            t0 + (t1 - t0) * q as f64 / PROBES_PER_SEGMENT as f64
                        }
                    })
                    .collect();
                let mut prev = truth_at(probes[0]);
                for w in probes.windows(2) {
                    let cur = truth_at(w[1]);
                    if cur != prev {
                        let (mut lo, mut hi) = (w[0], w[1]);
                        while hi - lo > bisect_tol {
                            let mid = 0.5 * (lo + hi);
                            if truth_at(mid) == prev {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        roots.push(0.5 * (lo + hi));
                    }
                    prev = cur;
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        for r in roots {
            let last = *breakpoints.last().expect("nonempty");
            if r - last > merge_tol && t1 - r > merge_tol {
                breakpoints.push(r);
            }
        }
        breakpoints.push(t1);
    }

    let letters = breakpoints
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            tr.sample_into(mid, &mut buf).expect("midpoint inside domain");
            preds.iter().filter(|p| p.holds(&buf)).map(|p| p.name.clone()).collect()
        })
        .collect();
    PropositionalTrace::new(breakpoints, letters)
}
