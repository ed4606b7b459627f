use std::time::Instant;

use serde::Serialize;

use super::frontier::{check_within, validate};
use super::{EngineError, WindowParam};
use crate::trace::{pointwise_distance, PolygonalTrace, SampledTrace};

/// Outcome of a bisection over [`check_within`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceResult {
    pub distance: f64,
    pub tolerance: f64,
    pub window: WindowParam,
    /// Proven lower bound from the forced endpoint matches.
    pub lower_bound: f64,
    /// Initial upper bound before bisection.
    pub upper_bound: f64,
    pub monitor_calls: usize,
    /// Wall time of each decision call, in seconds.
    pub call_seconds: Vec<f64>,
}

fn mixed_norm(ta: f64, va: &[f64], tb: f64, vb: &[f64]) -> f64 {
    let v = va.iter().zip(vb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    v.max((ta - tb).abs())
}

/// Largest of the four forced endpoint mismatches. Every retiming maps
/// start to start and end to end, so no distance can be smaller.
pub fn endpoint_lower_bound(a: &PolygonalTrace, b: &PolygonalTrace) -> f64 {
    let (na, nb) = (a.segments(), b.segments());
    let start = mixed_norm(a.start(), a.knot_value(0), b.start(), b.knot_value(0));
    let end = mixed_norm(a.end(), a.knot_value(na), b.end(), b.knot_value(nb));
    start.max(end)
}

/// Distance witnessed by the affine retiming of `b`'s domain onto `a`'s.
pub fn reparam_upper_bound(a: &PolygonalTrace, b: &PolygonalTrace) -> Result<f64, EngineError> {
    validate(a, b, 0.0)?;
    let time_gap = (a.start() - b.start()).abs().max((a.end() - b.end()).abs());
    if a.domain() == b.domain() {
        return Ok(time_gap.max(pointwise_distance(a, b)?));
    }
    let (a0, a1) = a.domain();
    let (b0, b1) = b.domain();
    let ratio = (a1 - a0) / (b1 - b0);
    let n = b.knots().len();
    let mut times: Vec<f64> = b
        .knots()
        .iter()
        .enumerate()
        .map(|(k, &t)| match k {
            0 => a0,
            k if k == n - 1 => a1,
            _ => a0 + (t - b0) * ratio,
        })
        .collect();
    // Rounding can collapse knots that were very close together.
    for k in 1..n {
        if times[k] <= times[k - 1] {
            times[k] = times[k - 1].next_up();
        }
    }
    if times[n - 1] > a1 {
        return Ok(f64::INFINITY);
    }
    let moved: PolygonalTrace = SampledTrace::new(times, b.samples().values_flat().to_vec(), b.dim())?.into();
    Ok(time_gap.max(pointwise_distance(a, &moved)?))
}

/// Discrete Frechet distance between the knot sequences under the
/// `max(|dt|, |dv|_2)` norm, restricted to knot pairs with `|i - j| <= W`.
///
/// The vertex coupling it finds extends to a continuous retiming with the
/// same cost, so the value upper-bounds the windowed Skorokhod distance.
pub fn discrete_frechet(a: &PolygonalTrace, b: &PolygonalTrace, window: WindowParam) -> f64 {
    let (na, nb) = (a.knots().len(), b.knots().len());
    let w = window.radius();
    if (na - 1).abs_diff(nb - 1) > w {
        return f64::INFINITY;
    }
    let cost = |i: usize, j: usize| mixed_norm(a.knots()[i], a.knot_value(i), b.knots()[j], b.knot_value(j));
    let mut prev = vec![f64::INFINITY; nb];
    let mut cur = vec![f64::INFINITY; nb];
    for i in 0..na {
        let lo = i.saturating_sub(w);
        let hi = i.saturating_add(w).min(nb - 1);
        cur.iter_mut().for_each(|c| *c = f64::INFINITY);
        for j in lo..=hi {
            let best_prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut m = f64::INFINITY;
                if i > 0 {
                    m = m.min(prev[j]);
                    if j > 0 {
                        m = m.min(prev[j - 1]);
                    }
                }
                if j > 0 {
                    m = m.min(cur[j - 1]);
                }
                m
            };
            cur[j] = best_prev.max(cost(i, j));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[nb - 1]
}

fn max_segment_length(tr: &PolygonalTrace) -> f64 {
    (0..tr.segments())
        .map(|k| mixed_norm(tr.knots()[k], tr.knot_value(k), tr.knots()[k + 1], tr.knot_value(k + 1)))
        .fold(0.0, f64::max)
}

/// Least `delta` (within `tol`) such that `check_within(a, b, delta, window)`.
///
/// The search starts from the forced endpoint bound below and the smaller of
/// the reparameterization bound and the windowed discrete Frechet bound
/// above. A candidate lower bound one segment length below the discrete
/// bound is tested with one decision call and usually shrinks the bracket
/// to a few bisection steps. The upper bound itself is only checked when no
/// bisection step confirmed a smaller value.
pub fn compute_distance(
    a: &PolygonalTrace,
    b: &PolygonalTrace,
    window: WindowParam,
    tol: f64,
) -> Result<DistanceResult, EngineError> {
    validate(a, b, 0.0)?;
    if !tol.is_finite() || tol <= 0.0 {
        return Err(EngineError::BadTolerance(tol));
    }
    if !window.admits(a.segments() - 1, b.segments() - 1) {
        return Err(EngineError::WindowTooNarrow {
            window: window.radius(),
            segments_a: a.segments(),
            segments_b: b.segments(),
        });
    }

    let mut call_seconds = Vec::new();
    let mut check = |delta: f64| -> Result<bool, EngineError> {
        let started = Instant::now();
        let ok = check_within(a, b, delta, window)?;
        call_seconds.push(started.elapsed().as_secs_f64());
        Ok(ok)
    };

    let lower_bound = endpoint_lower_bound(a, b);
    let disc = discrete_frechet(a, b, window);
    let mut hi = reparam_upper_bound(a, b)?.min(disc).max(lower_bound);
    let upper_bound = hi;

    let mut lo = lower_bound;
    let mut hi_verified = false;
    if hi - lo > tol {
        let candidate = disc.min(hi) - max_segment_length(a).max(max_segment_length(b));
        if candidate > lo + tol && candidate < hi - tol {
            if check(candidate)? {
                hi = candidate;
                hi_verified = true;
            } else {
                lo = candidate;
            }
        }
    }
    loop {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if check(mid)? {
                hi = mid;
                hi_verified = true;
            } else {
                lo = mid;
            }
        }
        if hi_verified || check(hi)? {
            break;
        }
        let step = (hi - lower_bound).max(tol);
        lo = hi;
        hi += step;
        while !check(hi)? {
            lo = hi;
            hi += 2.0 * (hi - lower_bound).max(tol);
        }
        hi_verified = true;
    }

    Ok(DistanceResult {
        distance: hi,
        tolerance: tol,
        window,
        lower_bound,
        upper_bound,
        monitor_calls: call_seconds.len(),
        call_seconds,
    })
}
