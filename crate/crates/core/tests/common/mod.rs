#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;

use skorokhod::trace::{PolygonalTrace, PropositionalTrace, SampledTrace};

/// Random polygonal trace with `segments` segments on `[t0, t1]`.
pub fn random_trace(rng: &mut impl Rng, segments: usize, dim: usize, t0: f64, t1: f64) -> PolygonalTrace {
    let mut inner: Vec<f64> = (0..segments - 1).map(|_| rng.random_range(t0..t1)).collect();
    inner.sort_by(f64::total_cmp);
    let mut times = vec![t0];
    for t in inner {
        if t - times[times.len() - 1] > 1e-3 && t1 - t > 1e-3 {
            times.push(t);
        }
    }
    times.push(t1);
    let rows: Vec<Vec<f64>> = times
        .iter()
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    SampledTrace::from_rows(&times, &rows).unwrap().into()
}

/// Up to six segments in up to `dim` dimensions, with slightly different
/// domains.
pub fn random_small_trace(rng: &mut impl Rng, dim: usize) -> PolygonalTrace {
    let segments = rng.random_range(1..=6);
    let t0 = rng.random_range(0.0..0.5);
    let t1 = rng.random_range(2.0..4.0);
    random_trace(rng, segments, dim, t0, t1)
}

/// Mixed sup-norm between two graph points.
fn mixed(ta: f64, va: &[f64], tb: f64, vb: &[f64]) -> f64 {
    let v = va.iter().zip(vb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    v.max((ta - tb).abs())
}

fn grid(tr: &PolygonalTrace, n: usize) -> Vec<(f64, Vec<f64>)> {
    let (lo, hi) = tr.domain();
    (0..n)
        .map(|k| {
            let t = if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            };
            (t, tr.sample_at(t).unwrap())
        })
        .collect()
}

/// Discrete Frechet distance between `n`-point uniform samplings of the two
/// graphs `t -> (t, x(t))`, together with the grid resolution: the longest
/// step between consecutive samples of either trace in the same norm.
pub fn grid_oracle(a: &PolygonalTrace, b: &PolygonalTrace, n: usize) -> (f64, f64) {
    let (ga, gb) = (grid(a, n), grid(b, n));
    let resolution = [&ga, &gb]
        .iter()
        .flat_map(|g| g.windows(2).map(|w| mixed(w[0].0, &w[0].1, w[1].0, &w[1].1)))
        .fold(0.0, f64::max);
    let mut prev = vec![0.0f64; n];
    let mut cur = vec![0.0f64; n];
    for (i, (ta, va)) in ga.iter().enumerate() {
        for j in 0..n {
            let c = mixed(*ta, va, gb[j].0, &gb[j].1);
            let reach = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]),
            };
            cur[j] = c.max(reach);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (prev[n - 1], resolution)
}

/// Retimes `tr` by a random increasing piecewise-linear map fixing the end
/// points and moving no knot by more than `shift`, then adds noise of at
/// most `noise` to every value.
pub fn perturb(rng: &mut impl Rng, tr: &PolygonalTrace, shift: f64, noise: f64) -> PolygonalTrace {
    let knots = tr.knots();
    let n = knots.len();
    let mut times = knots.to_vec();
    for k in 1..n - 1 {
        let lo = (knots[k] - shift).max(times[k - 1] + 1e-6);
        let hi = (knots[k] + shift).min(knots[k + 1] - 1e-6);
        if lo < hi {
            times[k] = rng.random_range(lo..hi);
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            tr.knot_value(k)
                .iter()
                .map(|v| {
                    v + if noise > 0.0 {
                        rng.random_range(-noise..=noise)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    SampledTrace::from_rows(&times, &rows).unwrap().into()
}

/// Random propositional trace over `{P, Q, R}` with at most `max_intervals`
/// intervals on `[0, end]`, with breakpoints on a half-unit grid.
pub fn random_prop_trace(rng: &mut impl Rng, max_intervals: usize, end: f64) -> PropositionalTrace {
    let steps = (end * 2.0) as usize;
    let count = rng.random_range(1..=max_intervals.min(steps));
    let mut cuts: Vec<usize> = (1..steps)
        .collect::<Vec<_>>()
        .choose_multiple(rng, count - 1)
        .copied()
        .collect();
    cuts.sort_unstable();
    let mut pieces = vec![(0.0, letters(rng))];
    pieces.extend(cuts.into_iter().map(|c| (c as f64 * 0.5, letters(rng))));
    PropositionalTrace::from_pieces(pieces, end).unwrap()
}

fn letters(rng: &mut impl Rng) -> Vec<&'static str> {
    ["P", "Q", "R"].into_iter().filter(|_| rng.random_bool(0.5)).collect()
}

fn interval(rng: &mut impl Rng) -> String {
    let a = rng.random_range(0..6) as f64 * 0.5;
    let b = a + rng.random_range(0..6) as f64 * 0.5;
    format!("[{a},{b}]")
}

/// Random formula text over `atoms` of nesting depth at most `depth`, using
/// boolean connectives, (bounded) until and waiting-for, eventually and
/// always. At most three operators carry a time interval.
pub fn random_mtl(rng: &mut impl Rng, depth: usize, atoms: &[&str]) -> String {
    let mut bounded = 3;
    mtl(rng, depth, atoms, &mut bounded)
}

fn mtl(rng: &mut impl Rng, depth: usize, atoms: &[&str], bounded: &mut usize) -> String {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..10) {
            0 => "true".into(),
            1 => "false".into(),
            _ => atoms.choose(rng).unwrap().to_string(),
        };
    }
    let mut pick = rng.random_range(0..11);
    if matches!(pick, 5 | 8 | 10) {
        if *bounded == 0 {
            pick -= 1;
        } else {
            *bounded -= 1;
        }
    }
    let mut sub = |rng: &mut _| mtl(rng, depth - 1, atoms, bounded);
    match pick {
        0 => format!("!({})", sub(rng)),
        1 => format!("({}) & ({})", sub(rng), sub(rng)),
        2 => format!("({}) | ({})", sub(rng), sub(rng)),
        3 => format!("({}) -> ({})", sub(rng), sub(rng)),
        4 => format!("({}) U ({})", sub(rng), sub(rng)),
        5 => format!("({}) U{} ({})", sub(rng), interval(rng), sub(rng)),
        6 => format!("({}) W ({})", sub(rng), sub(rng)),
        7 => format!("F ({})", sub(rng)),
        8 => format!("F{} ({})", interval(rng), sub(rng)),
        9 => format!("G ({})", sub(rng)),
        _ => format!("G{} ({})", interval(rng), sub(rng)),
    }
}
