use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::input::uniform_in;
use super::ConformanceError;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// How proposed vertices outside the bounds box are handled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundMode {
    /// Vertices are projected onto the box.
    #[default]
    Clamp,
    /// Vertices may leave the box; the objective is evaluated at the
    /// projection and reduced by `weight` times the L1 excursion.
    Penalty { weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub seed: u64,
    /// Stop as soon as a value strictly above this threshold is seen.
    pub stop_above: Option<f64>,
    /// The simplex is restarted from a random point once its diameter drops
    /// below this fraction of the narrowest bound width.
    pub restart_fraction: f64,
    /// Initial simplex edge as a fraction of each bound width.
    pub initial_step: f64,
    pub bound_mode: BoundMode,
    /// Starting vertex; drawn from the seed when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 200,
            seed: 0,
            stop_above: None,
            restart_fraction: 1e-6,
            initial_step: 0.25,
            bound_mode: BoundMode::Clamp,
            start: None,
        }
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// The point actually passed to the objective; always inside the bounds.
    pub params: Vec<f64>,
    /// `None` when the objective returned a non-finite value.
    pub value: Option<f64>,
    pub best_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub best: Vec<f64>,
    pub best_value: Option<f64>,
    pub log: Vec<EvalRecord>,
    pub restarts: usize,
}

struct Budget<'a, F> {
    objective: F,
    bounds: &'a [(f64, f64)],
    opts: &'a NelderMeadOptions,
    log: Vec<EvalRecord>,
    best: Option<(Vec<f64>, f64)>,
}

/// Marker for an exhausted budget or a reached threshold.
struct Stop;

impl<F: FnMut(&[f64]) -> f64> Budget<'_, F> {
    fn place(&self, x: &[f64]) -> Vec<f64> {
        match self.opts.bound_mode {
            BoundMode::Clamp => clamp(x, self.bounds),
            BoundMode::Penalty { .. } => x.to_vec(),
        }
    }

    /// Objective to minimize at a vertex, or `Stop`.
    fn eval(&mut self, x: &[f64]) -> Result<f64, Stop> {
        if self.log.len() >= self.opts.max_evals {
            return Err(Stop);
        }
        let inside = clamp(x, self.bounds);
        let raw = (self.objective)(&inside);
        let value = raw.is_finite().then(|| match self.opts.bound_mode {
            BoundMode::Clamp => raw,
            BoundMode::Penalty { weight } => {
                raw - weight * x.iter().zip(&inside).map(|(a, b)| (a - b).abs()).sum::<f64>()
            }
        });
        if let Some(v) = value {
            if self.best.as_ref().is_none_or(|(_, b)| v > *b) {
                self.best = Some((inside.clone(), v));
            }
        }
        self.log.push(EvalRecord {
            params: inside,
            value,
            best_so_far: self.best.as_ref().map(|(_, b)| *b),
        });
        if let (Some(v), Some(t)) = (value, self.opts.stop_above) {
            if v > t {
                return Err(Stop);
            }
        }
        Ok(value.map_or(f64::INFINITY, |v| -v))
    }
}

fn clamp(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect()
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Maximizes `objective` over the bounds box with the Nelder-Mead simplex
/// method (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
///
/// Non-finite objective values reject the vertex. A collapsed simplex is
/// restarted from a fresh random point, so the whole budget is spent unless
/// `stop_above` triggers first.
///
/// ```
/// use skorokhod::conformance::{nelder_mead_maximize, NelderMeadOptions};
///
/// let r = nelder_mead_maximize(|p| 1.0 - (p[0] - 0.3).powi(2), &[(0.0, 1.0)], &NelderMeadOptions::default()).unwrap();
/// assert!((r.best[0] - 0.3).abs() < 1e-3);
/// ```
pub fn nelder_mead_maximize<F>(
    objective: F,
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult, ConformanceError>
where
    F: FnMut(&[f64]) -> f64,
{
    if bounds.is_empty() {
        return Err(ConformanceError::Invalid("nothing to optimize".into()));
    }
    for (index, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ConformanceError::BadBound { index, lo, hi });
        }
    }
    if opts.max_evals == 0 {
        return Err(ConformanceError::Invalid("evaluation budget must be positive".into()));
    }
    if let Some(s) = &opts.start {
        if s.len() != bounds.len() {
            return Err(ConformanceError::ParamCount {
                expected: bounds.len(),
                found: s.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut budget = Budget {
        objective,
        bounds,
        opts,
        log: Vec::with_capacity(opts.max_evals),
        best: None,
    };
    let widths: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let min_width = widths
        .iter()
        .copied()
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    let collapse = if min_width.is_finite() {
        opts.restart_fraction * min_width
    } else {
        0.0
    };

    let mut start = match &opts.start {
        Some(s) => clamp(s, bounds),
        None => uniform_in(bounds, &mut rng),
    };
    let mut restarts = 0;
    loop {
        if run_simplex(&mut budget, &start, &widths, collapse).is_err() {
            break;
        }
        restarts += 1;
        start = uniform_in(bounds, &mut rng);
    }
    let (best, best_value) = match budget.best {
        Some((p, v)) => (p, Some(v)),
        None => (start, None),
    };
    Ok(NelderMeadResult {
        best,
        best_value,
        log: budget.log,
        restarts,
    })
}

/// Runs one simplex until it collapses (`Ok`) or the budget stops it.
fn run_simplex<F: FnMut(&[f64]) -> f64>(
    budget: &mut Budget<'_, F>,
    start: &[f64],
    widths: &[f64],
    collapse: f64,
) -> Result<(), Stop> {
    let n = start.len();
    let step = budget.opts.initial_step;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let x0 = budget.place(start);
    let g0 = budget.eval(&x0)?;
    simplex.push((x0, g0));
    for i in 0..n {
        let mut x = start.to_vec();
        let (lo, hi) = budget.bounds[i];
        let d = step * widths[i].max(f64::EPSILON);
        x[i] = if x[i] + d <= hi || x[i] - d < lo {
            x[i] + d
        } else {
            x[i] - d
        };
        let x = budget.place(&x);
        let g = budget.eval(&x)?;
        simplex.push((x, g));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = (0..n)
            .map(|k| {
                let (lo, hi) = simplex
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                        (lo.min(x[k]), hi.max(x[k]))
                    });
                hi - lo
            })
            .fold(0.0, f64::max);
        if diameter <= collapse {
            return Ok(());
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for k in 0..n {
                centroid[k] += x[k] / n as f64;
            }
        }
        let (worst, g_worst) = simplex[n].clone();
        let g_best = simplex[0].1;
        let g_second = simplex[n - 1].1;

        let xr = budget.place(&affine(&centroid, &worst, -REFLECT));
        let gr = budget.eval(&xr)?;
        if gr < g_best {
            let xe = budget.place(&affine(&centroid, &worst, -EXPAND));
            let ge = budget.eval(&xe)?;
            simplex[n] = if ge < gr { (xe, ge) } else { (xr, gr) };
            continue;
        }
        if gr < g_second {
            simplex[n] = (xr, gr);
            continue;
        }
        let contracted = if gr < g_worst {
            let xc = budget.place(&affine(&centroid, &xr, CONTRACT));
            let gc = budget.eval(&xc)?;
            (gc <= gr).then_some((xc, gc))
        } else {
            let xc = budget.place(&affine(&centroid, &worst, CONTRACT));
            let gc = budget.eval(&xc)?;
            (gc < g_worst).then_some((xc, gc))
        };
        match contracted {
            Some(v) => simplex[n] = v,
            None => {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x = budget.place(&affine(&best, &v.0, SHRINK));
                    let g = budget.eval(&x)?;
                    *v = (x, g);
                }
            }
        }
    }
}
