use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConformanceError;
use crate::trace::SampledTrace;

/// A basis function `[0, T] -> R` acting on one input channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    /// `1` everywhere.
    Constant { channel: usize },
    /// `0` before `at`, `1` from `at` on.
    Step { channel: usize, at: f64 },
    /// Indicator of `[start, end)`; a cell reaching the horizon also covers it.
    Pulse { channel: usize, start: f64, end: f64 },
    /// Tent rising on `[left, peak]` and falling on `[peak, right]`.
    /// `left == peak` or `peak == right` gives a one-sided tent.
    Hat {
        channel: usize,
        left: f64,
        peak: f64,
        right: f64,
    },
}

impl Basis {
    pub fn channel(&self) -> usize {
        match *self {
            Basis::Constant { channel }
            | Basis::Step { channel, .. }
            | Basis::Pulse { channel, .. }
            | Basis::Hat { channel, .. } => channel,
        }
    }

    pub fn eval(&self, t: f64, horizon: f64) -> f64 {
        match *self {
            Basis::Constant { .. } => 1.0,
            Basis::Step { at, .. } => f64::from(u8::from(t >= at)),
            Basis::Pulse { start, end, .. } => {
                let inside = t >= start && (t < end || (end >= horizon && t <= end));
                f64::from(u8::from(inside))
            }
            Basis::Hat { left, peak, right, .. } => {
                if t < left || t > right {
                    0.0
                } else if t <= peak {
                    if peak > left {
                        (t - left) / (peak - left)
                    } else {
                        1.0
                    }
                } else if right > peak {
                    (right - t) / (right - peak)
                } else {
                    0.0
                }
            }
        }
    }

    /// Times at which the basis is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Basis::Constant { .. } => vec![],
            Basis::Step { at, .. } => vec![at],
            Basis::Pulse { start, end, .. } => vec![start, end],
            Basis::Hat { left, peak, right, .. } => vec![left, peak, right],
        }
    }
}

/// Inputs of the form `u(t) = sum_i p_i f_i(t)` with every `p_i` confined to
/// a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputParameterization {
    #[serde(default)]
    pub names: Vec<String>,
    pub bases: Vec<Basis>,
    pub bounds: Vec<(f64, f64)>,
    pub horizon: f64,
    pub sample_period: f64,
    pub input_dim: usize,
}

impl InputParameterization {
    pub fn new(
        bases: Vec<Basis>,
        bounds: Vec<(f64, f64)>,
        horizon: f64,
        sample_period: f64,
        input_dim: usize,
    ) -> Result<Self, ConformanceError> {
        let ip = Self {
            names: (0..bases.len()).map(|i| format!("p{i}")).collect(),
            bases,
            bounds,
            horizon,
            sample_period,
            input_dim,
        };
        ip.validate()?;
        Ok(ip)
    }

    /// One constant parameter per channel.
    pub fn constant(bounds: Vec<(f64, f64)>, horizon: f64, sample_period: f64) -> Result<Self, ConformanceError> {
        let dim = bounds.len();
        let bases = (0..dim).map(|channel| Basis::Constant { channel }).collect();
        Self::new(bases, bounds, horizon, sample_period, dim)
    }

    /// A scalar input that is constant on each of `cells` equal cells.
    pub fn piecewise_constant(
        cells: usize,
        bound: (f64, f64),
        horizon: f64,
        sample_period: f64,
    ) -> Result<Self, ConformanceError> {
        let w = horizon / cells as f64;
        let bases = (0..cells)
            .map(|k| Basis::Pulse {
                channel: 0,
                start: k as f64 * w,
                end: if k + 1 == cells { horizon } else { (k + 1) as f64 * w },
            })
            .collect();
        Self::new(bases, vec![bound; cells], horizon, sample_period, 1)
    }

    /// A scalar polyline through `points` equally spaced control points, the
    /// parameters being the control values.
    pub fn piecewise_linear(
        points: usize,
        bound: (f64, f64),
        horizon: f64,
        sample_period: f64,
    ) -> Result<Self, ConformanceError> {
        if points < 2 {
            return Err(ConformanceError::Invalid(
                "a polyline needs at least two control points".into(),
            ));
        }
        let knot = |k: usize| horizon * k as f64 / (points - 1) as f64;
        let bases = (0..points)
            .map(|k| Basis::Hat {
                channel: 0,
                left: knot(k.saturating_sub(1)),
                peak: knot(k),
                right: knot((k + 1).min(points - 1)),
            })
            .collect();
        Self::new(bases, vec![bound; points], horizon, sample_period, 1)
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn validate(&self) -> Result<(), ConformanceError> {
        if self.bases.is_empty() {
            return Err(ConformanceError::Invalid("no parameters".into()));
        }
        if self.bounds.len() != self.bases.len() {
            return Err(ConformanceError::ParamCount {
                expected: self.bases.len(),
                found: self.bounds.len(),
            });
        }
        if !self.names.is_empty() && self.names.len() != self.bases.len() {
            return Err(ConformanceError::ParamCount {
                expected: self.bases.len(),
                found: self.names.len(),
            });
        }
        for (index, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ConformanceError::BadBound { index, lo, hi });
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ConformanceError::Invalid(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(ConformanceError::Invalid(format!(
                "sample period must be positive, got {}",
                self.sample_period
            )));
        }
        if self.input_dim == 0 {
            return Err(ConformanceError::Invalid("input dimension must be positive".into()));
        }
        if let Some(b) = self.bases.iter().find(|b| b.channel() >= self.input_dim) {
            return Err(ConformanceError::Invalid(format!(
                "basis on channel {} but the input has {} channels",
                b.channel(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Projects `values` onto the bounds box.
    pub fn clamp(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
            .collect()
    }

    fn sample_times(&self) -> Vec<f64> {
        let t_end = self.horizon;
        let n = (t_end / self.sample_period).round() as usize;
        let mut ts: Vec<f64> = (0..=n)
            .map(|k| k as f64 * self.sample_period)
            .filter(|&t| t < t_end)
            .chain(std::iter::once(t_end))
            .chain(
                self.bases
                    .iter()
                    .flat_map(Basis::breakpoints)
                    .filter(|&t| t > 0.0 && t < t_end),
            )
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|b, a| *b - *a <= 1e-12 * t_end.max(1.0));
        ts
    }
}

/// The input `sum_i p_i f_i` sampled every `sample_period` over
/// `[0, horizon]`, with extra samples at basis breakpoints.
///
/// Values outside their bounds are clamped with a warning.
pub fn synthesize_input(values: &[f64], ip: &InputParameterization) -> Result<SampledTrace, ConformanceError> {
    ip.validate()?;
    if values.len() != ip.len() {
        return Err(ConformanceError::ParamCount {
            expected: ip.len(),
            found: values.len(),
        });
    }
    let clamped = ip.clamp(values);
    for (i, (v, c)) in values.iter().zip(&clamped).enumerate() {
        if v != c {
            log::warn!("parameter {i} = {v} lies outside its bound and was clamped to {c}");
        }
    }
    let times = ip.sample_times();
    Ok(SampledTrace::from_fn(&times, ip.input_dim, |t| {
        let mut u = vec![0.0; ip.input_dim];
        for (p, b) in clamped.iter().zip(&ip.bases) {
            u[b.channel()] += p * b.eval(t, ip.horizon);
        }
        u
    })?)
}

/// Draws every parameter uniformly from its bound.
pub fn pick_random_input(ip: &InputParameterization, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    uniform_in(&ip.bounds, &mut rng)
}

pub(crate) fn uniform_in(bounds: &[(f64, f64)], rng: &mut impl Rng) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect()
}
