use serde::{Deserialize, Serialize};

use super::{check_horizon, SimulationError};
use crate::trace::SampledTrace;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: f64,
    pub event_tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: 1e-3,
            event_tolerance: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    pub fn euler(step: f64) -> Self {
        Self {
            method: Method::Euler,
            step,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<(), SimulationError> {
        if self.step > 0.0 && self.step.is_finite() {
            Ok(())
        } else {
            Err(SimulationError::BadStep(self.step))
        }
    }

    /// Advances `x` from `t` by `h` under `f(t, x, dx)`.
    pub(crate) fn advance<F>(&self, f: &mut F, t: f64, h: f64, x: &mut [f64], work: &mut Work)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = x.len();
        match self.method {
            Method::Euler => {
                f(t, x, &mut work.k1);
                for (xi, k) in x.iter_mut().zip(&work.k1) {
                    *xi += h * k;
                }
            }
            Method::Rk4 => {
                let Work { k1, k2, k3, k4, tmp } = work;
                f(t, x, k1);
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k1[i];
                }
                f(t + 0.5 * h, tmp, k2);
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k2[i];
                }
                f(t + 0.5 * h, tmp, k3);
                for i in 0..n {
                    tmp[i] = x[i] + h * k3[i];
                }
                f(t + h, tmp, k4);
                for i in 0..n {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
    }
}

pub(crate) struct Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Work {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// Fixed-step solution of `x' = f(t, x)` on `[0, horizon]` with a knot at
/// every step; the last step is shortened to land on `horizon`.
///
/// ```
/// use skorokhod::systems::{integrate, IntegratorConfig};
///
/// let tr = integrate(|_, x, dx| dx[0] = -x[0], &[1.0], 1.0, &IntegratorConfig::rk4(0.01)).unwrap();
/// let end = tr.value(tr.len() - 1)[0];
/// assert!((end - (-1.0f64).exp()).abs() < 1e-9);
/// ```
pub fn integrate<F>(mut f: F, x0: &[f64], horizon: f64, cfg: &IntegratorConfig) -> Result<SampledTrace, SimulationError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    check_horizon(horizon)?;
    cfg.validate()?;
    let n = x0.len();
    let steps = (horizon / cfg.step).ceil().max(1.0) as usize;
    let mut x = x0.to_vec();
    let mut work = Work::new(n);
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity((steps + 1) * n);
    times.push(0.0);
    values.extend_from_slice(&x);
    for k in 0..steps {
        let t = k as f64 * cfg.step;
        let next = if k + 1 == steps {
            horizon
        } else {
            (k + 1) as f64 * cfg.step
        };
        cfg.advance(&mut f, t, next - t, &mut x, &mut work);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimulationError::NonFinite { t: next });
        }
        times.push(next);
        values.extend_from_slice(&x);
    }
    Ok(SampledTrace::new(times, values, n.max(1))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn end_value(tr: &SampledTrace) -> f64 {
        tr.value(tr.len() - 1)[0]
    }

    #[test]
    fn constant_and_linear_fields_are_exact() {
        for cfg in [IntegratorConfig::euler(0.1), IntegratorConfig::rk4(0.1)] {
            let c = integrate(|_, _, dx| dx[0] = 0.0, &[2.5], 1.0, &cfg).unwrap();
            assert!(c.values_flat().iter().all(|&v| v == 2.5));
            let l = integrate(|_, _, dx| dx[0] = 1.0, &[1.0], 2.0, &cfg).unwrap();
            for (t, v) in l.rows() {
                assert!((v[0] - (1.0 + t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |h: f64| {
            let tr = integrate(|_, x, dx| dx[0] = -x[0], &[1.0], 1.0, &IntegratorConfig::rk4(h)).unwrap();
            (end_value(&tr) - (-1.0f64).exp()).abs()
        };
        assert!(err(0.01) < 1e-9);
        let order = (err(0.1) / err(0.05)).log2();
        assert!((3.7..=4.3).contains(&order), "order {order}");
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate(
            |_, x, dx| dx[0] = x[0].powi(3),
            &[1.0],
            2.0,
            &IntegratorConfig::euler(0.1),
        );
        assert!(matches!(r, Err(SimulationError::NonFinite { .. })));
        assert!(integrate(|_, _, _| {}, &[0.0], 1.0, &IntegratorConfig::rk4(0.0)).is_err());
    }
}
