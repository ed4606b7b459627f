use serde::{Deserialize, Serialize};

use super::integrate::Work;
use super::{check_horizon, check_input, output_grid, IntegratorConfig, SimulationError, SystemModel};
use crate::trace::{PolygonalTrace, SampledTrace};

/// Plant matrix for the state `[alpha, q, theta]`.
pub const LQR_A: [[f64; 3]; 3] = [[-0.313, 56.7, 0.0], [-0.0139, -0.426, 0.0], [0.0, 56.7, 0.0]];
pub const LQR_B: [f64; 3] = [0.232, 0.0203, 0.0];
pub const LQR_K: [f64; 3] = [-0.6435, 169.6950, 7.0711];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LqrMode {
    /// `x' = (A - BK) x + B theta_des`.
    Continuous,
    /// The control `theta_des - K x` is recomputed every `period` seconds
    /// from a delayed state measurement and held in between.
    SampledData { period: f64 },
}

/// Aircraft pitch dynamics under LQR state feedback; the output is `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LqrPitchModel {
    pub mode: LqrMode,
    /// Age of the state measurement used in sampled-data mode.
    pub sensor_delay: f64,
    pub integrator: IntegratorConfig,
    pub output_period: f64,
}

impl Default for LqrPitchModel {
    fn default() -> Self {
        Self {
            mode: LqrMode::Continuous,
            sensor_delay: 0.05,
            integrator: IntegratorConfig::default(),
            output_period: 0.01,
        }
    }
}

fn dot(a: &[f64; 3], x: &[f64]) -> f64 {
    a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
}

fn plant(x: &[f64], u: f64, dx: &mut [f64]) {
    for i in 0..3 {
        dx[i] = dot(&LQR_A[i], x) + LQR_B[i] * u;
    }
}

impl LqrPitchModel {
    pub fn continuous() -> Self {
        Self::default()
    }

    pub fn sampled_data(period: f64) -> Self {
        Self {
            mode: LqrMode::SampledData { period },
            ..Self::default()
        }
    }

    /// Pitch angle over `[0, horizon]` tracking the reference `theta_des`
    /// from the zero state.
    pub fn simulate_pitch(&self, theta_des: &SampledTrace, horizon: f64) -> Result<SampledTrace, SimulationError> {
        check_horizon(horizon)?;
        check_input(theta_des, 1, horizon)?;
        self.integrator.validate()?;
        if !(self.output_period > 0.0 && self.output_period.is_finite()) {
            return Err(SimulationError::BadStep(self.output_period));
        }
        if !(self.sensor_delay >= 0.0 && self.sensor_delay.is_finite()) {
            return Err(SimulationError::BadParameter(format!(
                "sensor delay {}",
                self.sensor_delay
            )));
        }
        let reference = PolygonalTrace::from(theta_des.clone());
        let r = |t: f64| reference.sample_at(t).map(|v| v[0]);
        let outputs = output_grid(horizon, self.output_period);
        let h = self.integrator.step;

        let mut breaks = outputs.clone();
        let control_period = match self.mode {
            LqrMode::Continuous => None,
            LqrMode::SampledData { period } => {
                if !(period > 0.0 && period.is_finite()) {
                    return Err(SimulationError::BadStep(period));
                }
                if h > period {
                    return Err(SimulationError::StepExceedsPeriod { step: h, period });
                }
                breaks.extend(output_grid(horizon, period));
                Some(period)
            }
        };
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|b, a| *b - *a <= 1e-12);

        let mut x = vec![0.0; 3];
        let mut work = Work::new(3);
        let mut history_t = vec![0.0];
        let mut history_x = vec![x.clone()];
        let mut theta = Vec::with_capacity(outputs.len());
        let mut next_output = 0;
        let mut next_sample = 0usize;
        let mut held = 0.0;
        let mut err = None;

        for w in 0..breaks.len() {
            let t0 = breaks[w];
            if next_output < outputs.len() && (outputs[next_output] - t0).abs() <= 1e-12 {
                theta.push(x[2]);
                next_output += 1;
            }
            let Some(&t1) = breaks.get(w + 1) else { break };
            if let Some(p) = control_period {
                if t0 + 1e-12 >= next_sample as f64 * p {
                    let measured = delayed_state(&history_t, &history_x, t0 - self.sensor_delay);
                    held = r(t0)? - dot(&LQR_K, &measured);
                    next_sample = (t0 / p + 1e-9).floor() as usize + 1;
                }
            }
            let n = ((t1 - t0) / h).ceil().max(1.0) as usize;
            let dt = (t1 - t0) / n as f64;
            for s in 0..n {
                let t = t0 + s as f64 * dt;
                match control_period {
                    Some(_) => self
                        .integrator
                        .advance(&mut |_, x, dx| plant(x, held, dx), t, dt, &mut x, &mut work),
                    None => self.integrator.advance(
                        &mut |t, x, dx| {
                            let u = r(t).unwrap_or_else(|e| {
                                err.get_or_insert(e);
                                0.0
                            }) - dot(&LQR_K, x);
                            plant(x, u, dx)
                        },
                        t,
                        dt,
                        &mut x,
                        &mut work,
                    ),
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(SimulationError::NonFinite { t: t + dt });
                }
                if control_period.is_some() {
                    history_t.push(t + dt);
                    history_x.push(x.clone());
                }
            }
            if let Some(e) = err.take() {
                return Err(e.into());
            }
        }
        Ok(SampledTrace::new(outputs, theta, 1)?)
    }
}

/// Linear interpolation in the recorded trajectory; times before the start
/// see the initial state.
fn delayed_state(ts: &[f64], xs: &[Vec<f64>], t: f64) -> Vec<f64> {
    if t <= ts[0] {
        return xs[0].clone();
    }
    let k = ts.partition_point(|&s| s <= t);
    if k >= ts.len() {
        return xs[xs.len() - 1].clone();
    }
    let (ta, tb) = (ts[k - 1], ts[k]);
    let w = (t - ta) / (tb - ta);
    xs[k - 1].iter().zip(&xs[k]).map(|(a, b)| a + w * (b - a)).collect()
}

impl SystemModel for LqrPitchModel {
    fn name(&self) -> &str {
        match self.mode {
            LqrMode::Continuous => "lqr-continuous",
            LqrMode::SampledData { .. } => "lqr-sampled",
        }
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn simulate(&self, input: &SampledTrace, horizon: f64) -> Result<SampledTrace, SimulationError> {
        self.simulate_pitch(input, horizon)
    }
}
