use serde::{Deserialize, Serialize};

use super::{check_horizon, check_input, output_grid, SimulationError, SystemModel};
use crate::trace::SampledTrace;

const ZENO_GAP: f64 = 1e-12;

/// Actuation delay between a guard firing and the inlet actually switching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayFn {
    Constant {
        seconds: f64,
    },
    /// `kappa / inflow`.
    InverseInflow {
        kappa: f64,
    },
}

impl Default for DelayFn {
    fn default() -> Self {
        DelayFn::InverseInflow { kappa: 0.5 }
    }
}

impl DelayFn {
    pub fn delay(&self, inflow: f64) -> Result<f64, SimulationError> {
        let d = match *self {
            DelayFn::Constant { seconds } => seconds,
            DelayFn::InverseInflow { kappa } => {
                if inflow <= 0.0 {
                    return Err(SimulationError::BadParameter(
                        "inflow-dependent delay needs a positive inflow".into(),
                    ));
                }
                kappa / inflow
            }
        };
        if d >= 0.0 && d.is_finite() {
            Ok(d)
        } else {
            Err(SimulationError::BadParameter(format!(
                "delay {d} is not a finite non-negative number"
            )))
        }
    }
}

/// Two tanks draining at constant rates and sharing one inlet pipe.
///
/// Mode `k` fills tank `k`; the pipe is switched to the other tank once its
/// level drops below its switch level, after the optional delay. The
/// simulation starts in the mode filling tank 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoTankModel {
    pub inflow: f64,
    pub drain: [f64; 2],
    pub switch_level: [f64; 2],
    pub initial: [f64; 2],
    #[serde(default)]
    pub delay: Option<DelayFn>,
    #[serde(default = "default_period")]
    pub output_period: f64,
}

fn default_period() -> f64 {
    0.05
}

/// Output of a two-tank simulation together with its switching events.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTankRun {
    pub trace: SampledTrace,
    /// Times at which the inlet switched, in order.
    pub switch_times: Vec<f64>,
    /// Mode (0-based tank being filled) on each piece between switches.
    pub modes: Vec<usize>,
    pub final_levels: [f64; 2],
}

struct Piece {
    start: f64,
    levels: [f64; 2],
    slope: [f64; 2],
}

impl TwoTankModel {
    pub fn new(inflow: f64, drain: [f64; 2], switch_level: [f64; 2], initial: [f64; 2]) -> Self {
        Self {
            inflow,
            drain,
            switch_level,
            initial,
            delay: None,
            output_period: default_period(),
        }
    }

    pub fn with_delay(mut self, delay: DelayFn) -> Self {
        self.delay = Some(delay);
        self
    }

    pub fn with_output_period(mut self, period: f64) -> Self {
        self.output_period = period;
        self
    }

    fn slope(&self, mode: usize) -> [f64; 2] {
        let mut s = [-self.drain[0], -self.drain[1]];
        s[mode] += self.inflow;
        s
    }

    fn validate(&self) -> Result<(), SimulationError> {
        let all = [self.inflow, self.drain[0], self.drain[1]]
            .into_iter()
            .chain(self.switch_level)
            .chain(self.initial);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(SimulationError::BadParameter("non-finite two-tank parameter".into()));
        }
        if !(self.output_period > 0.0 && self.output_period.is_finite()) {
            return Err(SimulationError::BadStep(self.output_period));
        }
        Ok(())
    }

    /// Exact piecewise-linear simulation over `[0, horizon]`.
    pub fn run(&self, horizon: f64) -> Result<TwoTankRun, SimulationError> {
        check_horizon(horizon)?;
        self.validate()?;
        let delay = match &self.delay {
            Some(d) => d.delay(self.inflow)?,
            None => 0.0,
        };
        let mut mode = 0usize;
        let mut t = 0.0;
        let mut h = self.initial;
        let mut pieces = vec![Piece {
            start: 0.0,
            levels: h,
            slope: self.slope(mode),
        }];
        let mut switch_times: Vec<f64> = Vec::new();
        let mut modes = vec![mode];
        loop {
            let slope = self.slope(mode);
            let watched = 1 - mode;
            let fire = if h[watched] < self.switch_level[watched] {
                Some((t, false))
            } else if slope[watched] < 0.0 {
                Some((t + (h[watched] - self.switch_level[watched]) / -slope[watched], true))
            } else {
                None
            };
            let switch_at = fire.map(|(tf, crossing)| (tf + delay, crossing && delay == 0.0));
            match switch_at {
                Some((ts, snap)) if ts < horizon => {
                    for k in 0..2 {
                        h[k] += slope[k] * (ts - t);
                    }
                    if snap {
                        h[watched] = self.switch_level[watched];
                    }
                    let previous = switch_times.last().copied().unwrap_or(f64::NEG_INFINITY);
                    if ts - previous < ZENO_GAP {
                        return Err(SimulationError::Zeno {
                            t: ts,
                            gap: ts - previous,
                        });
                    }
                    t = ts;
                    mode = watched;
                    switch_times.push(t);
                    modes.push(mode);
                    pieces.push(Piece {
                        start: t,
                        levels: h,
                        slope: self.slope(mode),
                    });
                }
                _ => {
                    for k in 0..2 {
                        h[k] += slope[k] * (horizon - t);
                    }
                    break;
                }
            }
        }

        let mut times = output_grid(horizon, self.output_period);
        let tol = ZENO_GAP * horizon.max(1.0);
        for &s in &switch_times {
            let k = times.partition_point(|&x| x < s);
            let near = |i: usize| times.get(i).is_some_and(|&x| (x - s).abs() <= tol);
            if !near(k) && !(k > 0 && near(k - 1)) {
                times.insert(k, s);
            }
        }
        let mut values = Vec::with_capacity(times.len() * 2);
        for &tq in &times {
            let p = &pieces[pieces.partition_point(|p| p.start <= tq).max(1) - 1];
            for k in 0..2 {
                values.push(p.levels[k] + p.slope[k] * (tq - p.start));
            }
        }
        Ok(TwoTankRun {
            trace: SampledTrace::new(times, values, 2)?,
            switch_times,
            modes,
            final_levels: h,
        })
    }
}

/// Levels `(h1, h2)` sampled at `period`, with extra knots at every switch.
pub fn simulate_two_tank(m: &TwoTankModel, horizon: f64, period: f64) -> Result<SampledTrace, SimulationError> {
    Ok(m.clone().with_output_period(period).run(horizon)?.trace)
}

/// Inputs are `(inflow, drain_1, drain_2)`, read from the first sample and
/// held for the whole run.
impl SystemModel for TwoTankModel {
    fn name(&self) -> &str {
        if self.delay.is_some() {
            "two-tank-delayed"
        } else {
            "two-tank"
        }
    }
    fn input_dim(&self) -> usize {
        3
    }
    fn output_dim(&self) -> usize {
        2
    }
    fn simulate(&self, input: &SampledTrace, horizon: f64) -> Result<SampledTrace, SimulationError> {
        check_input(input, 3, horizon)?;
        let u = input.value(0);
        let mut m = self.clone();
        m.inflow = u[0];
        m.drain = [u[1], u[2]];
        Ok(m.run(horizon)?.trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_drain_without_switching() {
        let m = TwoTankModel::new(0.0, [1.0, 1.0], [-10.0, -10.0], [5.0, 5.0]);
        let run = m.clone().with_output_period(0.5).run(2.0).unwrap();
        assert!(run.switch_times.is_empty());
        for (t, v) in run.trace.rows() {
            assert_eq!(v, &[5.0 - t, 5.0 - t]);
        }
    }

    #[test]
    fn single_switch_time() {
        let m = TwoTankModel::new(1.0, [0.1, 0.5], [0.0, 2.0], [3.0, 3.0]);
        let run = m.run(3.0).unwrap();
        assert_eq!(run.switch_times, vec![2.0]);
        assert_eq!(run.modes, vec![0, 1]);
    }

    #[test]
    fn multi_switch_chain() {
        // Fill 1: h2 falls 2 -> 1 at 0.4/s, switch at 2.5 with h1 = 3.5.
        // Fill 2: h1 falls 3.5 -> 1, switch at 8.75 with h2 = 4.75.
        // Fill 1: h2 falls 4.75 -> 1, switch at 18.125 with h1 = 6.625.
        // Fill 2 until 20: h = (5.875, 2.125).
        let m = TwoTankModel::new(1.0, [0.4, 0.4], [1.0, 1.0], [2.0, 2.0]);
        let run = m.run(20.0).unwrap();
        let expected = [2.5, 8.75, 18.125];
        assert_eq!(run.switch_times.len(), 3);
        for (a, b) in run.switch_times.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((run.final_levels[0] - 5.875).abs() < 1e-9);
        assert!((run.final_levels[1] - 2.125).abs() < 1e-9);
        assert!(run.trace.timestamps().contains(&2.5));
    }

    #[test]
    fn output_period_does_not_change_values() {
        let m = TwoTankModel::new(1.0, [0.4, 0.4], [1.0, 1.0], [2.0, 2.0]);
        let a = simulate_two_tank(&m, 20.0, 0.1).unwrap();
        let b = simulate_two_tank(&m, 20.0, 0.05).unwrap();
        for (t, va) in a.rows() {
            if let Some(k) = b.timestamps().iter().position(|&s| s == t) {
                for (x, y) in va.iter().zip(b.value(k)) {
                    assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_delay_matches_undelayed() {
        let m = TwoTankModel::new(1.0, [0.4, 0.4], [1.0, 1.0], [2.0, 2.0]);
        let d = m.clone().with_delay(DelayFn::Constant { seconds: 0.0 });
        assert_eq!(m.run(20.0).unwrap(), d.run(20.0).unwrap());
        let late = m.clone().with_delay(DelayFn::default()).run(20.0).unwrap();
        assert!((late.switch_times[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zeno_is_detected() {
        let m = TwoTankModel::new(1.0, [2.0, 2.0], [5.0, 5.0], [1.0, 1.0]);
        assert!(matches!(m.run(1.0), Err(SimulationError::Zeno { .. })));
    }

    #[test]
    fn prefix_is_causal() {
        let m = TwoTankModel::new(1.0, [0.4, 0.4], [1.0, 1.0], [2.0, 2.0]).with_delay(DelayFn::default());
        let full = m.run(20.0).unwrap().trace;
        let half = m.run(10.0).unwrap().trace;
        for (t, v) in half.rows() {
            if let Some(k) = full.timestamps().iter().position(|&s| s == t) {
                assert_eq!(v, full.value(k));
            }
        }
    }
}
