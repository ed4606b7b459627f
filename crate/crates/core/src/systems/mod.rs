//! Simulated systems: a fixed-step ODE integrator, the two-tank hybrid
//! system and an LQR-controlled aircraft pitch model.

mod integrate;
mod lqr;
mod two_tank;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::trace::{SampledTrace, TraceError};

pub use integrate::{integrate, IntegratorConfig, Method};
pub use lqr::{LqrMode, LqrPitchModel, LQR_A, LQR_B, LQR_K};
pub use two_tank::{simulate_two_tank, DelayFn, TwoTankModel, TwoTankRun};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("mode switches {gap:e} s apart at t = {t}: Zeno behaviour")]
    Zeno { t: f64, gap: f64 },
    #[error("expected a {expected}-dimensional input, got {found}")]
    InputDimension { expected: usize, found: usize },
    #[error("input covers [{lo}, {hi}] but the horizon is {horizon}")]
    InputDomain { lo: f64, hi: f64, horizon: f64 },
    #[error("integration step {step} exceeds the sampling period {period}")]
    StepExceedsPeriod { step: f64, period: f64 },
    #[error("invalid model parameter: {0}")]
    BadParameter(String),
    #[error("simulation failed: {0}")]
    Failed(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A causal simulator from an input trace to an output trace.
pub trait SystemModel: Send + Sync {
    fn name(&self) -> &str;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Output over `[0, horizon]` driven by `input`.
    fn simulate(&self, input: &SampledTrace, horizon: f64) -> Result<SampledTrace, SimulationError>;
}

pub type SimulateFn = dyn Fn(&SampledTrace, f64) -> Result<SampledTrace, SimulationError> + Send + Sync;

/// A system defined by a closure.
#[derive(Clone)]
pub struct FnSystem {
    name: String,
    input_dim: usize,
    output_dim: usize,
    f: Arc<SimulateFn>,
}

impl FnSystem {
    pub fn new<F>(name: &str, input_dim: usize, output_dim: usize, f: F) -> Self
    where
        F: Fn(&SampledTrace, f64) -> Result<SampledTrace, SimulationError> + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            input_dim,
            output_dim,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSystem")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .finish()
    }
}

impl SystemModel for FnSystem {
    fn name(&self) -> &str {
        &self.name
    }
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn simulate(&self, input: &SampledTrace, horizon: f64) -> Result<SampledTrace, SimulationError> {
        (self.f)(input, horizon)
    }
}

pub(crate) fn check_horizon(horizon: f64) -> Result<(), SimulationError> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(SimulationError::BadHorizon(horizon))
    }
}

pub(crate) fn check_input(input: &SampledTrace, dim: usize, horizon: f64) -> Result<(), SimulationError> {
    if input.dim() != dim {
        return Err(SimulationError::InputDimension {
            expected: dim,
            found: input.dim(),
        });
    }
    let ts = input.timestamps();
    let (lo, hi) = (ts[0], ts[ts.len() - 1]);
    if lo > 0.0 || hi < horizon {
        return Err(SimulationError::InputDomain { lo, hi, horizon });
    }
    Ok(())
}

/// Uniform grid `0, p, 2p, ...` up to `horizon`, always ending exactly at
/// `horizon`.
pub(crate) fn output_grid(horizon: f64, period: f64) -> Vec<f64> {
    let n = (horizon / period).round() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * period).filter(|&t| t < horizon).collect();
    if let Some(&last) = ts.last() {
        if horizon - last < 1e-9 * period {
            ts.pop();
        }
    }
    ts.push(horizon);
    ts
}
