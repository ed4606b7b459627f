//! Optimization-guided search for inputs that drive two systems apart.
//!
//! An [`InputParameterization`] maps a parameter vector to an input signal
//! `u(t) = sum_i p_i f_i(t)`. [`run_conformance_test`] simulates both
//! systems on such inputs and maximizes the Skorokhod distance between the
//! outputs with [`nelder_mead_maximize`] until the distance exceeds the
//! bound or the evaluation budget is spent.

mod harness;
mod input;
mod nelder_mead;

use thiserror::Error;

use crate::engine::EngineError;
use crate::systems::SimulationError;
use crate::trace::TraceError;

pub use harness::{
    cost, run_conformance_test, HarnessConfig, IterationRecord, SystemSpec, TestConfig, TestReport, TraceRecord,
    Verdict,
};
pub use input::{pick_random_input, synthesize_input, Basis, InputParameterization};
pub use nelder_mead::{nelder_mead_maximize, BoundMode, EvalRecord, NelderMeadOptions, NelderMeadResult};

#[derive(Debug, Error)]
pub enum ConformanceError {
    #[error("expected {expected} parameters, got {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("bound {index} = [{lo}, {hi}] is empty or not finite")]
    BadBound { index: usize, lo: f64, hi: f64 },
    #[error("systems disagree on output dimension: {0} vs {1}")]
    OutputDimension(usize, usize),
    #[error("{system} failed on parameters {params:?}: {source}")]
    Simulation {
        system: String,
        params: Vec<f64>,
        #[source]
        source: SimulationError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}
