use thiserror::Error;

use crate::conformance::ConformanceError;
use crate::engine::EngineError;
use crate::logic::LogicError;
use crate::systems::SimulationError;
use crate::trace::TraceError;

/// Umbrella error for callers that drive several layers at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Conformance(#[from] ConformanceError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid json in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
