//! Skorokhod distance between polygonal traces.
//!
//! [`check_within`] decides `dist_S(a, b) <= delta` by monotone reachability
//! through a free-space grid of segment pairs, sweeping one column of cells
//! at a time and keeping only a window of `2W + 1` cells alive.
//! [`compute_distance`] brackets the distance with cheap upper and lower
//! bounds and bisects over the decision procedure.

mod distance;
mod free_space;
mod frontier;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::trace::TraceError;

pub use distance::{compute_distance, discrete_frechet, endpoint_lower_bound, reparam_upper_bound, DistanceResult};
pub use free_space::{edge_interval, CellGeometry, Interval};
pub use frontier::{check_within, ReachFrontier};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("delta must be finite and non-negative, got {0}")]
    BadDelta(f64),
    #[error("tolerance must be finite and positive, got {0}")]
    BadTolerance(f64),
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("window {window} cannot match the final segments ({segments_a} vs {segments_b} segments)")]
    WindowTooNarrow {
        window: usize,
        segments_a: usize,
        segments_b: usize,
    },
    #[error("sampling correction needs non-negative inputs, got d = {d}, dsamp = {dsamp}")]
    BadSampling { d: f64, dsamp: f64 },
    #[error("invalid window {0:?}: expected a positive integer or \"unbounded\"")]
    BadWindowSpec(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Segment radius for matching: segment `i` may only be paired with
/// segments `i - W ..= i + W` of the other trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WindowParam {
    Finite(usize),
    #[default]
    Unbounded,
}

impl WindowParam {
    pub fn finite(w: usize) -> Result<Self, EngineError> {
        if w == 0 {
            Err(EngineError::ZeroWindow)
        } else {
            Ok(WindowParam::Finite(w))
        }
    }

    /// The radius as a number, with `Unbounded` mapped to `usize::MAX`.
    pub fn radius(self) -> usize {
        match self {
            WindowParam::Finite(w) => w,
            WindowParam::Unbounded => usize::MAX,
        }
    }

    pub(crate) fn admits(self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.radius()
    }
}

impl fmt::Display for WindowParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowParam::Finite(w) => write!(f, "{w}"),
            WindowParam::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl FromStr for WindowParam {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "unbounded" | "inf" | "none" => Ok(WindowParam::Unbounded),
            other => other
                .parse::<usize>()
                .map_err(|_| EngineError::BadWindowSpec(s.to_string()))
                .and_then(WindowParam::finite),
        }
    }
}

impl Serialize for WindowParam {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            WindowParam::Finite(w) => serializer.serialize_u64(*w as u64),
            WindowParam::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for WindowParam {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => WindowParam::finite(n as usize).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Adds the `2 * dsamp` correction that bounds the gap between the distance
/// of polygonal approximations and the distance of the underlying signals.
pub fn sampling_adjusted(d: f64, dsamp: f64) -> Result<f64, EngineError> {
    if !(d >= 0.0 && dsamp >= 0.0) || !d.is_finite() || !dsamp.is_finite() {
        return Err(EngineError::BadSampling { d, dsamp });
    }
    Ok(d + 2.0 * dsamp)
}
