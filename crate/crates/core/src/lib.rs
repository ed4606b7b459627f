//! Conformance testing of dynamical-system traces under the Skorokhod metric.
//!
//! The crate is organised around a handful of layers:
//!
//! * [`trace`] holds sampled, polygonal and propositional traces, CSV
//!   ingestion, scaling and the naive pointwise metric.
//! * [`engine`] decides `dist_S(a, b) <= delta` with a windowed free-space
//!   reachability sweep and computes distances by bisection over it.
//! * [`logic`] parses timed temporal formulae with freeze quantifiers,
//!   converts them to negation normal form, relaxes them by a distance
//!   bound and evaluates them over traces.
//! * [`conformance`] searches an input parameterization for signals that
//!   drive two systems apart, using Nelder-Mead on the Skorokhod cost.
//! * [`systems`] provides the built-in two-tank and pitch-controller models
//!   together with fixed-step integrators.
//!
//! ```
//! use skorokhod::trace::SampledTrace;
//! use skorokhod::engine::{compute_distance, WindowParam};
//!
//! let a = SampledTrace::from_rows(&[0.0, 1.0], &[vec![0.0], vec![0.0]]).unwrap();
//! let b = SampledTrace::from_rows(&[0.0, 1.0], &[vec![3.0], vec![3.0]]).unwrap();
//! let d = compute_distance(&a.into(), &b.into(), WindowParam::Unbounded, 1e-6).unwrap();
//! assert!((d.distance - 3.0).abs() <= 1e-6);
//! ```

pub mod conformance;
pub mod engine;
pub mod error;
pub mod logic;
pub mod systems;
pub mod trace;

pub use error::{Error, Result};
