use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::input::{pick_random_input, synthesize_input, InputParameterization};
use super::nelder_mead::{nelder_mead_maximize, BoundMode, NelderMeadOptions};
use super::ConformanceError;
use crate::engine::{compute_distance, sampling_adjusted, WindowParam};
use crate::systems::{LqrPitchModel, SystemModel, TwoTankModel};
use crate::trace::{PolygonalTrace, SampledTrace, ScalingProfile};

fn default_tol() -> f64 {
    1e-4
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub delta_bound: f64,
    pub max_iterations: usize,
    #[serde(default)]
    pub window: WindowParam,
    /// Identity scaling when absent.
    #[serde(default)]
    pub scaling: Option<ScalingProfile>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Sampling period of the outputs; `2 * sampling_correction` is added to
    /// every distance.
    #[serde(default)]
    pub sampling_correction: f64,
    #[serde(default)]
    pub seed: u64,
    /// End the search at the first cost above `delta_bound`.
    #[serde(default = "default_true")]
    pub stop_at_violation: bool,
    #[serde(default)]
    pub bound_mode: BoundMode,
}

impl TestConfig {
    pub fn new(delta_bound: f64, max_iterations: usize) -> Self {
        Self {
            delta_bound,
            max_iterations,
            window: WindowParam::Unbounded,
            scaling: None,
            tol: default_tol(),
            sampling_correction: 0.0,
            seed: 0,
            stop_at_violation: true,
            bound_mode: BoundMode::Clamp,
        }
    }

    pub fn validate(&self) -> Result<(), ConformanceError> {
        if !(self.delta_bound > 0.0 && self.delta_bound.is_finite()) {
            return Err(ConformanceError::Invalid(format!(
                "delta bound must be positive, got {}",
                self.delta_bound
            )));
        }
        if self.max_iterations == 0 {
            return Err(ConformanceError::Invalid("max_iterations must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ConformanceError::Invalid(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.sampling_correction >= 0.0 && self.sampling_correction.is_finite()) {
            return Err(ConformanceError::Invalid(format!(
                "sampling correction must be non-negative, got {}",
                self.sampling_correction
            )));
        }
        Ok(())
    }
}

/// Scaled, windowed Skorokhod distance between the outputs of `s1` and `s2`
/// on the input synthesized from `values`, plus the sampling correction.
pub fn cost(
    values: &[f64],
    ip: &InputParameterization,
    s1: &dyn SystemModel,
    s2: &dyn SystemModel,
    cfg: &TestConfig,
) -> Result<f64, ConformanceError> {
    let input = synthesize_input(values, ip)?;
    let clamped = ip.clamp(values);
    let run = |s: &dyn SystemModel| -> Result<PolygonalTrace, ConformanceError> {
        let out = s
            .simulate(&input, ip.horizon)
            .map_err(|source| ConformanceError::Simulation {
                system: s.name().to_string(),
                params: clamped.clone(),
                source,
            })?;
        let poly = PolygonalTrace::from(out);
        Ok(match &cfg.scaling {
            Some(p) => poly.scale(p)?,
            None => poly,
        })
    };
    let (y1, y2) = (run(s1)?, run(s2)?);
    if y1.dim() != y2.dim() {
        return Err(ConformanceError::OutputDimension(y1.dim(), y2.dim()));
    }
    let d = compute_distance(&y1, &y2, cfg.window, cfg.tol)?;
    Ok(sampling_adjusted(d.distance, cfg.sampling_correction)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Violation,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub cost: Option<f64>,
    pub max_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Samples of a trace in a serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestamps: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl From<&SampledTrace> for TraceRecord {
    fn from(tr: &SampledTrace) -> Self {
        Self {
            timestamps: tr.timestamps().to_vec(),
            values: tr.rows().map(|(_, v)| v.to_vec()).collect(),
        }
    }
}

impl TryFrom<&TraceRecord> for SampledTrace {
    type Error = crate::trace::TraceError;

    fn try_from(r: &TraceRecord) -> Result<Self, Self::Error> {
        SampledTrace::from_rows(&r.timestamps, &r.values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub systems: (String, String),
    pub delta_bound: f64,
    pub best_params: Vec<f64>,
    pub best_input: TraceRecord,
    /// `None` when every evaluation failed.
    pub max_cost: Option<f64>,
    pub iterations: usize,
    pub failures: usize,
    pub verdict: Verdict,
    pub log: Vec<IterationRecord>,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per iteration: `iteration,cost,max_cost,p0,...,error`.
    pub fn write_cost_log<W: Write>(&self, out: W) -> Result<(), ConformanceError> {
        let mut w = csv::Writer::from_writer(out);
        let k = self.best_params.len();
        let mut header = vec!["iteration".to_string(), "cost".into(), "max_cost".into()];
        header.extend((0..k).map(|i| format!("p{i}")));
        header.push("error".into());
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.log {
            let mut row = vec![r.iteration.to_string(), opt(r.cost), opt(r.max_cost)];
            row.extend(r.params.iter().map(f64::to_string));
            row.push(r.error.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| ConformanceError::Io(e.to_string()))?;
        Ok(())
    }

    pub fn write_files(&self, json: impl AsRef<Path>, csv_log: impl AsRef<Path>) -> Result<(), ConformanceError> {
        std::fs::write(json, self.to_json()).map_err(|e| ConformanceError::Io(e.to_string()))?;
        let f = std::fs::File::create(csv_log).map_err(|e| ConformanceError::Io(e.to_string()))?;
        self.write_cost_log(f)
    }
}

/// Searches for an input driving the outputs of `s1` and `s2` more than
/// `cfg.delta_bound` apart.
///
/// The search starts from a seeded random input and proceeds with
/// Nelder-Mead. It continues while the best cost is at most the bound and
/// the budget lasts; with `stop_at_violation` off the whole budget is spent.
/// Failed simulations are logged and count toward the budget.
pub fn run_conformance_test(
    s1: &dyn SystemModel,
    s2: &dyn SystemModel,
    ip: &InputParameterization,
    cfg: &TestConfig,
) -> Result<TestReport, ConformanceError> {
    cfg.validate()?;
    ip.validate()?;
    if s1.output_dim() != s2.output_dim() {
        return Err(ConformanceError::OutputDimension(s1.output_dim(), s2.output_dim()));
    }
    for s in [s1, s2] {
        if s.input_dim() != ip.input_dim {
            return Err(ConformanceError::Invalid(format!(
                "{} expects {} inputs but the parameterization has {}",
                s.name(),
                s.input_dim(),
                ip.input_dim
            )));
        }
    }
    let opts = NelderMeadOptions {
        max_evals: cfg.max_iterations,
        seed: cfg.seed,
        stop_above: cfg.stop_at_violation.then_some(cfg.delta_bound),
        bound_mode: cfg.bound_mode,
        start: Some(pick_random_input(ip, cfg.seed)),
        ..NelderMeadOptions::default()
    };
    let mut errors = Vec::new();
    let result = nelder_mead_maximize(
        |p| match cost(p, ip, s1, s2, cfg) {
            Ok(c) => {
                errors.push(None);
                c
            }
            Err(e) => {
                log::warn!("evaluation {} failed: {e}", errors.len() + 1);
                errors.push(Some(e.to_string()));
                f64::NAN
            }
        },
        &ip.bounds,
        &opts,
    )?;

    let log: Vec<IterationRecord> = result
        .log
        .iter()
        .zip(errors)
        .enumerate()
        .map(|(i, (e, error))| IterationRecord {
            iteration: i + 1,
            params: e.params.clone(),
            cost: e.value,
            max_cost: e.best_so_far,
            error,
        })
        .collect();
    let max_cost = result.best_value;
    let verdict = match max_cost {
        Some(c) if c > cfg.delta_bound => Verdict::Violation,
        _ => Verdict::BudgetExhausted,
    };
    let best_input = synthesize_input(&result.best, ip)?;
    Ok(TestReport {
        systems: (s1.name().to_string(), s2.name().to_string()),
        delta_bound: cfg.delta_bound,
        best_params: result.best,
        best_input: TraceRecord::from(&best_input),
        max_cost,
        iterations: log.len(),
        failures: log.iter().filter(|r| r.error.is_some()).count(),
        verdict,
        log,
    })
}

/// A built-in system described in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    TwoTank(TwoTankModel),
    Lqr(LqrPitchModel),
}

impl SystemSpec {
    pub fn build(&self) -> Box<dyn SystemModel> {
        match self {
            SystemSpec::TwoTank(m) => Box::new(m.clone()),
            SystemSpec::Lqr(m) => Box::new(m.clone()),
        }
    }
}

/// A complete conformance test: two systems, an input space and the search
/// settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub system_a: SystemSpec,
    pub system_b: SystemSpec,
    pub input: InputParameterization,
    pub test: TestConfig,
}

impl HarnessConfig {
    pub fn from_json(text: &str) -> Result<Self, ConformanceError> {
        serde_json::from_str(text).map_err(|e| ConformanceError::Invalid(format!("bad configuration: {e}")))
    }

    pub fn run(&self) -> Result<TestReport, ConformanceError> {
        let (a, b) = (self.system_a.build(), self.system_b.build());
        run_conformance_test(a.as_ref(), b.as_ref(), &self.input, &self.test)
    }
}
