use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use skorokhod::conformance::{HarnessConfig, Verdict};
use skorokhod::engine::{check_within, compute_distance, sampling_adjusted, WindowParam};
use skorokhod::logic::{
    evaluate_with, parse_formula, relax, to_nnf, Domain, EvalOptions, Formula, QuadraticK, RelaxationContext, TraceRef,
};
use skorokhod::systems::{DelayFn, LqrPitchModel, TwoTankModel};
use skorokhod::trace::{
    parse_predicate_table, read_csv_file, write_csv, PolygonalTrace, Predicate, PropositionalTrace, SampledTrace,
    ScalingProfile,
};

const EXIT_NEGATIVE: u8 = 3;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 1;

/// Skorokhod-metric conformance testing for dynamical-system traces.
///
/// Exit codes: 0 for success, a satisfied check or a found violation;
/// 3 for a negative verdict; 2 for usage or input errors; 1 for internal
/// failures.
#[derive(Debug, Parser)]
#[command(name = "skorokhod", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the Skorokhod distance between two CSV traces.
    Dist {
        trace_a: PathBuf,
        trace_b: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Absolute bisection tolerance.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Sampling period; 2 * dsamp is added to the reported adjusted distance.
        #[arg(long, default_value_t = 0.0)]
        dsamp: f64,
    },
    /// Decide whether two CSV traces are within `delta` of each other.
    Check {
        trace_a: PathBuf,
        trace_b: PathBuf,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Print the delta-relaxation of a formula.
    Relax {
        /// File holding the formula text.
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Take the time domain and signal ranges from the hull of two traces.
        #[arg(long, num_args = 2, value_names = ["TRACE_A", "TRACE_B"], conflicts_with = "interval")]
        hull_from: Option<Vec<PathBuf>>,
        /// Explicit time domain.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        interval: Option<Vec<f64>>,
        /// JSON object mapping signal names to `[lo, hi]` value ranges.
        #[arg(long)]
        jmap: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = QuadraticArg::Tightest)]
        quadratic: QuadraticArg,
    },
    /// Evaluate a formula on a trace.
    Eval {
        #[arg(long)]
        formula: PathBuf,
        /// Real-valued CSV trace.
        #[arg(long, required_unless_present = "prop_trace", conflicts_with = "prop_trace")]
        trace: Option<PathBuf>,
        /// Propositional trace as JSON: `{"pieces": [[t, ["P", ...]], ...], "end": t}`.
        #[arg(long)]
        prop_trace: Option<PathBuf>,
        /// JSON predicate table for the propositions of a real-valued trace.
        #[arg(long)]
        preds: Option<PathBuf>,
        /// Values for free time variables, as `name=value`.
        #[arg(long = "env", value_parser = parse_binding)]
        env: Vec<(String, f64)>,
    },
    /// Run a conformance test described by a JSON configuration.
    Conform {
        #[arg(long)]
        config: PathBuf,
        /// Report destination.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Per-iteration cost log destination.
        #[arg(long, default_value = "costs.csv")]
        log: PathBuf,
        /// Overrides the seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate a built-in system and write its output as CSV.
    Simulate {
        #[arg(long, value_enum)]
        system: SystemArg,
        /// JSON model parameters; the two-tank defaults to the reference fixture.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Horizon.
        #[arg(long = "T", short = 'T')]
        horizon: f64,
        /// Output sampling period.
        #[arg(long)]
        period: Option<f64>,
        /// Constant pitch reference for the LQR model.
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        reference: f64,
        /// Pitch reference as a CSV trace; overrides `--reference`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the manual page in roff format.
    #[command(hide = true)]
    Man,
}

#[derive(Debug, clap::Args)]
struct MetricArgs {
    /// Segment window radius, or `unbounded`.
    #[arg(long, default_value = "unbounded")]
    window: WindowParam,
    /// Scaling profile such as `time=2,0=0.08,1=1.0`.
    #[arg(long)]
    scale: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum QuadraticArg {
    Exact,
    Analytic,
    Tightest,
}

impl From<QuadraticArg> for QuadraticK {
    fn from(q: QuadraticArg) -> Self {
        match q {
            QuadraticArg::Exact => QuadraticK::Exact,
            QuadraticArg::Analytic => QuadraticK::Analytic,
            QuadraticArg::Tightest => QuadraticK::Tightest,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SystemArg {
    Tank,
    TankDelayed,
    Lqr,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<skorokhod::Error> for CliError {
    fn from(e: skorokhod::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad number in {s:?}"))?;
    Ok((k.trim().to_string(), v))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_trace(path: &Path) -> Result<PolygonalTrace, CliError> {
    Ok(read_csv_file(path)?.into())
}

fn read_formula(path: &Path) -> Result<Formula, CliError> {
    parse_formula(read_text(path)?.trim()).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_pair(a: &Path, b: &Path, metric: &MetricArgs) -> Result<(PolygonalTrace, PolygonalTrace), CliError> {
    let (a, b) = (read_trace(a)?, read_trace(b)?);
    if a.dim() != b.dim() {
        return Err(CliError::Input(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    match &metric.scale {
        Some(spec) => {
            let p = ScalingProfile::parse(spec, a.dim()).map_err(input_err)?;
            Ok((a.scale(&p).map_err(input_err)?, b.scale(&p).map_err(input_err)?))
        }
        None => Ok((a, b)),
    }
}

fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::Internal(e.to_string()))
}

fn emit_json<T: Serialize>(v: &T) -> Result<(), CliError> {
    emit(&serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?)
}

#[derive(Serialize)]
struct DistReport {
    distance: f64,
    adjusted_distance: f64,
    lower_bound: f64,
    upper_bound: f64,
    monitor_calls: usize,
    seconds: f64,
    window: WindowParam,
    tolerance: f64,
    dsamp: f64,
}

#[derive(Deserialize)]
struct PropTraceFile {
    pieces: Vec<(f64, Vec<String>)>,
    end: f64,
}

fn hull(a: (f64, f64), b: (f64, f64)) -> Domain {
    Domain {
        lo: a.0.min(b.0),
        hi: a.1.max(b.1),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Dist {
            trace_a,
            trace_b,
            metric,
            tol,
            dsamp,
        } => {
            let (a, b) = load_pair(&trace_a, &trace_b, &metric)?;
            let start = Instant::now();
            let r = compute_distance(&a, &b, metric.window, tol).map_err(input_err)?;
            let seconds = start.elapsed().as_secs_f64();
            emit_json(&DistReport {
                distance: r.distance,
                adjusted_distance: sampling_adjusted(r.distance, dsamp).map_err(input_err)?,
                lower_bound: r.lower_bound,
                upper_bound: r.upper_bound,
                monitor_calls: r.monitor_calls,
                seconds,
                window: r.window,
                tolerance: r.tolerance,
                dsamp,
            })?;
            Ok(0)
        }
        Command::Check {
            trace_a,
            trace_b,
            delta,
            metric,
        } => {
            let (a, b) = load_pair(&trace_a, &trace_b, &metric)?;
            let within = check_within(&a, &b, delta, metric.window).map_err(input_err)?;
            if within {
                emit(&format!("within: dist_S <= {delta}"))?;
                Ok(0)
            } else {
                emit(&format!("not within: dist_S > {delta}"))?;
                Ok(EXIT_NEGATIVE)
            }
        }
        Command::Relax {
            formula,
            delta,
            hull_from,
            interval,
            jmap,
            quadratic,
        } => {
            let phi = to_nnf(&read_formula(&formula)?);
            let mut ranges: BTreeMap<String, Domain> = BTreeMap::new();
            let time_domain = match (hull_from, interval) {
                (Some(paths), _) => {
                    let (a, b) = (read_trace(&paths[0])?, read_trace(&paths[1])?);
                    let (ra, rb) = (a.value_ranges(), b.value_ranges());
                    for (k, name) in phi.signals.iter().enumerate() {
                        if let (Some(&x), Some(&y)) = (ra.get(k), rb.get(k)) {
                            ranges.insert(name.clone(), hull(x, y));
                        }
                    }
                    hull(a.domain(), b.domain())
                }
                (None, Some(iv)) => Domain::new(iv[0], iv[1]).map_err(input_err)?,
                (None, None) => return Err(CliError::Input("one of --hull-from or --interval is required".into())),
            };
            if let Some(path) = jmap {
                let table: BTreeMap<String, (f64, f64)> = read_json(&path)?;
                for (name, (lo, hi)) in table {
                    ranges.insert(name, Domain::new(lo, hi).map_err(input_err)?);
                }
            }
            let mut ctx = RelaxationContext::new(delta, time_domain).with_quadratic(quadratic.into());
            ctx.signal_ranges = ranges;
            let relaxed = relax(&phi, &ctx).map_err(input_err)?;
            emit(&relaxed.to_string())?;
            Ok(0)
        }
        Command::Eval {
            formula,
            trace,
            prop_trace,
            preds,
            env,
        } => {
            let phi = read_formula(&formula)?;
            let preds: Vec<Predicate> = match preds {
                Some(p) => parse_predicate_table(&read_text(&p)?).map_err(input_err)?,
                None => Vec::new(),
            };
            let opts = EvalOptions {
                env: env.into_iter().collect(),
                ..EvalOptions::default()
            };
            let polygonal;
            let propositional;
            let target = match (trace, prop_trace) {
                (Some(p), _) => {
                    polygonal = read_trace(&p)?;
                    TraceRef::Polygonal(&polygonal)
                }
                (None, Some(p)) => {
                    let f: PropTraceFile = read_json(&p)?;
                    propositional = PropositionalTrace::from_pieces(f.pieces, f.end).map_err(input_err)?;
                    TraceRef::Propositional(&propositional)
                }
                (None, None) => return Err(CliError::Input("a trace is required".into())),
            };
            let ev = evaluate_with(&phi, target, &preds, &opts).map_err(input_err)?;
            if ev.holds {
                emit("sat")?;
                for (name, (lo, hi)) in &ev.bindings {
                    emit(&format!("{name} in [{lo}, {hi}]"))?;
                }
                Ok(0)
            } else {
                emit("unsat")?;
                Ok(EXIT_NEGATIVE)
            }
        }
        Command::Conform { config, out, log, seed } => {
            let mut cfg = HarnessConfig::from_json(&read_text(&config)?).map_err(input_err)?;
            if let Some(s) = seed {
                cfg.test.seed = s;
            }
            let report = cfg.run().map_err(input_err)?;
            report.write_files(&out, &log).map_err(input_err)?;
            let max = report.max_cost.map_or("none".to_string(), |c| c.to_string());
            match report.verdict {
                Verdict::Violation => {
                    emit(&format!(
                        "violation: cost {max} > {} after {} evaluations",
                        report.delta_bound, report.iterations
                    ))?;
                    Ok(0)
                }
                Verdict::BudgetExhausted => {
                    emit(&format!(
                        "budget exhausted: max cost {max} <= {} after {} evaluations",
                        report.delta_bound, report.iterations
                    ))?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Simulate {
            system,
            params,
            horizon,
            period,
            reference,
            input,
            out,
        } => {
            let trace = match system {
                SystemArg::Tank | SystemArg::TankDelayed => {
                    let mut m: TwoTankModel = match &params {
                        Some(p) => read_json(p)?,
                        None => TwoTankModel::new(1.0, [0.4, 0.4], [1.0, 1.0], [2.0, 2.0]),
                    };
                    if matches!(system, SystemArg::TankDelayed) && m.delay.is_none() {
                        m.delay = Some(DelayFn::default());
                    }
                    if let Some(p) = period {
                        m.output_period = p;
                    }
                    m.run(horizon).map_err(input_err)?.trace
                }
                SystemArg::Lqr => {
                    let mut m: LqrPitchModel = match &params {
                        Some(p) => read_json(p)?,
                        None => LqrPitchModel::continuous(),
                    };
                    if let Some(p) = period {
                        m.output_period = p;
                    }
                    let theta_des = match &input {
                        Some(p) => read_csv_file(p)?,
                        None => SampledTrace::from_rows(
                            &[0.0, horizon.max(f64::MIN_POSITIVE)],
                            &[vec![reference], vec![reference]],
                        )
                        .map_err(input_err)?,
                    };
                    m.simulate_pitch(&theta_des, horizon).map_err(input_err)?
                }
            };
            match out {
                Some(path) => {
                    let f = std::fs::File::create(&path)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                    write_csv(&trace, f).map_err(input_err)?;
                }
                None => write_csv(&trace, std::io::stdout().lock()).map_err(|e| CliError::Internal(e.to_string()))?,
            }
            Ok(0)
        }
        Command::Man => {
            let mut buf = Vec::new();
            clap_mangen::Man::new(Cli::command())
                .render(&mut buf)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            std::io::stdout()
                .write_all(&buf)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e @ CliError::Input(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e @ CliError::Internal(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
