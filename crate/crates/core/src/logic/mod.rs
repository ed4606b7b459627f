//! Timed temporal logic with freeze quantifiers over time and signal
//! constraints: parsing, negation normal form, delta-relaxation and
//! finite-trace evaluation.

mod ast;
mod display;
mod eval;
mod kbound;
mod lexer;
mod nnf;
mod parser;
mod poly;
mod relax;
mod transference;

pub use ast::{
    parse_decimal, rational_from_f64, rational_to_f64, AffineFn, BlackboxEval, BlackboxFn, Constraint,
    ConstraintFunction, Formula, Node, QuadraticFn, Rational, Relation,
};
pub use display::format_rational;
pub use eval::{evaluate, evaluate_with, Environment, EvalOptions, Evaluation, TraceRef};
pub use kbound::{analytic_laplacian_k, k_bound, laplacian_form, Domain};
pub use nnf::to_nnf;
pub use parser::parse_formula;
pub use relax::{relax, QuadraticK, RelaxationContext};
pub use transference::{
    check_transference, check_transference_propositional, propositional_distance, TransferenceReport,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LogicError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("freeze variable {0:?} is bound twice on one path")]
    Rebinding(String),
    #[error("unknown variable {name:?} at byte {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("constraint at byte {pos} mixes time and signal variables")]
    MixedVariables { pos: usize },
    #[error("constraint at byte {pos} has degree above 2")]
    Degree { pos: usize },
    #[error("non-finite number {0}")]
    NonFinite(f64),
    #[error("relaxation requires a formula in negation normal form")]
    NotNnf,
    #[error("formula has free time variables: {0:?}")]
    OpenFormula(Vec<String>),
    #[error("perturbation bound unbounded: variable {0:?} needs a finite domain")]
    UnboundedK(String),
    #[error("no value interval given for signal {0:?}")]
    MissingSignalRange(String),
    #[error("delta must be finite and non-negative, got {0}")]
    BadDelta(f64),
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("quadratic constraint has {found} variables; at most {max} supported")]
    TooManyVariables { found: usize, max: usize },
    #[error("formula uses signal {name:?} (index {index}) but the trace has dimension {dim}")]
    SignalArity { name: String, index: usize, dim: usize },
    #[error("signal constraints cannot be evaluated on a propositional trace")]
    SignalOnPropositional,
    #[error("proposition {0:?} is neither a predicate nor a letter of the trace")]
    UnknownProposition(String),
    #[error("trace error: {0}")]
    Trace(String),
    #[error("no quadratic perturbation bound is available for {0}")]
    NoQuadraticBound(String),
}
