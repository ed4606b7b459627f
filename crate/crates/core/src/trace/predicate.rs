use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::TraceError;

/// Comparison of a constraint value against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn holds(self, value: f64) -> bool {
        match self {
            Relation::Le => value <= 0.0,
            Relation::Lt => value < 0.0,
            Relation::Ge => value >= 0.0,
            Relation::Gt => value > 0.0,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Relation::Le => Relation::Gt,
            Relation::Lt => Relation::Ge,
            Relation::Ge => Relation::Lt,
            Relation::Gt => Relation::Le,
        }
    }

    /// `true` for `<=` and `<`, which bound the constraint value from above.
    pub fn is_upper(self) -> bool {
        matches!(self, Relation::Le | Relation::Lt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl std::str::FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "<=" => Ok(Relation::Le),
            "<" => Ok(Relation::Lt),
            ">=" => Ok(Relation::Ge),
            ">" => Ok(Relation::Gt),
            other => Err(format!("unknown relation {other:?}")),
        }
    }
}

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Real-valued function of a trace value.
#[derive(Clone)]
pub enum PredicateFn {
    /// `sum_k coeffs[k] * x_k + constant`
    Affine { coeffs: Vec<f64>, constant: f64 },
    /// Arbitrary function reading the first `arity` dimensions.
    Blackbox { f: ValueFn, arity: usize },
}

impl fmt::Debug for PredicateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateFn::Affine { coeffs, constant } => f
                .debug_struct("Affine")
                .field("coeffs", coeffs)
                .field("constant", constant)
                .finish(),
            PredicateFn::Blackbox { arity, .. } => f.debug_struct("Blackbox").field("arity", arity).finish(),
        }
    }
}

impl PredicateFn {
    pub fn arity(&self) -> usize {
        match self {
            PredicateFn::Affine { coeffs, .. } => coeffs.len(),
            PredicateFn::Blackbox { arity, .. } => *arity,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            PredicateFn::Affine { coeffs, constant } => {
                coeffs.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + constant
            }
            PredicateFn::Blackbox { f, .. } => f(x),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, PredicateFn::Affine { .. })
    }
}

/// A named booleanizing predicate `f(x) ~ 0`.
#[derive(Debug, Clone)]
pub struct Predicate {
    pub name: String,
    pub f: PredicateFn,
    pub rel: Relation,
}

impl Predicate {
    pub fn affine(name: impl Into<String>, coeffs: Vec<f64>, constant: f64, rel: Relation) -> Self {
        Self {
            name: name.into(),
            f: PredicateFn::Affine { coeffs, constant },
            rel,
        }
    }

    pub fn blackbox<F>(name: impl Into<String>, arity: usize, rel: Relation, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: PredicateFn::Blackbox { f: Arc::new(f), arity },
            rel,
        }
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.rel.holds(self.f.eval(x))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredicateSpec {
    coeffs: Vec<f64>,
    #[serde(rename = "const", default)]
    constant: f64,
    rel: Relation,
}

/// Parses `{"name": {"coeffs": [..], "const": c, "rel": ">="}, ...}`.
pub fn parse_predicate_table(json: &str) -> Result<Vec<Predicate>, TraceError> {
    let table: BTreeMap<String, PredicateSpec> =
        serde_json::from_str(json).map_err(|e| TraceError::BadPredicateTable(e.to_string()))?;
    Ok(table
        .into_iter()
        .map(|(name, spec)| Predicate::affine(name, spec.coeffs, spec.constant, spec.rel))
        .collect())
}
