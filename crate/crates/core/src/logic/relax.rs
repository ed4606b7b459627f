use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::{rational_from_f64, Constraint, ConstraintFunction, Formula, Node, Rational};
use super::kbound::{analytic_laplacian_k, k_bound, Domain};
use super::LogicError;

/// Which perturbation bound to use for quadratic constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadraticK {
    /// Exact supremum over the domain box.
    Exact,
    /// Closed form for sums of weighted squared differences, falling back to
    /// the exact bound for other shapes.
    Analytic,
    /// The smaller of the two when both are available.
    #[default]
    Tightest,
}

/// Parameters of a delta-relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationContext {
    pub delta: f64,
    /// Range of every frozen time variable.
    pub time_domain: Domain,
    /// Value range of every signal variable, by name.
    pub signal_ranges: BTreeMap<String, Domain>,
    /// Optional narrower ranges for individual time variables.
    pub time_overrides: BTreeMap<String, Domain>,
    pub quadratic: QuadraticK,
}

impl RelaxationContext {
    pub fn new(delta: f64, time_domain: Domain) -> Self {
        Self {
            delta,
            time_domain,
            signal_ranges: BTreeMap::new(),
            time_overrides: BTreeMap::new(),
            quadratic: QuadraticK::default(),
        }
    }

    pub fn with_signal_range(mut self, name: &str, range: Domain) -> Self {
        self.signal_ranges.insert(name.to_string(), range);
        self
    }

    pub fn with_quadratic(mut self, mode: QuadraticK) -> Self {
        self.quadratic = mode;
        self
    }

    /// Restricts each listed time variable to `[lo - delta, hi + delta]`
    /// intersected with the time domain.
    pub fn with_witnesses(mut self, bindings: &BTreeMap<String, (f64, f64)>) -> Self {
        for (name, &(lo, hi)) in bindings {
            let around = Domain {
                lo: lo - self.delta,
                hi: hi + self.delta,
            };
            if let Some(d) = around.intersect(&self.time_domain) {
                self.time_overrides.insert(name.clone(), d);
            }
        }
        self
    }

    fn time_domains(&self, f: &ConstraintFunction) -> BTreeMap<String, Domain> {
        f.vars()
            .into_iter()
            .map(|v| {
                let d = self.time_overrides.get(&v).copied().unwrap_or(self.time_domain);
                (v, d)
            })
            .collect()
    }

    fn signal_domains(&self, f: &ConstraintFunction) -> Result<BTreeMap<String, Domain>, LogicError> {
        f.vars()
            .into_iter()
            .map(|v| match self.signal_ranges.get(&v) {
                Some(d) => Ok((v, *d)),
                None => Err(LogicError::MissingSignalRange(v)),
            })
            .collect()
    }

    /// The perturbation bound used for `c` under the given variable domains.
    pub fn bound(&self, c: &Constraint, domains: &BTreeMap<String, Domain>) -> Result<Rational, LogicError> {
        let ConstraintFunction::Quadratic(q) = &c.f else {
            return k_bound(&c.f, self.delta, domains);
        };
        let analytic = match self.quadratic {
            QuadraticK::Exact => None,
            _ => analytic_laplacian_k(q, c.rel, self.delta)
                .map(rational_from_f64)
                .transpose()?,
        };
        let exact = match (self.quadratic, &analytic) {
            (QuadraticK::Analytic, Some(_)) => None,
            _ => Some(k_bound(&c.f, self.delta, domains)),
        };
        match (exact, analytic) {
            (Some(Ok(e)), Some(a)) => Ok(if a < e { a } else { e }),
            (Some(Ok(e)), None) => Ok(e),
            (Some(Err(_)), Some(a)) | (None, Some(a)) => Ok(a),
            (Some(Err(e)), None) => Err(e),
            (None, None) => Err(LogicError::NoQuadraticBound(c.f.to_string())),
        }
    }
}

/// Loosens every constraint of an NNF formula by its perturbation bound:
/// lower-bounded relations gain `K`, upper-bounded ones lose it, and the
/// relation symbol is kept.
pub fn relax(phi: &Formula, ctx: &RelaxationContext) -> Result<Formula, LogicError> {
    if !phi.is_nnf() {
        return Err(LogicError::NotNnf);
    }
    if !ctx.delta.is_finite() || ctx.delta < 0.0 {
        return Err(LogicError::BadDelta(ctx.delta));
    }
    let mut failure = None;
    let root = phi.root.map_constraints(&mut |n| {
        let (c, is_time) = match n {
            Node::Time(c) => (c, true),
            Node::Signal(c) => (c, false),
            _ => unreachable!("only constraint nodes are mapped"),
        };
        let relaxed = (|| {
            let domains = if is_time {
                ctx.time_domains(&c.f)
            } else {
                ctx.signal_domains(&c.f)?
            };
            let k = ctx.bound(c, &domains)?;
            let shift = if c.rel.is_upper() { -k } else { k };
            Ok::<_, LogicError>(Constraint::new(c.f.shifted(&shift), c.rel))
        })();
        match relaxed {
            Ok(c) if is_time => Node::Time(c),
            Ok(c) => Node::Signal(c),
            Err(e) => {
                failure.get_or_insert(e);
                n.clone()
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(Formula::with_signals(phi.signals.clone(), root)),
    }
}
