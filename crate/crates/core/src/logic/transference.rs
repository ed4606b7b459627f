use std::collections::BTreeSet;

use serde::Serialize;

use super::ast::{rational_from_f64, Constraint, ConstraintFunction, Formula, Node};
use super::eval::evaluate;
use super::kbound::Domain;
use super::nnf::to_nnf;
use super::relax::{relax, RelaxationContext};
use super::LogicError;
use crate::engine::{compute_distance, WindowParam};
use crate::trace::{PolygonalTrace, Predicate, PredicateFn, PropositionalTrace};

/// Outcome of checking that satisfaction carries over to a nearby trace.
#[derive(Debug, Clone, Serialize)]
pub struct TransferenceReport {
    /// Computed distance between the two traces.
    pub distance: f64,
    /// Relaxation radius actually used.
    pub delta: f64,
    /// The source formula in negation normal form with affine predicates
    /// inlined as signal constraints.
    #[serde(serialize_with = "display")]
    pub formula: Formula,
    #[serde(serialize_with = "display")]
    pub relaxed: Formula,
    pub source_holds: bool,
    pub target_holds: bool,
    /// Propositions that could not be relaxed and were kept verbatim.
    pub unrelaxed: Vec<String>,
}

fn display<S: serde::Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(f)
}

impl TransferenceReport {
    /// The source satisfies the formula but the target misses the relaxed
    /// formula even though every proposition was relaxed.
    pub fn is_violation(&self) -> bool {
        self.source_holds && !self.target_holds && self.unrelaxed.is_empty()
    }
}

fn hull(a: (f64, f64), b: (f64, f64)) -> Domain {
    Domain {
        lo: a.0.min(b.0),
        hi: a.1.max(b.1),
    }
}

/// Replaces affine named predicates by signal constraints over dimension
/// names; returns the names of propositions left in place.
fn inline_predicates(phi: &Formula, preds: &[Predicate], dim: usize) -> (Formula, Vec<String>) {
    let mut taken: BTreeSet<String> = phi.signals.iter().cloned().collect();
    phi.root.walk(&mut |n| {
        if let Node::Freeze(x, _) = n {
            taken.insert(x.clone());
        }
    });
    let mut signals = phi.signals.clone();
    let mut k = 0;
    while signals.len() < dim {
        let name = format!("s{k}");
        k += 1;
        if taken.insert(name.clone()) {
            signals.push(name);
        }
    }
    let mut unrelaxed = BTreeSet::new();
    let root = inline(&phi.root, preds, &signals, &mut unrelaxed);
    (Formula::with_signals(signals, root), unrelaxed.into_iter().collect())
}

fn inline(n: &Node, preds: &[Predicate], signals: &[String], left: &mut BTreeSet<String>) -> Node {
    let go = |m: &Node, left: &mut BTreeSet<String>| Box::new(inline(m, preds, signals, left));
    match n {
        Node::Prop(p) => match preds.iter().find(|q| &q.name == p) {
            Some(Predicate {
                f: PredicateFn::Affine { coeffs, constant },
                rel,
                ..
            }) => {
                let converted: Result<Vec<_>, _> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| rational_from_f64(*c).map(|r| (signals[i].clone(), r)))
                    .collect();
                match (converted, rational_from_f64(*constant)) {
                    (Ok(terms), Ok(c)) => {
                        let f = ConstraintFunction::affine(terms, c);
                        if f.vars().is_empty() {
                            return if rel.holds(0.0 + *constant) {
                                Node::True
                            } else {
                                Node::False
                            };
                        }
                        Node::Signal(Constraint::new(f, *rel))
                    }
                    _ => {
                        left.insert(p.clone());
                        n.clone()
                    }
                }
            }
            _ => {
                left.insert(p.clone());
                n.clone()
            }
        },
        Node::Not(a) => Node::Not(go(a, left)),
        Node::And(a, b) => Node::And(go(a, left), go(b, left)),
        Node::Or(a, b) => Node::Or(go(a, left), go(b, left)),
        Node::Until(a, b) => Node::Until(go(a, left), go(b, left)),
        Node::WaitingFor(a, b) => Node::WaitingFor(go(a, left), go(b, left)),
        Node::Freeze(x, a) => Node::Freeze(x.clone(), go(a, left)),
        other => other.clone(),
    }
}

/// Checks that `phi` on `source` transfers to the relaxation of `phi` on
/// `target`, relaxing by the computed distance plus `tol`.
///
/// Affine predicates from `preds` are inlined as signal constraints so that
/// they are relaxed along with everything else; any other proposition is
/// listed in [`TransferenceReport::unrelaxed`].
pub fn check_transference(
    source: &PolygonalTrace,
    target: &PolygonalTrace,
    phi: &Formula,
    preds: &[Predicate],
    window: WindowParam,
    tol: f64,
) -> crate::Result<TransferenceReport> {
    let dist = compute_distance(source, target, window, tol)?;
    let delta = dist.distance + tol;
    let (inlined, unrelaxed) = inline_predicates(phi, preds, source.dim());
    let nnf = to_nnf(&inlined);
    let mut ctx = RelaxationContext::new(delta, hull(source.domain(), target.domain()));
    let (ra, rb) = (source.value_ranges(), target.value_ranges());
    for (k, name) in nnf.signals.iter().enumerate().take(source.dim()) {
        ctx = ctx.with_signal_range(name, hull(ra[k], rb[k]));
    }
    let relaxed = relax(&nnf, &ctx)?;
    let source_holds = evaluate(&nnf, source, preds)?;
    let target_holds = evaluate(&relaxed, target, preds)?;
    Ok(TransferenceReport {
        distance: dist.distance,
        delta,
        formula: nnf,
        relaxed,
        source_holds,
        target_holds,
        unrelaxed,
    })
}

/// Distance between propositional traces: the largest breakpoint
/// displacement when both have the same sequence of letters, else `None`.
pub fn propositional_distance(a: &PropositionalTrace, b: &PropositionalTrace) -> Option<f64> {
    let (a, b) = (a.coalesced(), b.coalesced());
    if a.letters() != b.letters() {
        return None;
    }
    Some(
        a.breakpoints()
            .iter()
            .zip(b.breakpoints())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
    )
}

/// Propositional counterpart of [`check_transference`]; fails when the
/// traces do not carry the same letter sequence.
pub fn check_transference_propositional(
    source: &PropositionalTrace,
    target: &PropositionalTrace,
    phi: &Formula,
    tol: f64,
) -> Result<TransferenceReport, LogicError> {
    let distance = propositional_distance(source, target)
        .ok_or_else(|| LogicError::Trace("traces carry different letter sequences".into()))?;
    let delta = distance + tol;
    let nnf = to_nnf(phi);
    let ctx = RelaxationContext::new(delta, hull(source.domain(), target.domain()));
    let relaxed = relax(&nnf, &ctx)?;
    Ok(TransferenceReport {
        distance,
        delta,
        source_holds: evaluate(&nnf, source, &[])?,
        target_holds: evaluate(&relaxed, target, &[])?,
        formula: nnf,
        relaxed,
        unrelaxed: Vec::new(),
    })
}
