//! Finite-trace satisfaction.
//!
//! Quantified times range over a finite critical set: trace knots,
//! predicate and signal-constraint crossings, roots of time constraints once
//! all but one of their variables are frozen, and shifts of those points by
//! the offsets of difference constraints. Between consecutive critical points
//! every subformula is assumed to have constant truth, which is exact for
//! finitely-variable traces with difference constraints.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_traits::Signed;

use super::ast::{rational_to_f64, Constraint, ConstraintFunction, Formula, Node, Relation};
use super::LogicError;
use crate::trace::{booleanize, PolygonalTrace, Predicate, PredicateFn, PropositionalTrace};

/// Values of frozen time variables.
pub type Environment = BTreeMap<String, f64>;

/// The trace a formula is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum TraceRef<'a> {
    Polygonal(&'a PolygonalTrace),
    Propositional(&'a PropositionalTrace),
}

impl<'a> From<&'a PolygonalTrace> for TraceRef<'a> {
    fn from(t: &'a PolygonalTrace) -> Self {
        TraceRef::Polygonal(t)
    }
}

impl<'a> From<&'a PropositionalTrace> for TraceRef<'a> {
    fn from(t: &'a PropositionalTrace) -> Self {
        TraceRef::Propositional(t)
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Values for time variables left free by the formula.
    pub env: Environment,
    /// Evaluation start time; defaults to the start of the trace.
    pub start: Option<f64>,
    /// Upper bound on the size of each critical set.
    pub max_critical_points: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            env: Environment::new(),
            start: None,
            max_critical_points: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub holds: bool,
    /// For each freeze variable, the smallest and largest time it was bound
    /// to during evaluation.
    pub bindings: BTreeMap<String, (f64, f64)>,
}

/// `true` iff the trace satisfies the closed formula from its start time.
///
/// Named propositions are looked up in `preds` for polygonal traces and in
/// the letters of propositional traces.
pub fn evaluate<'a>(phi: &Formula, trace: impl Into<TraceRef<'a>>, preds: &[Predicate]) -> Result<bool, LogicError> {
    Ok(evaluate_with(phi, trace, preds, &EvalOptions::default())?.holds)
}

pub fn evaluate_with<'a>(
    phi: &Formula,
    trace: impl Into<TraceRef<'a>>,
    preds: &[Predicate],
    opts: &EvalOptions,
) -> Result<Evaluation, LogicError> {
    let mut ev = Evaluator::compile(phi, trace.into(), preds, opts)?;
    let mut env = vec![f64::NAN; ev.slots.len()];
    for (name, &slot) in &ev.slots {
        if let Some(&v) = opts.env.get(name) {
            env[slot] = v;
        }
    }
    let t0 = match opts.start {
        Some(t) if t >= ev.lo && t <= ev.hi => t,
        Some(t) => {
            return Err(LogicError::Trace(format!(
                "start time {t} outside [{}, {}]",
                ev.lo, ev.hi
            )))
        }
        None => ev.lo,
    };
    let holds = ev.eval(ev.root, t0, &mut env);
    let bindings = ev
        .slots
        .iter()
        .filter_map(|(name, &slot)| ev.bound_range[slot].map(|r| (name.clone(), r)))
        .collect();
    Ok(Evaluation { holds, bindings })
}

#[derive(Debug)]
enum Ir {
    True,
    False,
    Prop(String),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Until(usize, usize),
    WaitingFor(usize, usize),
    Freeze(usize, usize),
    Time(usize),
    Signal(usize),
}

struct TimeConstraint {
    f: ConstraintFunction,
    rel: Relation,
    slots: Vec<(String, usize)>,
    eps: f64,
}

struct SignalConstraint {
    f: ConstraintFunction,
    rel: Relation,
    index: BTreeMap<String, usize>,
    eps: f64,
}

type MemoKey = (usize, u64, Vec<u64>);

const MEMO_LIMIT: usize = 1 << 20;

struct Evaluator<'a> {
    nodes: Vec<Ir>,
    free: Vec<Vec<usize>>,
    root: usize,
    slots: BTreeMap<String, usize>,
    times: Vec<TimeConstraint>,
    signals: Vec<SignalConstraint>,
    shifts: Vec<f64>,
    depth: usize,
    nesting: usize,
    trace: TraceRef<'a>,
    letters: Option<PropositionalTrace>,
    base: Rc<Vec<f64>>,
    lo: f64,
    hi: f64,
    merge_tol: f64,
    max_points: usize,
    memo: HashMap<MemoKey, bool>,
    local_sets: HashMap<Vec<u64>, Rc<Vec<f64>>>,
    bound_range: Vec<Option<(f64, f64)>>,
    buf: Vec<f64>,
}

fn relation_holds(rel: Relation, v: f64, eps: f64) -> bool {
    match rel {
        Relation::Le => v <= eps,
        Relation::Lt => v < -eps,
        Relation::Ge => v >= -eps,
        Relation::Gt => v > eps,
    }
}

/// Rough magnitude of `f` when every argument has size `scale`.
fn magnitude(f: &ConstraintFunction, scale: f64) -> f64 {
    match f {
        ConstraintFunction::Affine(a) => {
            a.coeffs.values().map(|c| rational_to_f64(&c.abs())).sum::<f64>() * scale
                + rational_to_f64(&a.constant.abs())
        }
        ConstraintFunction::Quadratic(q) => {
            q.quad.values().map(|c| rational_to_f64(&c.abs())).sum::<f64>() * scale * scale
                + q.linear.values().map(|c| rational_to_f64(&c.abs())).sum::<f64>() * scale
                + rational_to_f64(&q.constant.abs())
        }
        ConstraintFunction::Blackbox(b) => b.lipschitz * scale + b.offset.abs(),
    }
}

fn dedup_sorted(v: &mut Vec<f64>, tol: f64) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|b, a| *b - *a <= tol);
}

impl<'a> Evaluator<'a> {
    fn compile(
        phi: &Formula,
        trace: TraceRef<'a>,
        preds: &[Predicate],
        opts: &EvalOptions,
    ) -> Result<Self, LogicError> {
        let open: Vec<String> = phi
            .root
            .free_time_vars()
            .into_iter()
            .filter(|v| !opts.env.contains_key(v))
            .collect();
        if !open.is_empty() {
            return Err(LogicError::OpenFormula(open));
        }
        phi.root.check_binders()?;

        let (lo, hi) = match trace {
            TraceRef::Polygonal(t) => t.domain(),
            TraceRef::Propositional(t) => t.domain(),
        };
        let scale = (hi - lo).max(hi.abs()).max(lo.abs()).max(1.0);

        let mut ev = Evaluator {
            nodes: Vec::new(),
            free: Vec::new(),
            root: 0,
            slots: BTreeMap::new(),
            times: Vec::new(),
            signals: Vec::new(),
            shifts: Vec::new(),
            depth: 0,
            nesting: 0,
            trace,
            letters: None,
            base: Rc::new(Vec::new()),
            lo,
            hi,
            merge_tol: 1e-12 * scale,
            max_points: opts.max_critical_points.max(2),
            memo: HashMap::new(),
            local_sets: HashMap::new(),
            bound_range: Vec::new(),
            buf: Vec::new(),
        };
        for name in opts.env.keys() {
            let n = ev.slots.len();
            ev.slots.entry(name.clone()).or_insert(n);
        }
        ev.root = ev.lower(phi, &phi.root, scale)?;
        ev.bound_range = vec![None; ev.slots.len()];

        let mut critical = match trace {
            TraceRef::Polygonal(tr) => {
                ev.buf = vec![0.0; tr.dim()];
                let mut all: Vec<Predicate> = preds.to_vec();
                for (k, sc) in ev.signals.iter().enumerate() {
                    all.push(signal_predicate(k, sc, tr.dim()));
                }
                let known: std::collections::BTreeSet<&str> = preds.iter().map(|p| p.name.as_str()).collect();
                for n in &ev.nodes {
                    if let Ir::Prop(p) = n {
                        if !known.contains(p.as_str()) {
                            return Err(LogicError::UnknownProposition(p.clone()));
                        }
                    }
                }
                let b = booleanize(tr, &all).map_err(|e| LogicError::Trace(e.to_string()))?;
                let pts = b.breakpoints().to_vec();
                ev.letters = Some(b);
                pts
            }
            TraceRef::Propositional(tr) => {
                if !ev.signals.is_empty() {
                    return Err(LogicError::SignalOnPropositional);
                }
                tr.breakpoints().to_vec()
            }
        };
        for tc in &ev.times {
            if tc.slots.is_empty() {
                continue;
            }
            if let Some(s) = tc.f.difference_shift() {
                if s != 0.0 {
                    ev.shifts.push(s.abs());
                }
            }
        }
        dedup_sorted(&mut ev.shifts, 0.0);
        ev.close_under_shifts(&mut critical);
        ev.base = Rc::new(critical);
        Ok(ev)
    }

    fn push(&mut self, ir: Ir, free: Vec<usize>) -> usize {
        self.nodes.push(ir);
        self.free.push(free);
        self.nodes.len() - 1
    }

    fn merged(&self, a: usize, b: usize) -> Vec<usize> {
        let mut f = self.free[a].clone();
        f.extend_from_slice(&self.free[b]);
        f.sort_unstable();
        f.dedup();
        f
    }

    fn slot(&mut self, name: &str) -> usize {
        let n = self.slots.len();
        *self.slots.entry(name.to_string()).or_insert(n)
    }

    fn lower(&mut self, phi: &Formula, n: &Node, scale: f64) -> Result<usize, LogicError> {
        Ok(match n {
            Node::True => self.push(Ir::True, vec![]),
            Node::False => self.push(Ir::False, vec![]),
            Node::Prop(p) => self.push(Ir::Prop(p.clone()), vec![]),
            Node::Not(a) => {
                let a = self.lower(phi, a, scale)?;
                let f = self.free[a].clone();
                self.push(Ir::Not(a), f)
            }
            Node::And(a, b) | Node::Or(a, b) | Node::Until(a, b) | Node::WaitingFor(a, b) => {
                let a = self.lower(phi, a, scale)?;
                let b = self.lower(phi, b, scale)?;
                let f = self.merged(a, b);
                let ir = match n {
                    Node::And(..) => Ir::And(a, b),
                    Node::Or(..) => Ir::Or(a, b),
                    Node::Until(..) => Ir::Until(a, b),
                    _ => Ir::WaitingFor(a, b),
                };
                self.push(ir, f)
            }
            Node::Freeze(x, body) => {
                let slot = self.slot(x);
                self.nesting += 1;
                self.depth = self.depth.max(self.nesting);
                let body = self.lower(phi, body, scale)?;
                self.nesting -= 1;
                let f = self.free[body].iter().copied().filter(|&s| s != slot).collect();
                self.push(Ir::Freeze(slot, body), f)
            }
            Node::Time(Constraint { f, rel }) => {
                let slots: Vec<(String, usize)> = f.vars().into_iter().map(|v| (v.clone(), self.slot(&v))).collect();
                let mut free: Vec<usize> = slots.iter().map(|(_, s)| *s).collect();
                free.sort_unstable();
                self.times.push(TimeConstraint {
                    f: f.clone(),
                    rel: *rel,
                    slots,
                    eps: 1e-9 * magnitude(f, scale).max(1.0),
                });
                self.push(Ir::Time(self.times.len() - 1), free)
            }
            Node::Signal(Constraint { f, rel }) => {
                let mut index = BTreeMap::new();
                let (dim, vscale) = match self.trace {
                    TraceRef::Polygonal(tr) => (
                        tr.dim(),
                        tr.value_ranges()
                            .iter()
                            .map(|(a, b)| a.abs().max(b.abs()))
                            .fold(1.0, f64::max),
                    ),
                    TraceRef::Propositional(_) => return Err(LogicError::SignalOnPropositional),
                };
                for v in f.vars() {
                    let k = phi.signal_index(&v).ok_or_else(|| LogicError::UnknownVariable {
                        name: v.clone(),
                        pos: 0,
                    })?;
                    if k >= dim {
                        return Err(LogicError::SignalArity { name: v, index: k, dim });
                    }
                    index.insert(v, k);
                }
                self.signals.push(SignalConstraint {
                    f: f.clone(),
                    rel: *rel,
                    index,
                    eps: 1e-9 * magnitude(f, vscale).max(1.0),
                });
                self.push(Ir::Signal(self.signals.len() - 1), vec![])
            }
        })
    }

    /// Adds `p - s` for every shift `s`, iterated once per level of freeze
    /// nesting.
    fn close_under_shifts(&self, pts: &mut Vec<f64>) {
        dedup_sorted(pts, self.merge_tol);
        if self.shifts.is_empty() {
            return;
        }
        let mut frontier = pts.clone();
        for _ in 0..self.depth {
            let mut next = Vec::new();
            for &p in &frontier {
                for &s in &self.shifts {
                    let q = p - s;
                    if q >= self.lo - self.merge_tol {
                        next.push(q.max(self.lo));
                    }
                }
            }
            if next.is_empty() || pts.len() + next.len() > self.max_points {
                break;
            }
            pts.extend_from_slice(&next);
            dedup_sorted(pts, self.merge_tol);
            frontier = next;
        }
    }

    /// Times at which a constraint with exactly one unfrozen variable changes truth.
    fn env_roots(&self, env: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for tc in &self.times {
            let unbound: Vec<&(String, usize)> = tc.slots.iter().filter(|(_, s)| env[*s].is_nan()).collect();
            let [(var, _)] = unbound.as_slice() else {
                continue;
            };
            let lookup = |name: &str| -> f64 {
                tc.slots
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, s)| env[*s])
                    .unwrap_or(0.0)
            };
            match &tc.f {
                ConstraintFunction::Affine(a) => {
                    let coeff = rational_to_f64(&a.coeffs[var.as_str()]);
                    let rest = tc.f.eval(&|n| if n == var { 0.0 } else { lookup(n) });
                    out.push(-rest / coeff);
                }
                ConstraintFunction::Quadratic(q) => {
                    let mut qa = 0.0;
                    let mut qb = q.linear.get(var.as_str()).map(rational_to_f64).unwrap_or(0.0);
                    for ((u, v), c) in &q.quad {
                        let c = rational_to_f64(c);
                        if u == var && v == var {
                            qa += c;
                        } else if u == var {
                            qb += c * lookup(v);
                        } else if v == var {
                            qb += c * lookup(u);
                        }
                    }
                    let qc = tc.f.eval(&|n| if n == var { 0.0 } else { lookup(n) });
                    if qa == 0.0 {
                        if qb != 0.0 {
                            out.push(-qc / qb);
                        }
                    } else {
                        let disc = qb * qb - 4.0 * qa * qc;
                        if disc >= 0.0 {
                            let r = disc.sqrt();
                            out.push((-qb - r) / (2.0 * qa));
                            out.push((-qb + r) / (2.0 * qa));
                        }
                    }
                }
                ConstraintFunction::Blackbox(_) => {}
            }
        }
        out.retain(|t| t.is_finite() && *t >= self.lo && *t <= self.hi);
        out
    }

    fn local_set(&mut self, env: &[f64]) -> Rc<Vec<f64>> {
        let key: Vec<u64> = env.iter().map(|v| v.to_bits()).collect();
        if let Some(s) = self.local_sets.get(&key) {
            return Rc::clone(s);
        }
        let mut roots = self.env_roots(env);
        let set = if roots.is_empty() {
            Rc::clone(&self.base)
        } else {
            self.close_under_shifts(&mut roots);
            let mut all = (*self.base).clone();
            all.extend(roots);
            dedup_sorted(&mut all, self.merge_tol);
            Rc::new(all)
        };
        if self.local_sets.len() >= MEMO_LIMIT >> 6 {
            self.local_sets.clear();
        }
        self.local_sets.insert(key, Rc::clone(&set));
        set
    }

    /// `t0` followed by the critical points after it.
    fn points_from(&mut self, env: &[f64], t0: f64) -> Vec<f64> {
        let set = self.local_set(env);
        let start = set.partition_point(|&p| p <= t0 + self.merge_tol);
        std::iter::once(t0).chain(set[start..].iter().copied()).collect()
    }

    fn prop(&self, name: &str, t: f64) -> bool {
        let letters = match (&self.letters, self.trace) {
            (Some(b), _) => b,
            (None, TraceRef::Propositional(tr)) => tr,
            (None, TraceRef::Polygonal(_)) => unreachable!("polygonal traces are booleanized"),
        };
        letters
            .letter_at(t.clamp(self.lo, self.hi))
            .map(|l| l.contains(name))
            .unwrap_or(false)
    }

    fn signal(&mut self, k: usize, t: f64) -> bool {
        let TraceRef::Polygonal(tr) = self.trace else {
            unreachable!("signal constraints are rejected on propositional traces")
        };
        tr.sample_into(t.clamp(self.lo, self.hi), &mut self.buf)
            .expect("time inside domain");
        let sc = &self.signals[k];
        let buf = &self.buf;
        let v = sc.f.eval(&|name| buf[sc.index[name]]);
        relation_holds(sc.rel, v, sc.eps)
    }

    fn eval(&mut self, node: usize, t: f64, env: &mut Vec<f64>) -> bool {
        let key = (
            node,
            t.to_bits(),
            self.free[node].iter().map(|&s| env[s].to_bits()).collect(),
        );
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = match self.nodes[node] {
            Ir::True => true,
            Ir::False => false,
            Ir::Prop(ref p) => self.prop(&p.clone(), t),
            Ir::Not(a) => !self.eval(a, t, env),
            Ir::And(a, b) => self.eval(a, t, env) && self.eval(b, t, env),
            Ir::Or(a, b) => self.eval(a, t, env) || self.eval(b, t, env),
            Ir::Until(a, b) => self.until(a, b, t, env, false),
            Ir::WaitingFor(a, b) => self.until(a, b, t, env, true),
            Ir::Freeze(slot, body) => {
                let saved = env[slot];
                env[slot] = t;
                let r = self.bound_range[slot].get_or_insert((t, t));
                r.0 = r.0.min(t);
                r.1 = r.1.max(t);
                let v = self.eval(body, t, env);
                env[slot] = saved;
                v
            }
            Ir::Time(k) => {
                let tc = &self.times[k];
                let v = tc.f.eval(&|name| {
                    tc.slots
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, s)| env[*s])
                        .unwrap_or(f64::NAN)
                });
                relation_holds(tc.rel, v, tc.eps)
            }
            Ir::Signal(k) => self.signal(k, t),
        };
        if self.memo.len() >= MEMO_LIMIT {
            self.memo.clear();
        }
        self.memo.insert(key, v);
        v
    }

    /// Left-closed until from `t0`; with `weak`, also true when `a` holds to
    /// the end of the trace.
    fn until(&mut self, a: usize, b: usize, t0: f64, env: &mut Vec<f64>, weak: bool) -> bool {
        let pts = self.points_from(env, t0);
        for k in 0..pts.len() {
            let p = pts[k];
            if self.eval(b, p, env) {
                return true;
            }
            if !self.eval(a, p, env) {
                return false;
            }
            if let Some(&next) = pts.get(k + 1) {
                let mid = 0.5 * (p + next);
                let a_gap = self.eval(a, mid, env);
                if a_gap && self.eval(b, mid, env) {
                    return true;
                }
                if !a_gap {
                    return false;
                }
            }
        }
        weak
    }
}

/// A hidden predicate whose crossings are those of a signal constraint.
fn signal_predicate(k: usize, sc: &SignalConstraint, dim: usize) -> Predicate {
    let name = format!("\u{0}signal{k}");
    match &sc.f {
        ConstraintFunction::Affine(a) => {
            let mut coeffs = vec![0.0; dim];
            for (v, c) in &a.coeffs {
                coeffs[sc.index[v]] = rational_to_f64(c);
            }
            Predicate::affine(name, coeffs, rational_to_f64(&a.constant), sc.rel)
        }
        f => {
            let f = f.clone();
            let index = sc.index.clone();
            Predicate {
                name,
                f: PredicateFn::Blackbox {
                    f: std::sync::Arc::new(move |x: &[f64]| f.eval(&|n| x[index[n]])),
                    arity: dim,
                },
                rel: sc.rel,
            }
        }
    }
}
