use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::LogicError;
pub use crate::trace::Relation;

pub type Rational = BigRational;

/// Exact rational equal to the shortest decimal that round-trips `x`.
pub fn rational_from_f64(x: f64) -> Result<Rational, LogicError> {
    if !x.is_finite() {
        return Err(LogicError::NonFinite(x));
    }
    parse_decimal(&format!("{x}")).ok_or(LogicError::NonFinite(x))
}

/// Parses `[-]digits[.digits][e[+-]digits]` exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let scale = exp - frac_part.len() as i32 - 1;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(digits);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `sum_v coeffs[v] * v + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineFn {
    pub coeffs: BTreeMap<String, Rational>,
    pub constant: Rational,
}

/// `sum quad[(u, v)] * u * v + sum linear[v] * v + constant`, keyed with
/// `u <= v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticFn {
    pub quad: BTreeMap<(String, String), Rational>,
    pub linear: BTreeMap<String, Rational>,
    pub constant: Rational,
}

pub type BlackboxEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Opaque function of `vars` with a sup-norm Lipschitz constant.
#[derive(Clone)]
pub struct BlackboxFn {
    pub name: String,
    pub vars: Vec<String>,
    pub f: BlackboxEval,
    pub lipschitz: f64,
    pub offset: f64,
}

impl fmt::Debug for BlackboxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackboxFn")
            .field("name", &self.name)
            .field("vars", &self.vars)
            .field("lipschitz", &self.lipschitz)
            .field("offset", &self.offset)
            .finish()
    }
}

impl PartialEq for BlackboxFn {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.vars == other.vars
            && self.lipschitz == other.lipschitz
            && self.offset == other.offset
            && Arc::ptr_eq(&self.f, &other.f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintFunction {
    Affine(AffineFn),
    Quadratic(QuadraticFn),
    Blackbox(BlackboxFn),
}

impl ConstraintFunction {
    pub fn affine<I, S>(coeffs: I, constant: Rational) -> Self
    where
        I: IntoIterator<Item = (S, Rational)>,
        S: Into<String>,
    {
        ConstraintFunction::Affine(AffineFn {
            coeffs: coeffs
                .into_iter()
                .map(|(k, v)| (k.into(), v))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
            constant,
        })
    }

    pub fn blackbox<F>(name: &str, vars: &[&str], lipschitz: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ConstraintFunction::Blackbox(BlackboxFn {
            name: name.to_string(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
            f: Arc::new(f),
            lipschitz,
            offset: 0.0,
        })
    }

    /// Variables the function depends on, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        match self {
            ConstraintFunction::Affine(a) => a.coeffs.keys().cloned().collect(),
            ConstraintFunction::Quadratic(q) => q
                .quad
                .keys()
                .flat_map(|(u, v)| [u.clone(), v.clone()])
                .chain(q.linear.keys().cloned())
                .collect(),
            ConstraintFunction::Blackbox(b) => b.vars.iter().cloned().collect(),
        }
    }

    pub fn eval(&self, value_of: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            ConstraintFunction::Affine(a) => {
                a.coeffs
                    .iter()
                    .map(|(v, c)| rational_to_f64(c) * value_of(v))
                    .sum::<f64>()
                    + rational_to_f64(&a.constant)
            }
            ConstraintFunction::Quadratic(q) => {
                q.quad
                    .iter()
                    .map(|((u, v), c)| rational_to_f64(c) * value_of(u) * value_of(v))
                    .sum::<f64>()
                    + q.linear
                        .iter()
                        .map(|(v, c)| rational_to_f64(c) * value_of(v))
                        .sum::<f64>()
                    + rational_to_f64(&q.constant)
            }
            ConstraintFunction::Blackbox(b) => {
                let args: Vec<f64> = b.vars.iter().map(|v| value_of(v)).collect();
                (b.f)(&args) + b.offset
            }
        }
    }

    /// Adds `shift` to the constant term.
    pub fn shifted(&self, shift: &Rational) -> Self {
        let mut out = self.clone();
        match &mut out {
            ConstraintFunction::Affine(a) => a.constant += shift,
            ConstraintFunction::Quadratic(q) => q.constant += shift,
            ConstraintFunction::Blackbox(b) => b.offset += rational_to_f64(shift),
        }
        out
    }

    pub fn constant(&self) -> Rational {
        match self {
            ConstraintFunction::Affine(a) => a.constant.clone(),
            ConstraintFunction::Quadratic(q) => q.constant.clone(),
            ConstraintFunction::Blackbox(b) => rational_from_f64(b.offset).unwrap_or_else(|_| Rational::zero()),
        }
    }

    /// For `a * u - a * v + c`, the shift `c / a` relating the two times.
    pub(crate) fn difference_shift(&self) -> Option<f64> {
        let ConstraintFunction::Affine(a) = self else {
            return None;
        };
        if a.coeffs.len() != 2 {
            return None;
        }
        let mut it = a.coeffs.values();
        let (p, q) = (it.next()?, it.next()?);
        if (p + q).is_zero() {
            Some(rational_to_f64(&(&a.constant / p.abs())))
        } else {
            None
        }
    }
}

/// `f ~ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub f: ConstraintFunction,
    pub rel: Relation,
}

impl Constraint {
    pub fn new(f: ConstraintFunction, rel: Relation) -> Self {
        Self { f, rel }
    }

    pub fn negated(&self) -> Self {
        Self {
            f: self.f.clone(),
            rel: self.rel.negate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    True,
    False,
    Prop(String),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Until(Box<Node>, Box<Node>),
    WaitingFor(Box<Node>, Box<Node>),
    Freeze(String, Box<Node>),
    /// Constraint over frozen time variables.
    Time(Constraint),
    /// Constraint over signal values at the current time.
    Signal(Constraint),
}

impl Node {
    pub fn prop(name: &str) -> Self {
        Node::Prop(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Node::Not(Box::new(self))
    }

    pub fn and(self, other: Node) -> Self {
        Node::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Node) -> Self {
        Node::Or(Box::new(self), Box::new(other))
    }

    pub fn until(self, other: Node) -> Self {
        Node::Until(Box::new(self), Box::new(other))
    }

    pub fn waiting_for(self, other: Node) -> Self {
        Node::WaitingFor(Box::new(self), Box::new(other))
    }

    pub fn freeze(var: &str, body: Node) -> Self {
        Node::Freeze(var.to_string(), Box::new(body))
    }

    /// `true U self`.
    pub fn eventually(self) -> Self {
        Node::True.until(self)
    }

    /// `!(true U !self)`.
    pub fn always(self) -> Self {
        self.not().eventually().not()
    }

    pub fn children(&self) -> Vec<&Node> {
        match self {
            Node::True | Node::False | Node::Prop(_) | Node::Time(_) | Node::Signal(_) => vec![],
            Node::Not(a) | Node::Freeze(_, a) => vec![a],
            Node::And(a, b) | Node::Or(a, b) | Node::Until(a, b) | Node::WaitingFor(a, b) => {
                vec![a, b]
            }
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Node)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Negations appear only directly above propositions.
    pub fn is_nnf(&self) -> bool {
        match self {
            Node::Not(inner) => matches!(**inner, Node::Prop(_)),
            other => other.children().iter().all(|c| c.is_nnf()),
        }
    }

    /// Time variables used by constraints but not bound by an enclosing freeze.
    pub fn free_time_vars(&self) -> BTreeSet<String> {
        fn go(n: &Node, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match n {
                Node::Time(c) => {
                    for v in c.f.vars() {
                        if !bound.contains(&v) {
                            out.insert(v);
                        }
                    }
                }
                Node::Freeze(x, body) => {
                    bound.push(x.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                other => {
                    for c in other.children() {
                        go(c, bound, out);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// The formula with every constraint replaced by a placeholder.
    pub fn skeleton(&self) -> Node {
        self.map_constraints(&mut |_| Node::Prop("#".into()))
    }

    /// Rebuilds the tree, replacing each constraint node by `f(node)`.
    pub fn map_constraints(&self, f: &mut dyn FnMut(&Node) -> Node) -> Node {
        match self {
            Node::Time(_) | Node::Signal(_) => f(self),
            Node::True | Node::False | Node::Prop(_) => self.clone(),
            Node::Not(a) => Node::Not(Box::new(a.map_constraints(f))),
            Node::Freeze(x, a) => Node::Freeze(x.clone(), Box::new(a.map_constraints(f))),
            Node::And(a, b) => Node::And(Box::new(a.map_constraints(f)), Box::new(b.map_constraints(f))),
            Node::Or(a, b) => Node::Or(Box::new(a.map_constraints(f)), Box::new(b.map_constraints(f))),
            Node::Until(a, b) => Node::Until(Box::new(a.map_constraints(f)), Box::new(b.map_constraints(f))),
            Node::WaitingFor(a, b) => Node::WaitingFor(Box::new(a.map_constraints(f)), Box::new(b.map_constraints(f))),
        }
    }

    pub fn constraints(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if matches!(n, Node::Time(_) | Node::Signal(_)) {
                out.push(n);
            }
        });
        out
    }

    /// Every freeze variable is bound at most once on each root-to-leaf path.
    pub fn check_binders(&self) -> Result<(), LogicError> {
        fn go(n: &Node, bound: &mut Vec<String>) -> Result<(), LogicError> {
            if let Node::Freeze(x, body) = n {
                if bound.contains(x) {
                    return Err(LogicError::Rebinding(x.clone()));
                }
                bound.push(x.clone());
                go(body, bound)?;
                bound.pop();
                return Ok(());
            }
            n.children().into_iter().try_for_each(|c| go(c, bound))
        }
        go(self, &mut Vec::new())
    }
}

/// A formula together with the names of the signal variables it may use,
/// listed in trace-dimension order.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub signals: Vec<String>,
    pub root: Node,
}

impl Formula {
    pub fn new(root: Node) -> Self {
        Self {
            signals: Vec::new(),
            root,
        }
    }

    pub fn with_signals(signals: Vec<String>, root: Node) -> Self {
        Self { signals, root }
    }

    pub fn is_closed(&self) -> bool {
        self.root.free_time_vars().is_empty()
    }

    pub fn is_nnf(&self) -> bool {
        self.root.is_nnf()
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s == name)
    }

    pub fn map_root(&self, f: impl FnOnce(&Node) -> Node) -> Formula {
        Formula {
            signals: self.signals.clone(),
            root: f(&self.root),
        }
    }
}
