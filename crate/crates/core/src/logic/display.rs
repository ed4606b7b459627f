//! Text rendering in the same grammar the parser accepts.
//!
//! Every binary operator and every constraint is parenthesized, so printing
//! and reparsing yields an identical tree. Blackbox constraints have no
//! textual form and are rendered as `name(vars)` for inspection only.

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::ast::{Constraint, ConstraintFunction, Formula, Node, Rational};

/// Exact decimal when the denominator divides a power of ten, else `p/q`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut denom = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let k = twos.max(fives);
    let scaled = (r * Rational::from_integer(num_traits::pow(BigInt::from(10), k))).to_integer();
    let digits = scaled.abs().to_string();
    let digits = format!("{digits:0>width$}", width = k + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - k);
    let sign = if scaled.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}

fn push_term(out: &mut String, coeff: &Rational, monomial: &str) {
    let first = out.is_empty();
    let neg = coeff.is_negative();
    let mag = coeff.abs();
    if first {
        if neg {
            out.push('-');
        }
    } else {
        out.push_str(if neg { " - " } else { " + " });
    }
    if monomial.is_empty() {
        out.push_str(&format_rational(&mag));
    } else if mag.is_one() {
        out.push_str(monomial);
    } else {
        let _ = write!(out, "{}*{monomial}", format_rational(&mag));
    }
}

impl fmt::Display for ConstraintFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let constant = match self {
            ConstraintFunction::Affine(a) => {
                for (v, c) in &a.coeffs {
                    push_term(&mut out, c, v);
                }
                a.constant.clone()
            }
            ConstraintFunction::Quadratic(q) => {
                for ((u, v), c) in &q.quad {
                    let m = if u == v { format!("{u}^2") } else { format!("{u}*{v}") };
                    push_term(&mut out, c, &m);
                }
                for (v, c) in &q.linear {
                    push_term(&mut out, c, v);
                }
                q.constant.clone()
            }
            ConstraintFunction::Blackbox(b) => {
                let _ = write!(out, "{}({})", b.name, b.vars.join(", "));
                if b.offset != 0.0 {
                    let _ = write!(out, " + {}", b.offset);
                }
                return f.write_str(&out);
            }
        };
        if !constant.is_zero() || out.is_empty() {
            push_term(&mut out, &constant, "");
        }
        f.write_str(&out)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.f, self.rel)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::True => f.write_str("true"),
            Node::False => f.write_str("false"),
            Node::Prop(p) => f.write_str(p),
            Node::Not(a) => write!(f, "!{a}"),
            Node::And(a, b) => write!(f, "({a} & {b})"),
            Node::Or(a, b) => write!(f, "({a} | {b})"),
            Node::Until(a, b) => write!(f, "({a} U {b})"),
            Node::WaitingFor(a, b) => write!(f, "({a} W {b})"),
            Node::Freeze(x, a) => write!(f, "{x}.{a}"),
            Node::Time(c) | Node::Signal(c) => write!(f, "({c})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.signals.is_empty() {
            write!(f, "signals {}; ", self.signals.join(", "))?;
        }
        write!(f, "{}", self.root)
    }
}
