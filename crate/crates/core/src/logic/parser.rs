use std::collections::BTreeSet;

use num_traits::One;

use super::ast::{Constraint, ConstraintFunction, Formula, Node, Rational, Relation};
use super::lexer::{lex, Tok, Token};
use super::poly::{Poly, PolyError};
use super::LogicError;

/// Parses a formula in the ASCII grammar.
///
/// ```text
/// formula  := [ "signals" ident { "," ident } ";" ] implies
/// implies  := or [ "->" implies ]
/// or       := and { "|" and }
/// and      := until { "&" until }
/// until    := unary { ("U" [bound] | "W") unary }
/// unary    := "!" unary | "F" [bound] unary | "G" [bound] unary
///           | ident "." unary | atom
/// atom     := "true" | "false" | arith relop arith | ident | "(" formula ")"
/// bound    := "[" [ident ":"] number "," [ident ":"] number "]"
/// ```
///
/// Bounded operators expand into freeze form:
/// `Q U[a:lo, b:hi] R` becomes
/// `x.(Q U y.((y - x - hi <= 0) & (y - x - lo >= 0) & R))` with fresh `x`, `y`.
///
/// ```
/// use skorokhod::logic::parse_formula;
///
/// let f = parse_formula("x.(Q -> F y.(R & y <= x + 5))").unwrap();
/// assert!(f.is_closed());
/// ```
pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    let tokens = lex(text)?;
    let mut used: BTreeSet<String> = BTreeSet::new();
    for t in &tokens {
        if let Tok::Ident(s) | Tok::Freeze(s) = &t.tok {
            used.insert(s.clone());
        }
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        scope: Vec::new(),
        signals: Vec::new(),
        used,
        fresh_counter: 0,
    };
    p.header()?;
    let root = p.implies()?;
    if p.pos < p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Formula {
        signals: p.signals,
        root,
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    scope: Vec<String>,
    signals: Vec<String>,
    used: BTreeSet<String>,
    fresh_counter: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|t| t.pos).unwrap_or(self.end)
    }

    fn error(&self, msg: &str) -> LogicError {
        LogicError::Syntax {
            pos: self.here(),
            msg: msg.to_string(),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), LogicError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, LogicError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn header(&mut self) -> Result<(), LogicError> {
        if !self.eat(&Tok::Signals) {
            return Ok(());
        }
        loop {
            let name = self.ident()?;
            if self.signals.contains(&name) {
                return Err(self.error(&format!("signal {name:?} declared twice")));
            }
            self.signals.push(name);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Semicolon, "';' after signal declarations")
    }

    fn fresh(&mut self) -> String {
        const BASE: [&str; 3] = ["x", "y", "z"];
        loop {
            let k = self.fresh_counter;
            self.fresh_counter += 1;
            let stem = BASE[k % 3];
            let name = match k / 3 {
                0 => stem.to_string(),
                n => format!("{stem}{n}"),
            };
            if !self.used.contains(&name) && !self.signals.contains(&name) {
                self.used.insert(name.clone());
                return name;
            }
        }
    }

    fn implies(&mut self) -> Result<Node, LogicError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(lhs.not().or(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Node, LogicError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Node, LogicError> {
        let mut lhs = self.until()?;
        while self.eat(&Tok::And) {
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Node, LogicError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Until) {
                match self.bound()? {
                    Some((lo, hi)) => {
                        let (x, y) = (self.fresh(), self.fresh());
                        let rhs = self.scoped(&[&x, &y], |p| p.unary())?;
                        lhs = bounded_until(lhs, rhs, &x, &y, lo, hi);
                    }
                    None => lhs = lhs.until(self.unary()?),
                }
            } else if self.eat(&Tok::WaitingFor) {
                lhs = lhs.waiting_for(self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn scoped<T>(
        &mut self,
        vars: &[&str],
        f: impl FnOnce(&mut Self) -> Result<T, LogicError>,
    ) -> Result<T, LogicError> {
        let depth = self.scope.len();
        self.scope.extend(vars.iter().map(|v| v.to_string()));
        let out = f(self);
        self.scope.truncate(depth);
        out
    }

    fn unary(&mut self) -> Result<Node, LogicError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::Eventually) => {
                self.pos += 1;
                match self.bound()? {
                    Some((lo, hi)) => {
                        let (x, y) = (self.fresh(), self.fresh());
                        let body = self.scoped(&[&x, &y], |p| p.unary())?;
                        Ok(bounded_until(Node::True, body, &x, &y, lo, hi))
                    }
                    None => Ok(self.unary()?.eventually()),
                }
            }
            Some(Tok::Always) => {
                self.pos += 1;
                match self.bound()? {
                    Some((lo, hi)) => {
                        let (x, y) = (self.fresh(), self.fresh());
                        let body = self.scoped(&[&x, &y], |p| p.unary())?;
                        Ok(bounded_until(Node::True, body.not(), &x, &y, lo, hi).not())
                    }
                    None => Ok(self.unary()?.always()),
                }
            }
            Some(Tok::Freeze(x)) => {
                if self.scope.contains(&x) {
                    return Err(LogicError::Rebinding(x));
                }
                if self.signals.contains(&x) {
                    return Err(self.error(&format!("{x:?} is a signal and cannot be frozen")));
                }
                self.pos += 1;
                let body = self.scoped(&[&x], |p| p.unary())?;
                Ok(Node::Freeze(x, Box::new(body)))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Node, LogicError> {
        if let Some(c) = self.try_constraint()? {
            return Ok(c);
        }
        match self.peek().cloned() {
            Some(Tok::True) => {
                self.pos += 1;
                Ok(Node::True)
            }
            Some(Tok::False) => {
                self.pos += 1;
                Ok(Node::False)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Node::Prop(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.implies()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(self.error("expected a formula")),
        }
    }

    fn bound(&mut self) -> Result<Option<(Rational, Rational)>, LogicError> {
        if !self.eat(&Tok::LBracket) {
            return Ok(None);
        }
        let lo = self.labelled_number()?;
        self.expect(&Tok::Comma, "',' in interval bound")?;
        let hi = self.labelled_number()?;
        self.expect(&Tok::RBracket, "']'")?;
        if lo > hi {
            return Err(self.error("interval lower bound exceeds upper bound"));
        }
        Ok(Some((lo, hi)))
    }

    fn labelled_number(&mut self) -> Result<Rational, LogicError> {
        if matches!(self.peek(), Some(Tok::Ident(_)))
            && self.tokens.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Colon)
        {
            self.pos += 2;
        }
        let neg = self.eat(&Tok::Minus);
        match self.peek().cloned() {
            Some(Tok::Number(n)) => {
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.error("expected number")),
        }
    }

    fn try_constraint(&mut self) -> Result<Option<Node>, LogicError> {
        let start = self.pos;
        let lhs = match self.arith() {
            Ok(p) => p,
            Err(e @ LogicError::Degree { .. }) => return Err(e),
            Err(_) => {
                self.pos = start;
                return Ok(None);
            }
        };
        let rel = match self.peek() {
            Some(Tok::Rel(r)) => *r,
            _ => {
                self.pos = start;
                return Ok(None);
            }
        };
        let rel_pos = self.here();
        self.pos += 1;
        let rhs = self.arith()?;
        let poly = lhs.sub(&rhs);
        let vars = poly.vars();
        let mut time = false;
        let mut signal = false;
        for v in &vars {
            if self.scope.contains(v) {
                time = true;
            } else if self.signals.contains(v) {
                signal = true;
            } else {
                return Err(LogicError::UnknownVariable {
                    name: v.clone(),
                    pos: self.tokens[start].pos,
                });
            }
        }
        if time && signal {
            return Err(LogicError::MixedVariables { pos: rel_pos });
        }
        let c = Constraint::new(poly.into_function(), rel);
        Ok(Some(if signal { Node::Signal(c) } else { Node::Time(c) }))
    }

    fn arith(&mut self) -> Result<Poly, LogicError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.add(&self.term()?);
            } else if self.eat(&Tok::Minus) {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn poly_error(&self, e: PolyError) -> LogicError {
        match e {
            PolyError::DegreeTooHigh => LogicError::Degree { pos: self.here() },
            PolyError::DivisionByNonConstant => self.error("division by a non-constant expression"),
            PolyError::DivisionByZero => self.error("division by zero"),
        }
    }

    fn term(&mut self) -> Result<Poly, LogicError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(&Tok::Star) {
                let rhs = self.factor()?;
                acc = acc.mul(&rhs).map_err(|e| self.poly_error(e))?;
            } else if self.eat(&Tok::Slash) {
                let rhs = self.factor()?;
                acc = acc.div(&rhs).map_err(|e| self.poly_error(e))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Poly, LogicError> {
        if self.eat(&Tok::Minus) {
            return Ok(self.factor()?.neg());
        }
        let base = self.primary()?;
        if self.eat(&Tok::Caret) {
            match self.peek() {
                Some(Tok::Number(n)) if *n == Rational::from_integer(2.into()) => {
                    self.pos += 1;
                    return base.mul(&base).map_err(|e| self.poly_error(e));
                }
                _ => return Err(self.error("only '^2' is supported")),
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Poly, LogicError> {
        match self.peek().cloned() {
            Some(Tok::Number(n)) => {
                self.pos += 1;
                Ok(Poly::constant(n))
            }
            Some(Tok::Ident(v)) => {
                self.pos += 1;
                Ok(Poly::var(&v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.arith()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(self.error("expected arithmetic expression")),
        }
    }
}

/// `x.(lhs U y.((y - x - hi <= 0) & (y - x - lo >= 0) & rhs))`.
pub(crate) fn bounded_until(lhs: Node, rhs: Node, x: &str, y: &str, lo: Rational, hi: Rational) -> Node {
    let diff = |c: Rational| ConstraintFunction::affine([(y, Rational::one()), (x, -Rational::one())], -c);
    let upper = Node::Time(Constraint::new(diff(hi), Relation::Le));
    let lower = Node::Time(Constraint::new(diff(lo), Relation::Ge));
    Node::freeze(x, lhs.until(Node::freeze(y, upper.and(lower).and(rhs))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freeze_until_tree() {
        let f = parse_formula("x.(Q -> F y.(R & y <= x + 5))").unwrap();
        let Node::Freeze(x, body) = &f.root else {
            panic!("expected freeze, got {:?}", f.root);
        };
        assert_eq!(x, "x");
        let Node::Or(lhs, rhs) = &**body else {
            panic!("expected implication");
        };
        assert_eq!(**lhs, Node::prop("Q").not());
        assert!(matches!(&**rhs, Node::Until(t, _) if **t == Node::True));
        assert!(f.is_closed());
    }

    #[test]
    fn bounded_until_sugar() {
        let sugar = parse_formula("Q U[a:2, b:3] R").unwrap();
        let expanded = parse_formula("x.(Q U y.((y - x - 3 <= 0) & (y - x - 2 >= 0) & R))").unwrap();
        assert_eq!(sugar, expanded);
    }

    #[test]
    fn rebinding_is_rejected() {
        assert_eq!(parse_formula("x.x.Q").unwrap_err(), LogicError::Rebinding("x".into()));
    }

    #[test]
    fn unknown_and_mixed_variables() {
        assert!(matches!(
            parse_formula("x.(z <= 3)"),
            Err(LogicError::UnknownVariable { .. })
        ));
        assert!(matches!(
            parse_formula("signals h; x.(h - x <= 3)"),
            Err(LogicError::MixedVariables { .. })
        ));
        let f = parse_formula("signals h1, h2; G (h1 + h2 <= 20)").unwrap();
        assert_eq!(f.signals, vec!["h1", "h2"]);
    }

    #[test]
    fn degree_limit() {
        assert!(matches!(
            parse_formula("x.y.z.(x*y*z <= 1)"),
            Err(LogicError::Degree { .. })
        ));
        assert!(parse_formula("x.y.z.((y - x)^2 + (z - y)^2 + (z - x)^2 <= 4)").is_ok());
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_formula("P & (Q").unwrap_err() {
            LogicError::Syntax { pos, .. } => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        assert!(parse_formula("P Q").is_err());
        assert!(parse_formula("Q U[3, 2] R").is_err());
    }

    #[test]
    fn fresh_names_avoid_source_identifiers() {
        let f = parse_formula("x.(P U[1, 2] Q)").unwrap();
        let mut binders = Vec::new();
        f.root.walk(&mut |n| {
            if let Node::Freeze(v, _) = n {
                binders.push(v.clone());
            }
        });
        assert_eq!(binders, vec!["x", "y", "z"]);
        assert!(f.root.check_binders().is_ok());
    }

    #[test]
    fn nested_sugar_gets_distinct_binders() {
        let f = parse_formula("(F[0, 1] P) U[1, 2] (G[0, 3] Q)").unwrap();
        assert!(f.root.check_binders().is_ok());
        assert!(f.is_closed());
    }
}
