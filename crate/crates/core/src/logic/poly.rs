use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::ast::{AffineFn, ConstraintFunction, QuadraticFn, Rational};

/// Monomial as a sorted list of variable names; empty is the constant.
type Monomial = Vec<String>;

/// Polynomial of degree at most two with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PolyError {
    DegreeTooHigh,
    DivisionByNonConstant,
    DivisionByZero,
}

impl Poly {
    pub fn constant(c: Rational) -> Self {
        let mut p = Self::default();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(name: &str) -> Self {
        let mut p = Self::default();
        p.add_term(vec![name.to_string()], Rational::one());
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        let entry = self.terms.entry(m).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn as_constant(&self) -> Option<Rational> {
        (self.degree() == 0).then(|| self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rational::zero))
    }

    pub fn vars(&self) -> Vec<String> {
        let mut v: Vec<String> = self.terms.keys().flatten().cloned().collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn add(mut self, other: &Poly) -> Poly {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
        self
    }

    pub fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }

    pub fn sub(self, other: &Poly) -> Poly {
        self.add(&other.clone().neg())
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m: Monomial = m1.iter().chain(m2).cloned().collect();
                if m.len() > 2 {
                    return Err(PolyError::DegreeTooHigh);
                }
                m.sort();
                out.add_term(m, c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn div(&self, other: &Poly) -> Result<Poly, PolyError> {
        let c = other.as_constant().ok_or(PolyError::DivisionByNonConstant)?;
        if c.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v / &c;
        }
        Ok(out)
    }

    pub fn into_function(self) -> ConstraintFunction {
        let constant = self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rational::zero);
        if self.degree() <= 1 {
            let coeffs = self
                .terms
                .into_iter()
                .filter_map(|(m, c)| (m.len() == 1).then(|| (m[0].clone(), c)))
                .collect();
            return ConstraintFunction::Affine(AffineFn { coeffs, constant });
        }
        let mut quad = BTreeMap::new();
        let mut linear = BTreeMap::new();
        for (m, c) in self.terms {
            match m.len() {
                2 => {
                    quad.insert((m[0].clone(), m[1].clone()), c);
                }
                1 => {
                    linear.insert(m[0].clone(), c);
                }
                _ => {}
            }
        }
        ConstraintFunction::Quadratic(QuadraticFn { quad, linear, constant })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn square_of_difference() {
        let d = Poly::var("y").sub(&Poly::var("x"));
        let sq = d.mul(&d).unwrap();
        let ConstraintFunction::Quadratic(q) = sq.into_function() else {
            panic!("expected quadratic");
        };
        assert_eq!(q.quad[&("x".to_string(), "x".to_string())], r(1));
        assert_eq!(q.quad[&("x".to_string(), "y".to_string())], r(-2));
        assert_eq!(q.quad[&("y".to_string(), "y".to_string())], r(1));
        assert!(q.linear.is_empty());
    }

    #[test]
    fn degree_is_capped() {
        let x = Poly::var("x");
        let x2 = x.mul(&x).unwrap();
        assert_eq!(x2.mul(&x), Err(PolyError::DegreeTooHigh));
        assert_eq!(x.div(&x), Err(PolyError::DivisionByNonConstant));
        assert_eq!(x.div(&Poly::constant(r(0))), Err(PolyError::DivisionByZero));
    }

    #[test]
    fn cancellation_drops_terms() {
        let p = Poly::var("x").add(&Poly::constant(r(2))).sub(&Poly::var("x"));
        assert_eq!(p.as_constant(), Some(r(2)));
        assert!(p.vars().is_empty());
    }
}
