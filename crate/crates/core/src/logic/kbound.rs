//! Perturbation bounds for constraint functions.
//!
//! `K(delta)` is the supremum of `|f(t) - f(t')|` over argument vectors whose
//! coordinates each lie in their domain and differ by at most `delta`.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::ast::{rational_from_f64, rational_to_f64, ConstraintFunction, QuadraticFn, Rational, Relation};
use super::LogicError;

/// Closed real interval; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self, LogicError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(LogicError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// `[0, +inf)`.
    pub fn non_negative() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    fn width(&self) -> Result<Option<Rational>, LogicError> {
        if !self.is_bounded() {
            return Ok(None);
        }
        Ok(Some(rational_from_f64(self.hi)? - rational_from_f64(self.lo)?))
    }

    pub fn intersect(&self, other: &Domain) -> Option<Domain> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Domain { lo, hi })
    }
}

const MAX_QUADRATIC_VARS: usize = 5;

fn domain_of(domains: &BTreeMap<String, Domain>, v: &str) -> Domain {
    domains.get(v).copied().unwrap_or_else(Domain::unbounded)
}

/// Exact (rational) `K` for affine and quadratic functions; `L * delta` for
/// blackbox functions.
pub fn k_bound(f: &ConstraintFunction, delta: f64, domains: &BTreeMap<String, Domain>) -> Result<Rational, LogicError> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(LogicError::BadDelta(delta));
    }
    let d = rational_from_f64(delta)?;
    match f {
        ConstraintFunction::Affine(a) => {
            let mut k = Rational::zero();
            for (v, c) in &a.coeffs {
                let step = match domain_of(domains, v).width()? {
                    Some(w) if w < d => w,
                    _ => d.clone(),
                };
                k += c.abs() * step;
            }
            Ok(k)
        }
        ConstraintFunction::Quadratic(q) => quadratic_sup(q, &d, domains),
        ConstraintFunction::Blackbox(b) => rational_from_f64(b.lipschitz * delta),
    }
}

/// `(W, d)` when `q` is `sum_{u<v} w_uv (u - v)^2 - d` with all `w_uv >= 0`.
pub fn laplacian_form(q: &QuadraticFn) -> Option<(Rational, Rational)> {
    if !q.linear.is_empty() {
        return None;
    }
    let mut diag: BTreeMap<&str, Rational> = BTreeMap::new();
    let mut row_sums: BTreeMap<&str, Rational> = BTreeMap::new();
    let mut total = Rational::zero();
    let two = Rational::from_integer(2.into());
    for ((u, v), c) in &q.quad {
        if u == v {
            diag.insert(u, c.clone());
        } else {
            let w = -c / &two;
            if w.is_negative() {
                return None;
            }
            *row_sums.entry(u).or_insert_with(Rational::zero) += &w;
            *row_sums.entry(v).or_insert_with(Rational::zero) += &w;
            total += w;
        }
    }
    let vars: std::collections::BTreeSet<&str> = diag.keys().chain(row_sums.keys()).copied().collect();
    for v in vars {
        let dv = diag.get(v).cloned().unwrap_or_else(Rational::zero);
        let rv = row_sums.get(v).cloned().unwrap_or_else(Rational::zero);
        if dv != rv {
            return None;
        }
    }
    let d = -q.constant.clone();
    if d.is_negative() {
        return None;
    }
    Some((total, d))
}

/// Closed-form bound `4 W delta^2 + 4 sqrt(W d) delta` for relaxing
/// `sum w_uv (u - v)^2 <= d`, obtained from `|a'^2 - a^2| <= 4 delta |a| + 4 delta^2`
/// for each pair difference and Cauchy-Schwarz on the weighted sum.
pub fn analytic_laplacian_k(q: &QuadraticFn, rel: Relation, delta: f64) -> Option<f64> {
    if !rel.is_upper() {
        return None;
    }
    let (w, d) = laplacian_form(q)?;
    let (w, d) = (rational_to_f64(&w), rational_to_f64(&d));
    Some(4.0 * w * delta * delta + 4.0 * (w * d).sqrt() * delta)
}

/// Exact supremum of `f(t + e) - f(t)` over the box.
///
/// For fixed `e` the difference is affine in `t`, so each `t_i` sits at an end
/// of its feasible range; that end depends on the sign of `e_i`. Each of the
/// `4^l` sign/end patterns leaves a quadratic in `e` over a box, maximized by
/// enumerating which coordinates are at a bound and solving the stationarity
/// system for the rest.
fn quadratic_sup(
    q: &QuadraticFn,
    delta: &Rational,
    domains: &BTreeMap<String, Domain>,
) -> Result<Rational, LogicError> {
    let f = ConstraintFunction::Quadratic(q.clone());
    let vars: Vec<String> = f.vars().into_iter().collect();
    let l = vars.len();
    if l > MAX_QUADRATIC_VARS {
        return Err(LogicError::TooManyVariables {
            found: l,
            max: MAX_QUADRATIC_VARS,
        });
    }
    if delta.is_zero() || l == 0 {
        return Ok(Rational::zero());
    }
    let idx = |v: &str| vars.iter().position(|x| x == v).expect("known variable");
    let half = Rational::new(1.into(), 2.into());
    let mut qm = vec![vec![Rational::zero(); l]; l];
    for ((u, v), c) in &q.quad {
        let (i, j) = (idx(u), idx(v));
        if i == j {
            qm[i][i] += c;
        } else {
            qm[i][j] += c * &half;
            qm[j][i] += c * &half;
        }
    }
    let mut lin = vec![Rational::zero(); l];
    for (v, c) in &q.linear {
        lin[idx(v)] += c;
    }

    let mut lo = Vec::with_capacity(l);
    let mut hi = Vec::with_capacity(l);
    let mut reach = Vec::with_capacity(l);
    for (i, v) in vars.iter().enumerate() {
        let dom = domain_of(domains, v);
        let coupled = qm[i].iter().any(|c| !c.is_zero());
        match dom.width()? {
            Some(w) => {
                lo.push(rational_from_f64(dom.lo)?);
                hi.push(rational_from_f64(dom.hi)?);
                reach.push(if &w < delta { w } else { delta.clone() });
            }
            None if !coupled => {
                lo.push(Rational::zero());
                hi.push(Rational::zero());
                reach.push(delta.clone());
            }
            None => return Err(LogicError::UnboundedK(v.clone())),
        }
    }

    let mut best = Rational::zero();
    let patterns = 4usize.pow(l as u32);
    let mut c = vec![Rational::zero(); l];
    let mut s = vec![0i32; l];
    let mut elo = vec![Rational::zero(); l];
    let mut ehi = vec![Rational::zero(); l];
    for pattern in 0..patterns {
        for i in 0..l {
            let code = (pattern >> (2 * i)) & 3;
            let positive = code & 1 == 0;
            let upper_end = code & 2 != 0;
            if positive {
                elo[i] = Rational::zero();
                ehi[i] = reach[i].clone();
                (c[i], s[i]) = if upper_end {
                    (hi[i].clone(), -1)
                } else {
                    (lo[i].clone(), 0)
                };
            } else {
                elo[i] = -reach[i].clone();
                ehi[i] = Rational::zero();
                (c[i], s[i]) = if upper_end {
                    (hi[i].clone(), 0)
                } else {
                    (lo[i].clone(), -1)
                };
            }
        }
        let h: Vec<Vec<Rational>> = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| &qm[i][j] * Rational::from_integer((1 + s[i] + s[j]).into()))
                    .collect()
            })
            .collect();
        let b: Vec<Rational> = (0..l)
            .map(|i| {
                let two_qc: Rational =
                    (0..l).map(|j| &qm[i][j] * &c[j]).sum::<Rational>() * Rational::from_integer(2.into());
                two_qc + &lin[i]
            })
            .collect();
        if let Some(v) = box_qp_max(&h, &b, &elo, &ehi) {
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

fn quad_value(h: &[Vec<Rational>], b: &[Rational], e: &[Rational]) -> Rational {
    let l = e.len();
    let mut v = Rational::zero();
    for i in 0..l {
        v += &b[i] * &e[i];
        for j in 0..l {
            v += &h[i][j] * &e[i] * &e[j];
        }
    }
    v
}

/// Max of `e'He + b'e` over `elo <= e <= ehi` by KKT face enumeration.
fn box_qp_max(h: &[Vec<Rational>], b: &[Rational], elo: &[Rational], ehi: &[Rational]) -> Option<Rational> {
    let l = b.len();
    let mut best: Option<Rational> = None;
    let faces = 3usize.pow(l as u32);
    let two = Rational::from_integer(2.into());
    'face: for face in 0..faces {
        let mut e = vec![Rational::zero(); l];
        let mut free = Vec::new();
        let mut code = face;
        for i in 0..l {
            match code % 3 {
                0 => e[i] = elo[i].clone(),
                1 => e[i] = ehi[i].clone(),
                _ => free.push(i),
            }
            code /= 3;
        }
        if !free.is_empty() {
            let n = free.len();
            let mut m: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n + 1]; n];
            for (r, &i) in free.iter().enumerate() {
                for (k, &j) in free.iter().enumerate() {
                    m[r][k] = &two * &h[i][j];
                }
                let mut rhs = -b[i].clone();
                for j in 0..l {
                    if !free.contains(&j) {
                        rhs -= &two * &h[i][j] * &e[j];
                    }
                }
                m[r][n] = rhs;
            }
            let Some(sol) = solve(m) else {
                continue 'face;
            };
            for (k, &i) in free.iter().enumerate() {
                if sol[k] < elo[i] || sol[k] > ehi[i] {
                    continue 'face;
                }
                e[i] = sol[k].clone();
            }
        }
        let v = quad_value(h, b, &e);
        if best.as_ref().is_none_or(|cur| v > *cur) {
            best = Some(v);
        }
    }
    best
}

/// Gauss-Jordan on an augmented matrix; `None` when singular.
fn solve(mut m: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in &mut m[col][col..] {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, q) in m[r].iter_mut().zip(&pivot_row).skip(col) {
                    *v -= &factor * q;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Node};

    fn constraint_fn(text: &str) -> ConstraintFunction {
        let f = parse_formula(text).unwrap();
        let mut found = None;
        f.root.walk(&mut |n| {
            if let Node::Time(c) = n {
                found = Some(c.f.clone());
            }
        });
        found.expect("formula has a time constraint")
    }

    fn r(x: f64) -> Rational {
        rational_from_f64(x).unwrap()
    }

    fn all(domain: Domain) -> BTreeMap<String, Domain> {
        ["x", "y", "z"].iter().map(|v| (v.to_string(), domain)).collect()
    }

    #[test]
    fn affine_examples() {
        let unb = BTreeMap::new();
        let f = constraint_fn("x.(x - 4 <= 0)");
        assert_eq!(k_bound(&f, 0.3, &unb).unwrap(), r(0.3));
        let g = constraint_fn("x.y.(y - x - 2 >= 0)");
        assert_eq!(k_bound(&g, 0.25, &unb).unwrap(), r(0.5));
        let narrow = all(Domain::new(0.0, 0.1).unwrap());
        assert_eq!(k_bound(&g, 0.25, &narrow).unwrap(), r(0.2));
        assert_eq!(k_bound(&g, 0.0, &unb).unwrap(), Rational::zero());
        assert!(k_bound(&g, -1.0, &unb).is_err());
    }

    #[test]
    fn quadratic_single_variable() {
        // sup |x'^2 - x^2| on [0, 10] with |x' - x| <= 0.5 is 10^2 - 9.5^2.
        let f = constraint_fn("x.(x^2 - 3 <= 0)");
        let k = k_bound(&f, 0.5, &all(Domain::new(0.0, 10.0).unwrap())).unwrap();
        assert_eq!(k, r(9.75));
    }

    #[test]
    fn quadratic_matches_grid() {
        let f = constraint_fn("x.y.((y - x)^2 - 2*x*y + 3*y <= 1)");
        let dom = Domain::new(-1.0, 2.0).unwrap();
        let delta = 0.3;
        let k = rational_to_f64(&k_bound(&f, delta, &all(dom)).unwrap());
        let eval = |x: f64, y: f64| (y - x).powi(2) - 2.0 * x * y + 3.0 * y - 1.0;
        let n = 60;
        let mut grid: f64 = 0.0;
        let pts: Vec<f64> = (0..=n).map(|i| -1.0 + 3.0 * i as f64 / n as f64).collect();
        let es: Vec<f64> = (0..=6).map(|i| -delta + 2.0 * delta * i as f64 / 6.0).collect();
        for &x in &pts {
            for &y in &pts {
                for &ex in &es {
                    for &ey in &es {
                        let (x2, y2) = (x + ex, y + ey);
                        if dom.lo <= x2 && x2 <= dom.hi && dom.lo <= y2 && y2 <= dom.hi {
                            grid = grid.max((eval(x2, y2) - eval(x, y)).abs());
                        }
                    }
                }
            }
        }
        assert!(k >= grid - 1e-12, "exact {k} below grid {grid}");
        assert!(k <= grid * 1.05 + 1e-9, "exact {k} far above grid {grid}");
    }

    #[test]
    fn unbounded_quadratic_domain_is_an_error() {
        let f = constraint_fn("x.(x^2 <= 1)");
        assert!(matches!(
            k_bound(&f, 0.1, &BTreeMap::new()),
            Err(LogicError::UnboundedK(_))
        ));
    }

    #[test]
    fn laplacian_detection() {
        let ConstraintFunction::Quadratic(q) = constraint_fn("x.y.z.((y - x)^2 + (z - y)^2 + (z - x)^2 - 4 <= 0)")
        else {
            panic!("expected quadratic");
        };
        let (w, d) = laplacian_form(&q).unwrap();
        assert_eq!(w, r(3.0));
        assert_eq!(d, r(4.0));
        let k = analytic_laplacian_k(&q, Relation::Le, 0.1).unwrap();
        assert!((k - (12.0 * 0.01 + 4.0 * 3f64.sqrt() * 0.1 * 2.0)).abs() < 1e-12);
        assert!(analytic_laplacian_k(&q, Relation::Ge, 0.1).is_none());
    }
}
