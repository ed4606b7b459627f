use super::ast::{Formula, Node};

/// Pushes negations down to propositions.
///
/// Temporal negations use the waiting-for duality
/// `!(a U b) = !b W (!a & !b)` and `!(a W b) = !b U (!a & !b)`;
/// negated constraints flip their relation and `!(x.a) = x.!a`.
pub fn to_nnf(f: &Formula) -> Formula {
    f.map_root(|root| nnf(root, false))
}

fn nnf(n: &Node, negate: bool) -> Node {
    match (n, negate) {
        (Node::True, false) | (Node::False, true) => Node::True,
        (Node::True, true) | (Node::False, false) => Node::False,
        (Node::Prop(_), false) => n.clone(),
        (Node::Prop(_), true) => n.clone().not(),
        (Node::Not(inner), _) => nnf(inner, !negate),
        (Node::And(a, b), false) => nnf(a, false).and(nnf(b, false)),
        (Node::And(a, b), true) => nnf(a, true).or(nnf(b, true)),
        (Node::Or(a, b), false) => nnf(a, false).or(nnf(b, false)),
        (Node::Or(a, b), true) => nnf(a, true).and(nnf(b, true)),
        (Node::Until(a, b), false) => nnf(a, false).until(nnf(b, false)),
        (Node::WaitingFor(a, b), false) => nnf(a, false).waiting_for(nnf(b, false)),
        (Node::Until(a, b), true) => nnf(b, true).waiting_for(nnf(a, true).and(nnf(b, true))),
        (Node::WaitingFor(a, b), true) => nnf(b, true).until(nnf(a, true).and(nnf(b, true))),
        (Node::Freeze(x, a), _) => Node::Freeze(x.clone(), Box::new(nnf(a, negate))),
        (Node::Time(c), _) => Node::Time(if negate { c.negated() } else { c.clone() }),
        (Node::Signal(c), _) => Node::Signal(if negate { c.negated() } else { c.clone() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn nnf_text(s: &str) -> Formula {
        to_nnf(&parse_formula(s).unwrap())
    }

    #[test]
    fn until_duality() {
        assert_eq!(nnf_text("!(P U Q)"), parse_formula("!Q W (!P & !Q)").unwrap());
        assert_eq!(nnf_text("!(P W Q)"), parse_formula("!Q U (!P & !Q)").unwrap());
    }

    #[test]
    fn constraint_relation_flips() {
        assert_eq!(nnf_text("x.!(x - 1 <= 0)"), parse_formula("x.(x - 1 > 0)").unwrap());
        assert_eq!(nnf_text("x.!(x < 0)"), parse_formula("x.(x >= 0)").unwrap());
        assert_eq!(nnf_text("!x.P"), parse_formula("x.!P").unwrap());
    }

    #[test]
    fn double_negation() {
        assert_eq!(nnf_text("!!P"), parse_formula("P").unwrap());
        assert!(nnf_text("!(P -> G Q)").is_nnf());
    }
}
