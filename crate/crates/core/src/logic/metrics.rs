use std::collections::BTreeSet;

use serde::Serialize;

use super::{Formula, Var};

/// Syntactic measures, taken on the desugared formula.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormulaMetrics {
    /// Quantifier nesting depth.
    pub depth: usize,
    /// Largest `k` of any `∃_k` after desugaring, 0 when quantifier-free.
    pub counting_rank: u32,
    pub variables: BTreeSet<Var>,
    pub is_c2: bool,
}

pub fn metrics(f: &Formula) -> FormulaMetrics {
    let core = f.desugar();
    let variables = core.variables();
    let is_c2 = variables.iter().all(|v| v == "x" || v == "y");
    FormulaMetrics {
        depth: depth(&core),
        counting_rank: rank(&core),
        variables,
        is_c2,
    }
}

fn depth(f: &Formula) -> usize {
    match f {
        Formula::Pred(..) | Formula::Edge(..) | Formula::Eq(..) => 0,
        Formula::Not(g) => depth(g),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            depth(a).max(depth(b))
        }
        Formula::Exists(_, g)
        | Formula::Forall(_, g)
        | Formula::CountExists(_, _, g)
        | Formula::CountExistsExact(_, _, g) => 1 + depth(g),
    }
}

// Only called on desugared input, where the sole quantifier is `∃_k`.
fn rank(f: &Formula) -> u32 {
    match f {
        Formula::Pred(..) | Formula::Edge(..) | Formula::Eq(..) => 0,
        Formula::Not(g) => rank(g),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            rank(a).max(rank(b))
        }
        Formula::CountExists(k, _, g) => (*k).max(rank(g)),
        Formula::Exists(_, g) | Formula::Forall(_, g) => 1.max(rank(g)),
        Formula::CountExistsExact(k, _, g) => (k + 1).max(rank(g)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{count, edge, eq, exactly, forall, parse_formula};

    #[test]
    fn counting_quantifier_metrics() {
        let m = metrics(&count(2, "x", eq("x", "x")));
        assert_eq!((m.depth, m.counting_rank), (1, 2));
        assert!(m.is_c2);
    }

    #[test]
    fn quantifier_free_has_rank_zero() {
        let m = metrics(&edge("x", "y"));
        assert_eq!((m.depth, m.counting_rank), (0, 0));
    }

    #[test]
    fn exact_count_costs_one_more() {
        assert_eq!(metrics(&exactly(2, "y", edge("x", "y"))).counting_rank, 3);
        assert_eq!(metrics(&exactly(0, "y", edge("x", "y"))).counting_rank, 1);
        assert_eq!(metrics(&forall("x", eq("x", "x"))).counting_rank, 1);
    }

    #[test]
    fn three_variables_are_not_c2() {
        let f = parse_formula("forall x. forall y. forall z. (E(x,y) & E(y,z) -> E(x,z))").unwrap();
        let m = metrics(&f);
        assert_eq!(m.depth, 3);
        assert!(!m.is_c2);
        assert_eq!(m.variables.len(), 3);
    }
}
