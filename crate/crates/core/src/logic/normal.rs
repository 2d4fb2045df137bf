//! Two-variable normal form `⋁ᵢ (αᵢ(x) ∧ βᵢ(y) ∧ γᵢ(x,y))` where each `γᵢ`
//! is one of five edge/equality configurations of a simple digraph.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::{and_all, edge, eq, neq, or_all, Formula, Var};

pub const DEFAULT_DISJUNCT_CAP: usize = 100_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("formula is not two-variable: uses {0:?}")]
    NotC2(Vec<Var>),
    #[error("free variables must be among x and y, found {0:?}")]
    FreeVariables(Vec<Var>),
    #[error("normal form exceeds {0} disjuncts")]
    TooManyDisjuncts(usize),
}

/// The satisfiable configurations of the pair `(x, y)` in a simple digraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    /// `E(x,y) ∧ E(y,x) ∧ x≠y`
    BothEdges,
    /// `E(x,y) ∧ ¬E(y,x)`
    OnlyForward,
    /// `¬E(x,y) ∧ E(y,x)`
    OnlyBackward,
    /// `¬E(x,y) ∧ ¬E(y,x) ∧ x≠y`
    NoEdgeDistinct,
    /// `x = y`
    Equal,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::BothEdges,
        RelationKind::OnlyForward,
        RelationKind::OnlyBackward,
        RelationKind::NoEdgeDistinct,
        RelationKind::Equal,
    ];

    pub fn formula(self) -> Formula {
        let (fwd, bwd) = (edge("x", "y"), edge("y", "x"));
        match self {
            RelationKind::BothEdges => fwd.and(bwd).and(neq("x", "y")),
            RelationKind::OnlyForward => fwd.and(bwd.not()),
            RelationKind::OnlyBackward => fwd.not().and(bwd),
            RelationKind::NoEdgeDistinct => fwd.not().and(bwd.not()).and(neq("x", "y")),
            RelationKind::Equal => eq("x", "y"),
        }
    }

    /// Truth of `E(x,y)`, `E(y,x)` and `x=y` in this configuration.
    fn truth(self) -> (bool, bool, bool) {
        match self {
            RelationKind::BothEdges => (true, true, false),
            RelationKind::OnlyForward => (true, false, false),
            RelationKind::OnlyBackward => (false, true, false),
            RelationKind::NoEdgeDistinct => (false, false, false),
            RelationKind::Equal => (false, false, true),
        }
    }

    /// Whether a literal over `{x, y}` with both variables free holds here.
    fn satisfies(self, literal: &Formula) -> bool {
        let (fwd, bwd, same) = self.truth();
        let atom = |f: &Formula| match f {
            Formula::Edge(a, b) if a == "x" && b == "y" => fwd,
            Formula::Edge(a, b) if a == "y" && b == "x" => bwd,
            Formula::Eq(..) => same,
            other => unreachable!("not a two-variable atom: {other}"),
        };
        match literal {
            Formula::Not(a) => !atom(a),
            a => atom(a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Disjunct {
    pub alpha: Formula,
    pub beta: Formula,
    pub gamma: RelationKind,
}

impl Disjunct {
    pub fn formula(&self) -> Formula {
        self.alpha.clone().and(self.beta.clone()).and(self.gamma.formula())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub disjuncts: Vec<Disjunct>,
}

impl NormalForm {
    /// The disjunction as a single formula over `x, y`.
    pub fn to_formula(&self) -> Formula {
        or_all(self.disjuncts.iter().map(Disjunct::formula)).expect("normal form is never empty")
    }

    fn unsatisfiable() -> NormalForm {
        NormalForm {
            disjuncts: vec![Disjunct {
                alpha: neq("x", "x"),
                beta: neq("y", "y"),
                gamma: RelationKind::Equal,
            }],
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

pub fn normalize_c2(f: &Formula) -> Result<NormalForm, NormalizeError> {
    normalize_c2_with_cap(f, DEFAULT_DISJUNCT_CAP)
}

pub fn normalize_c2_with_cap(f: &Formula, cap: usize) -> Result<NormalForm, NormalizeError> {
    let stray: Vec<Var> = f.variables().into_iter().filter(|v| v != "x" && v != "y").collect();
    if !stray.is_empty() {
        return Err(NormalizeError::NotC2(stray));
    }
    let free = f.free_vars();
    let stray: Vec<Var> = free.iter().filter(|v| *v != "x" && *v != "y").cloned().collect();
    if !stray.is_empty() {
        return Err(NormalizeError::FreeVariables(stray));
    }

    let mut core = f.desugar();
    if !free.contains("x") {
        core = core.and(eq("x", "x"));
    }
    if !free.contains("y") {
        core = core.and(eq("y", "y"));
    }

    let mut out: Vec<Disjunct> = Vec::new();
    for conj in dnf(&core, true, cap)? {
        let (mut alpha, mut beta, mut gamma) = (Vec::new(), Vec::new(), Vec::new());
        for lit in conj {
            let fv = lit.free_vars();
            match (fv.contains("x"), fv.contains("y")) {
                (true, true) => gamma.push(lit),
                (false, true) => beta.push(lit),
                _ => alpha.push(lit),
            }
        }
        if !alpha.iter().any(|a| a.free_vars().contains("x")) {
            alpha.push(eq("x", "x"));
        }
        let alpha = and_all(alpha).expect("non-empty");
        let beta = and_all(beta).unwrap_or_else(|| eq("y", "y"));
        for kind in RelationKind::ALL {
            if gamma.iter().all(|l| kind.satisfies(l)) {
                let d = Disjunct {
                    alpha: alpha.clone(),
                    beta: beta.clone(),
                    gamma: kind,
                };
                if !out.contains(&d) {
                    if out.len() >= cap {
                        return Err(NormalizeError::TooManyDisjuncts(cap));
                    }
                    out.push(d);
                }
            }
        }
    }
    if out.is_empty() {
        return Ok(NormalForm::unsatisfiable());
    }
    Ok(NormalForm { disjuncts: out })
}

/// Disjunctive normal form of a desugared formula with negations pushed
/// onto atoms and counting quantifiers. Each inner vector is a conjunction
/// of distinct literals; conjunctions containing a complementary pair are
/// dropped.
fn dnf(f: &Formula, positive: bool, cap: usize) -> Result<Vec<Vec<Formula>>, NormalizeError> {
    match f {
        Formula::Not(g) => dnf(g, !positive, cap),
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (l, r) = (dnf(a, positive, cap)?, dnf(b, positive, cap)?);
            if matches!(f, Formula::And(..)) == positive {
                let mut out = Vec::new();
                for p in &l {
                    for q in &r {
                        if let Some(c) = merge(p, q) {
                            if out.len() >= cap {
                                return Err(NormalizeError::TooManyDisjuncts(cap));
                            }
                            out.push(c);
                        }
                    }
                }
                Ok(out)
            } else {
                let mut out = l;
                out.extend(r);
                if out.len() > cap {
                    return Err(NormalizeError::TooManyDisjuncts(cap));
                }
                Ok(out)
            }
        }
        // Atoms and counting quantifiers are literals; the quantifier body is
        // left untouched.
        _ => Ok(vec![vec![if positive { f.clone() } else { f.clone().not() }]]),
    }
}

fn complement(l: &Formula) -> Formula {
    match l {
        Formula::Not(a) => (**a).clone(),
        a => a.clone().not(),
    }
}

fn merge(p: &[Formula], q: &[Formula]) -> Option<Vec<Formula>> {
    let mut out = p.to_vec();
    for l in q {
        if out.contains(&complement(l)) {
            return None;
        }
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{count, metrics, parse_formula, pred};

    #[test]
    fn single_edge_atom() {
        let nf = normalize_c2(&edge("x", "y")).unwrap();
        let kinds: Vec<_> = nf.disjuncts.iter().map(|d| d.gamma).collect();
        assert_eq!(kinds, vec![RelationKind::BothEdges, RelationKind::OnlyForward]);
        for d in &nf.disjuncts {
            assert_eq!(d.alpha, eq("x", "x"));
            assert_eq!(d.beta, eq("y", "y"));
        }
    }

    #[test]
    fn equality_atom() {
        let nf = normalize_c2(&eq("x", "y")).unwrap();
        assert_eq!(nf.disjuncts.len(), 1);
        assert_eq!(nf.disjuncts[0].gamma, RelationKind::Equal);
    }

    #[test]
    fn contradiction_gives_canonical_disjunct() {
        let f = edge("x", "y").and(edge("x", "y").not());
        assert_eq!(normalize_c2(&f).unwrap(), NormalForm::unsatisfiable());
        let g = edge("x", "y").and(eq("x", "y"));
        assert_eq!(normalize_c2(&g).unwrap(), NormalForm::unsatisfiable());
    }

    #[test]
    fn rejects_third_variable() {
        let f = parse_formula("exists z. E(x,z)").unwrap();
        assert_eq!(normalize_c2(&f), Err(NormalizeError::NotC2(vec!["z".into()])));
    }

    #[test]
    fn closed_conjuncts_go_to_alpha() {
        let f = count(2, "x", pred(1, "x")).and(pred(2, "y"));
        let nf = normalize_c2(&f).unwrap();
        assert_eq!(nf.disjuncts.len(), 5);
        assert!(nf.disjuncts.iter().all(|d| d.beta == pred(2, "y")));
        assert!(nf.disjuncts.iter().all(|d| d.alpha.free_vars().contains("x")));
    }

    #[test]
    fn cap_is_enforced() {
        let f = parse_formula("(P1(x) | P2(x)) & (P1(y) | P2(y)) & (P3(x) | P3(y))").unwrap();
        assert!(matches!(
            normalize_c2_with_cap(&f, 3),
            Err(NormalizeError::TooManyDisjuncts(3))
        ));
        assert!(normalize_c2(&f).is_ok());
    }

    #[test]
    fn metrics_do_not_grow() {
        let f = parse_formula("forall y. (E(x,y) -> exists[=2] x. E(y,x)) | ~E(y,x)").unwrap();
        let (m, n) = (metrics(&f), metrics(&normalize_c2(&f).unwrap().to_formula()));
        assert!(n.depth <= m.depth);
        assert!(n.counting_rank <= m.counting_rank);
        assert!(n.is_c2);
    }
}
