//! First-order logic over the graph signature `(P_1, …, P_d, E, =)` with
//! counting quantifiers.

mod eval;
mod metrics;
mod normal;
mod parser;
pub mod random;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{classify, evaluate, evaluate_naive, Assignment, EvalError, Evaluator};
pub use metrics::{metrics, FormulaMetrics};
pub use normal::{
    normalize_c2, normalize_c2_with_cap, Disjunct, NormalForm, NormalizeError, RelationKind,
    DEFAULT_DISJUNCT_CAP,
};
pub use parser::{parse_formula, ParseError};

pub type Var = String;

/// Formula AST. `Implies`, `Iff`, `Exists`, `Forall` and `CountExistsExact`
/// are surface sugar; [`Formula::desugar`] removes them.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// `P_i(v)`, 1-indexed.
    Pred(usize, Var),
    Edge(Var, Var),
    Eq(Var, Var),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
    /// At least `k ≥ 1` witnesses.
    CountExists(u32, Var, Box<Formula>),
    /// Exactly `k ≥ 0` witnesses.
    CountExistsExact(u32, Var, Box<Formula>),
}

pub fn pred(i: usize, v: &str) -> Formula {
    Formula::Pred(i, v.to_string())
}

pub fn edge(a: &str, b: &str) -> Formula {
    Formula::Edge(a.to_string(), b.to_string())
}

pub fn eq(a: &str, b: &str) -> Formula {
    Formula::Eq(a.to_string(), b.to_string())
}

pub fn neq(a: &str, b: &str) -> Formula {
    eq(a, b).not()
}

pub fn exists(v: &str, body: Formula) -> Formula {
    Formula::Exists(v.to_string(), Box::new(body))
}

pub fn forall(v: &str, body: Formula) -> Formula {
    Formula::Forall(v.to_string(), Box::new(body))
}

pub fn count(k: u32, v: &str, body: Formula) -> Formula {
    assert!(k >= 1, "counting quantifier needs k >= 1");
    Formula::CountExists(k, v.to_string(), Box::new(body))
}

pub fn exactly(k: u32, v: &str, body: Formula) -> Formula {
    Formula::CountExistsExact(k, v.to_string(), Box::new(body))
}

/// Left-nested conjunction; `None` for an empty iterator.
pub fn and_all(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    parts.into_iter().reduce(Formula::and)
}

/// Left-nested disjunction; `None` for an empty iterator.
pub fn or_all(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    parts.into_iter().reduce(Formula::or)
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn iff(self, other: Formula) -> Formula {
        Formula::Iff(Box::new(self), Box::new(other))
    }

    /// Exclusive or, written as `¬(a ↔ b)`.
    pub fn xor(self, other: Formula) -> Formula {
        self.iff(other).not()
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<Var>) {
        let mut visit = |v: &'a str, bound: &Vec<&'a str>| {
            if !bound.contains(&v) {
                out.insert(v.to_string());
            }
        };
        match self {
            Formula::Pred(_, v) => visit(v, bound),
            Formula::Edge(a, b) | Formula::Eq(a, b) => {
                visit(a, bound);
                visit(b, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f)
            | Formula::Forall(v, f)
            | Formula::CountExists(_, v, f)
            | Formula::CountExistsExact(_, v, f) => {
                bound.push(v);
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable name occurring anywhere, free or bound.
    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |v| {
            out.insert(v.to_string());
        });
        out
    }

    fn visit_vars(&self, f: &mut impl FnMut(&str)) {
        match self {
            Formula::Pred(_, v) => f(v),
            Formula::Edge(a, b) | Formula::Eq(a, b) => {
                f(a);
                f(b);
            }
            Formula::Not(g) => g.visit_vars(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Formula::Exists(v, g)
            | Formula::Forall(v, g)
            | Formula::CountExists(_, v, g)
            | Formula::CountExistsExact(_, v, g) => {
                f(v);
                g.visit_vars(f);
            }
        }
    }

    /// Consistently renames every variable occurrence (free and bound).
    pub fn rename_vars(&self, map: &impl Fn(&str) -> String) -> Formula {
        let b = |f: &Formula| Box::new(f.rename_vars(map));
        match self {
            Formula::Pred(i, v) => Formula::Pred(*i, map(v)),
            Formula::Edge(a, c) => Formula::Edge(map(a), map(c)),
            Formula::Eq(a, c) => Formula::Eq(map(a), map(c)),
            Formula::Not(f) => Formula::Not(b(f)),
            Formula::And(l, r) => Formula::And(b(l), b(r)),
            Formula::Or(l, r) => Formula::Or(b(l), b(r)),
            Formula::Implies(l, r) => Formula::Implies(b(l), b(r)),
            Formula::Iff(l, r) => Formula::Iff(b(l), b(r)),
            Formula::Exists(v, f) => Formula::Exists(map(v), b(f)),
            Formula::Forall(v, f) => Formula::Forall(map(v), b(f)),
            Formula::CountExists(k, v, f) => Formula::CountExists(*k, map(v), b(f)),
            Formula::CountExistsExact(k, v, f) => Formula::CountExistsExact(*k, map(v), b(f)),
        }
    }

    /// Exchanges `x` and `y` everywhere. On a two-variable formula this turns
    /// `φ(x)` into the equivalent `φ(y)`.
    pub fn swap_xy(&self) -> Formula {
        self.rename_vars(&|v| match v {
            "x" => "y".to_string(),
            "y" => "x".to_string(),
            other => other.to_string(),
        })
    }

    /// Rewrites into the core connectives `¬, ∧, ∨, ∃_k`.
    ///
    /// `∀vφ ↦ ¬∃_1 v ¬φ`, `∃ ↦ ∃_1`, `∃_{=k} vφ ↦ ∃_k vφ ∧ ¬∃_{k+1} vφ`
    /// (and `∃_{=0} vφ ↦ ¬∃_1 vφ`).
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::Pred(..) | Formula::Edge(..) | Formula::Eq(..) => self.clone(),
            Formula::Not(f) => f.desugar().not(),
            Formula::And(a, b) => a.desugar().and(b.desugar()),
            Formula::Or(a, b) => a.desugar().or(b.desugar()),
            Formula::Implies(a, b) => a.desugar().not().or(b.desugar()),
            Formula::Iff(a, b) => {
                let (a, b) = (a.desugar(), b.desugar());
                a.clone().not().or(b.clone()).and(b.not().or(a))
            }
            Formula::Exists(v, f) => count(1, v, f.desugar()),
            Formula::Forall(v, f) => count(1, v, f.desugar().not()).not(),
            Formula::CountExists(k, v, f) => count(*k, v, f.desugar()),
            Formula::CountExistsExact(0, v, f) => count(1, v, f.desugar()).not(),
            Formula::CountExistsExact(k, v, f) => {
                let body = f.desugar();
                count(*k, v, body.clone()).and(count(k + 1, v, body).not())
            }
        }
    }

    /// Counts AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Pred(..) | Formula::Edge(..) | Formula::Eq(..) => 1,
            Formula::Not(f)
            | Formula::Exists(_, f)
            | Formula::Forall(_, f)
            | Formula::CountExists(_, _, f)
            | Formula::CountExistsExact(_, _, f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

// Binding strength, loosest first: <->, ->, |, &, then unary forms.
const PREC_IFF: u8 = 1;
const PREC_IMP: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_UNARY: u8 = 5;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => PREC_IFF,
        Formula::Implies(..) => PREC_IMP,
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, g: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({g})")
    } else {
        write!(f, "{g}")
    }
}

/// Canonical text: binary connectives surrounded by single spaces, `->`
/// right-associative, `&`, `|`, `<->` left-associative, `~` and atoms
/// unspaced, `E(a,b)`, `a = b`, `a != b` for `~(a = b)`, and quantifier
/// bodies parenthesised unless they are unary.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Pred(i, v) => write!(f, "P{i}({v})"),
            Formula::Edge(a, b) => write!(f, "E({a},{b})"),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(g) => match g.as_ref() {
                Formula::Eq(a, b) => write!(f, "{a} != {b}"),
                g if precedence(g) == PREC_UNARY => write!(f, "~{g}"),
                g => write!(f, "~({g})"),
            },
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Iff(a, b) => {
                let (p, op) = match self {
                    Formula::And(..) => (PREC_AND, "&"),
                    Formula::Or(..) => (PREC_OR, "|"),
                    _ => (PREC_IFF, "<->"),
                };
                write_wrapped(f, a, precedence(a) < p)?;
                write!(f, " {op} ")?;
                write_wrapped(f, b, precedence(b) <= p)
            }
            Formula::Implies(a, b) => {
                write_wrapped(f, a, precedence(a) <= PREC_IMP)?;
                write!(f, " -> ")?;
                write_wrapped(f, b, precedence(b) < PREC_IMP)
            }
            Formula::Exists(v, g) => write_quant(f, "exists".into(), v, g),
            Formula::Forall(v, g) => write_quant(f, "forall".into(), v, g),
            Formula::CountExists(k, v, g) => write_quant(f, format!("exists[{k}]"), v, g),
            Formula::CountExistsExact(k, v, g) => write_quant(f, format!("exists[={k}]"), v, g),
        }
    }
}

fn write_quant(f: &mut fmt::Formatter<'_>, head: String, v: &str, body: &Formula) -> fmt::Result {
    write!(f, "{head} {v}. ")?;
    let parens = precedence(body) < PREC_UNARY
        || matches!(body, Formula::Eq(..))
        || matches!(body, Formula::Not(g) if matches!(g.as_ref(), Formula::Eq(..)));
    write_wrapped(f, body, parens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_variables_respect_binding() {
        let f = exists("y", edge("x", "y")).and(pred(1, "y"));
        assert_eq!(f.free_vars(), ["x", "y"].iter().map(|s| s.to_string()).collect());
        assert_eq!(forall("x", eq("x", "x")).free_vars().len(), 0);
    }

    #[test]
    fn desugar_leaves_only_core_connectives() {
        let f = forall("x", exactly(2, "y", edge("x", "y")).implies(pred(1, "x")));
        fn core(f: &Formula) -> bool {
            match f {
                Formula::Pred(..) | Formula::Edge(..) | Formula::Eq(..) => true,
                Formula::Not(g) | Formula::CountExists(_, _, g) => core(g),
                Formula::And(a, b) | Formula::Or(a, b) => core(a) && core(b),
                _ => false,
            }
        }
        assert!(core(&f.desugar()));
        assert!(!core(&f));
    }

    #[test]
    fn exact_zero_desugars_to_negated_existence() {
        assert_eq!(
            exactly(0, "y", edge("x", "y")).desugar(),
            count(1, "y", edge("x", "y")).not()
        );
    }

    #[test]
    fn swap_exchanges_x_and_y() {
        let f = count(2, "y", edge("x", "y"));
        assert_eq!(f.swap_xy(), count(2, "x", edge("y", "x")));
    }

    #[test]
    fn display_is_canonical() {
        let f = forall("x", edge("x", "x").not());
        assert_eq!(f.to_string(), "forall x. ~E(x,x)");
        let g = count(2, "x", eq("x", "x"));
        assert_eq!(g.to_string(), "exists[2] x. (x = x)");
        let h = pred(1, "x").or(pred(2, "x")).and(neq("x", "y"));
        assert_eq!(h.to_string(), "(P1(x) | P2(x)) & x != y");
        let i = pred(1, "x").implies(pred(2, "x")).implies(pred(3, "x"));
        assert_eq!(i.to_string(), "(P1(x) -> P2(x)) -> P3(x)");
    }
}
