//! Seeded, grammar-directed sampling of two-variable counting formulas.
//!
//! Generation is top-down. Each quantifier consumes one unit of the depth
//! budget and picks its count within the rank budget (`∃_{=k}` needs
//! `k + 1 ≤ rank`, `∀` and `∃` cost 1). A node budget bounds the formula
//! size. Atoms only mention variables that are bound or allowed free.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Formula, Var};

#[derive(Clone, Debug)]
pub struct FormulaSampler {
    /// Maximum quantifier depth.
    pub depth: usize,
    /// Maximum counting rank, at least 1.
    pub rank: u32,
    /// Predicates `P_1..P_dimension` are drawn from; 0 disables them.
    pub dimension: usize,
    /// Variables that may occur free; a non-empty subset of `{x, y}`.
    pub free: Vec<Var>,
    /// Upper bound on connective and quantifier nodes.
    pub max_nodes: usize,
}

impl FormulaSampler {
    pub fn classifier(depth: usize, rank: u32, dimension: usize) -> Self {
        FormulaSampler {
            depth,
            rank: rank.max(1),
            dimension,
            free: vec!["x".into()],
            max_nodes: 10,
        }
    }

    pub fn binary(depth: usize, rank: u32, dimension: usize) -> Self {
        FormulaSampler {
            free: vec!["x".into(), "y".into()],
            ..Self::classifier(depth, rank, dimension)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Formula {
        assert!(!self.free.is_empty(), "sampler needs a free variable");
        let mut budget = self.max_nodes;
        let scope: Vec<&str> = self.free.iter().map(String::as_str).collect();
        self.node(rng, self.depth, &mut budget, &scope)
    }

    fn node<R: Rng + ?Sized>(&self, rng: &mut R, depth: usize, budget: &mut usize, scope: &[&str]) -> Formula {
        if *budget == 0 {
            return self.atom(rng, scope);
        }
        let roll: u32 = rng.gen_range(0..100);
        let quant_weight = if depth > 0 { 40 } else { 0 };
        if roll < 25 {
            return self.atom(rng, scope);
        }
        *budget -= 1;
        let roll = rng.gen_range(0..(60 + quant_weight));
        match roll {
            0..=11 => self.node(rng, depth, budget, scope).not(),
            12..=29 => {
                let a = self.node(rng, depth, budget, scope);
                a.and(self.node(rng, depth, budget, scope))
            }
            30..=47 => {
                let a = self.node(rng, depth, budget, scope);
                a.or(self.node(rng, depth, budget, scope))
            }
            48..=53 => {
                let a = self.node(rng, depth, budget, scope);
                a.implies(self.node(rng, depth, budget, scope))
            }
            54..=59 => {
                let a = self.node(rng, depth, budget, scope);
                a.iff(self.node(rng, depth, budget, scope))
            }
            _ => self.quantifier(rng, depth, budget, scope),
        }
    }

    fn quantifier<R: Rng + ?Sized>(&self, rng: &mut R, depth: usize, budget: &mut usize, scope: &[&str]) -> Formula {
        let v = *["x", "y"].choose(rng).expect("non-empty");
        let mut inner: Vec<&str> = scope.to_vec();
        if !inner.contains(&v) {
            inner.push(v);
        }
        let body = Box::new(self.node(rng, depth - 1, budget, &inner));
        let var = v.to_string();
        match rng.gen_range(0..4) {
            0 => Formula::Exists(var, body),
            1 => Formula::Forall(var, body),
            2 if self.rank >= 2 => Formula::CountExistsExact(rng.gen_range(0..self.rank), var, body),
            _ => Formula::CountExists(rng.gen_range(1..=self.rank), var, body),
        }
    }

    fn atom<R: Rng + ?Sized>(&self, rng: &mut R, scope: &[&str]) -> Formula {
        let pick = |rng: &mut R| -> Var { scope.choose(rng).expect("non-empty scope").to_string() };
        let kinds = if self.dimension > 0 { 3 } else { 2 };
        match rng.gen_range(0..kinds + 1) {
            0 | 1 => Formula::Edge(pick(rng), pick(rng)),
            2 if self.dimension > 0 => Formula::Pred(rng.gen_range(1..=self.dimension), pick(rng)),
            _ => Formula::Eq(pick(rng), pick(rng)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::metrics;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_budgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (depth, rank) in [(0, 1), (1, 1), (1, 2), (2, 2), (3, 3)] {
            let s = FormulaSampler::binary(depth, rank, 2);
            for _ in 0..300 {
                let f = s.sample(&mut rng);
                let m = metrics(&f);
                assert!(m.depth <= depth, "{f}");
                assert!(m.counting_rank <= rank, "{f}");
                assert!(m.is_c2, "{f}");
                assert!(f.free_vars().iter().all(|v| v == "x" || v == "y"));
            }
        }
    }

    #[test]
    fn classifiers_have_at_most_x_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = FormulaSampler::classifier(2, 2, 1);
        for _ in 0..300 {
            let f = s.sample(&mut rng);
            assert!(f.free_vars().iter().all(|v| v == "x"), "{f}");
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let s = FormulaSampler::binary(2, 2, 2);
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (0..20).map(|_| s.sample(&mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (0..20).map(|_| s.sample(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }
}
