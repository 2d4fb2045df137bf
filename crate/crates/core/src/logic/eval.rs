//! Model checking over `𝔐_G`.
//!
//! [`Evaluator`] compiles a formula into a negation-normal IR in which
//! chains of plain existentials become one backtracking search. Variables
//! are bound in most-constrained-first order, with candidates drawn from
//! positive atoms (label buckets, neighbour lists, equalities). Quantified
//! sub-results are memoised on the values of their free variables for the
//! lifetime of the evaluator. [`evaluate_naive`] is a direct transcription of
//! the semantics kept as a reference.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use thiserror::Error;

use super::{Formula, Var};
use crate::graph::{Graph, Node};

pub type Assignment = BTreeMap<Var, Node>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("free variable `{0}` is not assigned")]
    Unassigned(Var),
    #[error("variable `{var}` is assigned node {node}, graph has {num_nodes} nodes")]
    NodeOutOfRange { var: Var, node: Node, num_nodes: usize },
    #[error("formula uses {0} distinct variables, at most 64 are supported")]
    TooManyVariables(usize),
    #[error("a node classifier needs exactly one free variable, found {0}")]
    FreeVariableCount(usize),
}

type Slot = usize;
type Id = usize;

#[derive(Clone, Debug)]
enum Op {
    Pred(usize, Slot),
    Edge(Slot, Slot),
    Eq(Slot, Slot),
    Not(Id),
    And(Rc<[Id]>),
    Or(Rc<[Id]>),
    /// `∃_k` (or exactly `k` when `exact`) values of `var` satisfy `body`.
    Count { k: u32, exact: bool, var: Slot, body: Id },
    /// `∃vars ⋀ conjuncts`.
    Search { vars: Rc<[Slot]>, conjuncts: Rc<[Id]> },
}

#[derive(Clone, Debug)]
struct IrNode {
    op: Op,
    free: u64,
}

fn bit(s: Slot) -> u64 {
    1u64 << s
}

struct Compiler {
    ir: Vec<IrNode>,
    slots: HashMap<Var, Slot>,
    names: Vec<Var>,
}

impl Compiler {
    fn slot(&mut self, v: &str) -> Slot {
        if let Some(&s) = self.slots.get(v) {
            return s;
        }
        let s = self.names.len();
        self.names.push(v.to_string());
        self.slots.insert(v.to_string(), s);
        s
    }

    fn push(&mut self, op: Op) -> Id {
        let free = match &op {
            Op::Pred(_, s) => bit(*s),
            Op::Edge(a, b) | Op::Eq(a, b) => bit(*a) | bit(*b),
            Op::Not(c) => self.ir[*c].free,
            Op::And(cs) | Op::Or(cs) => cs.iter().fold(0, |m, c| m | self.ir[*c].free),
            Op::Count { var, body, .. } => self.ir[*body].free & !bit(*var),
            Op::Search { vars, conjuncts } => {
                let bound = vars.iter().fold(0, |m, v| m | bit(*v));
                conjuncts.iter().fold(0, |m, c| m | self.ir[*c].free) & !bound
            }
        };
        self.ir.push(IrNode { op, free });
        self.ir.len() - 1
    }

    fn literal(&mut self, op: Op, positive: bool) -> Id {
        let id = self.push(op);
        if positive {
            id
        } else {
            self.negate(id)
        }
    }

    fn negate(&mut self, id: Id) -> Id {
        match self.ir[id].op {
            Op::Not(inner) => inner,
            _ => self.push(Op::Not(id)),
        }
    }

    fn junction(&mut self, parts: Vec<Id>, conj: bool) -> Id {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match &self.ir[p].op {
                Op::And(cs) if conj => flat.extend(cs.iter().copied()),
                Op::Or(cs) if !conj => flat.extend(cs.iter().copied()),
                _ => flat.push(p),
            }
        }
        if flat.len() == 1 {
            return flat[0];
        }
        let cs: Rc<[Id]> = flat.into();
        self.push(if conj { Op::And(cs) } else { Op::Or(cs) })
    }

    fn conjuncts_of(&self, id: Id) -> Vec<Id> {
        match &self.ir[id].op {
            Op::And(cs) => cs.to_vec(),
            _ => vec![id],
        }
    }

    fn exists(&mut self, var: Slot, body: Id) -> Id {
        let mut vars = vec![var];
        let mut conjuncts = self.conjuncts_of(body);
        // Absorb nested searches whose variables are fresh for the chain and
        // invisible to their siblings.
        let mut i = 0;
        while i < conjuncts.len() {
            if let Op::Search { vars: inner_vars, conjuncts: inner } = &self.ir[conjuncts[i]].op {
                let inner_mask = inner_vars.iter().fold(0, |m, v| m | bit(*v));
                let chain_mask = vars.iter().fold(0, |m, v| m | bit(*v));
                let siblings_free = conjuncts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(0, |m, (_, c)| m | self.ir[*c].free);
                if inner_mask & (chain_mask | siblings_free) == 0 {
                    let (inner_vars, inner) = (inner_vars.clone(), inner.clone());
                    vars.extend(inner_vars.iter().copied());
                    conjuncts.splice(i..=i, inner.iter().copied());
                    continue;
                }
            }
            i += 1;
        }
        self.push(Op::Search {
            vars: vars.into(),
            conjuncts: conjuncts.into(),
        })
    }

    fn quantifier(&mut self, k: u32, exact: bool, v: &str, g: &Formula, positive: bool) -> Id {
        let var = self.slot(v);
        let body = self.compile(g, true);
        let id = if k == 1 && !exact {
            self.exists(var, body)
        } else {
            self.push(Op::Count { k, exact, var, body })
        };
        if positive {
            id
        } else {
            self.negate(id)
        }
    }

    fn compile(&mut self, f: &Formula, positive: bool) -> Id {
        match f {
            Formula::Pred(i, v) => {
                let s = self.slot(v);
                self.literal(Op::Pred(*i, s), positive)
            }
            Formula::Edge(a, b) => {
                let (a, b) = (self.slot(a), self.slot(b));
                self.literal(Op::Edge(a, b), positive)
            }
            Formula::Eq(a, b) => {
                let (a, b) = (self.slot(a), self.slot(b));
                self.literal(Op::Eq(a, b), positive)
            }
            Formula::Not(g) => self.compile(g, !positive),
            Formula::And(a, b) | Formula::Or(a, b) => {
                let conj = matches!(f, Formula::And(..)) == positive;
                let parts = vec![self.compile(a, positive), self.compile(b, positive)];
                self.junction(parts, conj)
            }
            Formula::Implies(a, b) => {
                let parts = vec![self.compile(a, !positive), self.compile(b, positive)];
                self.junction(parts, !positive)
            }
            Formula::Iff(a, b) => {
                let (ap, an) = (self.compile(a, true), self.compile(a, false));
                let (bp, bn) = (self.compile(b, true), self.compile(b, false));
                let (l, r) = if positive {
                    (self.junction(vec![ap, bp], true), self.junction(vec![an, bn], true))
                } else {
                    (self.junction(vec![ap, bn], true), self.junction(vec![an, bp], true))
                };
                self.junction(vec![l, r], false)
            }
            Formula::Exists(v, g) => self.quantifier(1, false, v, g, positive),
            Formula::Forall(v, g) => {
                let var = self.slot(v);
                let body = self.compile(g, false);
                let id = self.exists(var, body);
                if positive {
                    self.negate(id)
                } else {
                    id
                }
            }
            Formula::CountExists(k, v, g) => self.quantifier(*k, false, v, g, positive),
            Formula::CountExistsExact(k, v, g) => self.quantifier(*k, true, v, g, positive),
        }
    }
}

#[derive(Clone)]
enum Candidates<'a> {
    All(usize),
    Slice(&'a [Node]),
    Bucket(Rc<[Node]>),
    One(Node),
}

impl Candidates<'_> {
    fn len(&self) -> usize {
        match self {
            Candidates::All(n) => *n,
            Candidates::Slice(s) => s.len(),
            Candidates::Bucket(b) => b.len(),
            Candidates::One(_) => 1,
        }
    }

    fn get(&self, i: usize) -> Node {
        match self {
            Candidates::All(_) => i,
            Candidates::Slice(s) => s[i],
            Candidates::Bucket(b) => b[i],
            Candidates::One(v) => *v,
        }
    }
}

#[derive(Hash, PartialEq, Eq)]
enum MemoKey {
    Packed(u128),
    Wide(Vec<u32>),
}

const UNSET: Node = usize::MAX;

/// A formula compiled against one graph. Reuse it across assignments to
/// share memoised sub-results.
pub struct Evaluator<'g> {
    graph: &'g Graph,
    ir: Vec<IrNode>,
    root: Id,
    names: Vec<Var>,
    values: Vec<Node>,
    buckets: Vec<Rc<[Node]>>,
    memo: HashMap<MemoKey, bool>,
}

impl<'g> Evaluator<'g> {
    pub fn new(graph: &'g Graph, f: &Formula) -> Result<Self, EvalError> {
        let distinct = f.variables().len();
        if distinct > 64 {
            return Err(EvalError::TooManyVariables(distinct));
        }
        let mut c = Compiler {
            ir: Vec::new(),
            slots: HashMap::new(),
            names: Vec::new(),
        };
        let root = c.compile(f, true);
        let buckets = (1..=graph.dimension())
            .map(|i| graph.nodes().filter(|&v| graph.predicate(i, v)).collect::<Vec<_>>().into())
            .collect();
        Ok(Evaluator {
            graph,
            values: vec![UNSET; c.names.len()],
            ir: c.ir,
            root,
            names: c.names,
            buckets,
            memo: HashMap::new(),
        })
    }

    /// Free variables of the compiled formula, in slot order.
    pub fn free_vars(&self) -> Vec<Var> {
        let mask = self.ir[self.root].free;
        (0..self.names.len())
            .filter(|s| mask & bit(*s) != 0)
            .map(|s| self.names[s].clone())
            .collect()
    }

    pub fn eval(&mut self, assignment: &Assignment) -> Result<bool, EvalError> {
        let mask = self.ir[self.root].free;
        for s in 0..self.names.len() {
            if mask & bit(s) == 0 {
                continue;
            }
            let name = &self.names[s];
            let node = *assignment
                .get(name)
                .ok_or_else(|| EvalError::Unassigned(name.clone()))?;
            if node >= self.graph.num_nodes() {
                return Err(EvalError::NodeOutOfRange {
                    var: name.clone(),
                    node,
                    num_nodes: self.graph.num_nodes(),
                });
            }
            self.values[s] = node;
        }
        Ok(self.run(self.root))
    }

    /// Evaluates with a single variable bound to `v`.
    pub fn eval_at(&mut self, var: &str, v: Node) -> Result<bool, EvalError> {
        let mut a = Assignment::new();
        a.insert(var.to_string(), v);
        self.eval(&a)
    }

    fn run(&mut self, id: Id) -> bool {
        let g = self.graph;
        match &self.ir[id].op {
            Op::Pred(i, s) => g.predicate(*i, self.values[*s]),
            Op::Edge(a, b) => g.has_edge(self.values[*a], self.values[*b]),
            Op::Eq(a, b) => self.values[*a] == self.values[*b],
            Op::Not(c) => {
                let c = *c;
                !self.run(c)
            }
            Op::And(cs) => {
                let cs = cs.clone();
                cs.iter().all(|&c| self.run(c))
            }
            Op::Or(cs) => {
                let cs = cs.clone();
                cs.iter().any(|&c| self.run(c))
            }
            Op::Count { .. } | Op::Search { .. } => {
                let key = self.memo_key(id);
                if let Some(&hit) = self.memo.get(&key) {
                    return hit;
                }
                let result = match self.ir[id].op.clone() {
                    Op::Count { k, exact, var, body } => self.count(k, exact, var, body),
                    Op::Search { vars, conjuncts } => self.search(&vars, &conjuncts),
                    _ => unreachable!(),
                };
                self.memo.insert(key, result);
                result
            }
        }
    }

    fn memo_key(&self, id: Id) -> MemoKey {
        let mask = self.ir[id].free;
        let n = self.graph.num_nodes();
        if mask.count_ones() <= 4 && n < (1 << 24) && id < (1 << 32) {
            let mut packed = id as u128;
            let mut shift = 32;
            for s in (0..64).filter(|s| mask & bit(*s) != 0) {
                packed |= ((self.values[s] as u128) + 1) << shift;
                shift += 24;
            }
            MemoKey::Packed(packed)
        } else {
            let mut wide = vec![id as u32];
            wide.extend(
                (0..64)
                    .filter(|s| mask & bit(*s) != 0)
                    .map(|s| self.values[s] as u32),
            );
            MemoKey::Wide(wide)
        }
    }

    /// Smallest candidate list for `var` implied by the positive atoms among
    /// `conjuncts`, given that slots in `pending` are not yet assigned.
    fn candidates(&self, var: Slot, conjuncts: &[Id], pending: u64) -> Candidates<'g> {
        let g = self.graph;
        let ready = |s: Slot| s != var && pending & bit(s) == 0;
        let mut best = Candidates::All(g.num_nodes());
        for &c in conjuncts {
            let cand = match self.ir[c].op {
                Op::Pred(i, s) if s == var => match i.checked_sub(1).and_then(|i| self.buckets.get(i)) {
                    Some(b) => Candidates::Bucket(b.clone()),
                    None => Candidates::Slice(&[]),
                },
                Op::Edge(a, b) if b == var && ready(a) => {
                    Candidates::Slice(g.out_neighbors(self.values[a]))
                }
                Op::Edge(a, b) if a == var && ready(b) => {
                    Candidates::Slice(g.in_neighbors(self.values[b]))
                }
                Op::Eq(a, b) if a == var && ready(b) => Candidates::One(self.values[b]),
                Op::Eq(a, b) if b == var && ready(a) => Candidates::One(self.values[a]),
                _ => continue,
            };
            if cand.len() < best.len() {
                best = cand;
            }
        }
        best
    }

    fn count(&mut self, k: u32, exact: bool, var: Slot, body: Id) -> bool {
        let conjuncts: Vec<Id> = match &self.ir[body].op {
            Op::And(cs) => cs.to_vec(),
            _ => vec![body],
        };
        let cands = self.candidates(var, &conjuncts, bit(var));
        let saved = self.values[var];
        let total = cands.len();
        let k = k as usize;
        let mut hits = 0usize;
        let mut verdict = None;
        for i in 0..total {
            self.values[var] = cands.get(i);
            if self.run(body) {
                hits += 1;
                if !exact && hits >= k {
                    verdict = Some(true);
                    break;
                }
                if exact && hits > k {
                    verdict = Some(false);
                    break;
                }
            }
            if hits + (total - i - 1) < k {
                verdict = Some(false);
                break;
            }
        }
        self.values[var] = saved;
        verdict.unwrap_or(if exact { hits == k } else { hits >= k })
    }

    fn search(&mut self, vars: &[Slot], conjuncts: &[Id]) -> bool {
        let chain = vars.iter().fold(0, |m, v| m | bit(*v));
        for &c in conjuncts {
            if self.ir[c].free & chain == 0 && !self.run(c) {
                return false;
            }
        }
        let saved: Vec<Node> = vars.iter().map(|&v| self.values[v]).collect();
        let found = self.extend(vars, conjuncts, chain);
        for (&v, old) in vars.iter().zip(saved) {
            self.values[v] = old;
        }
        found
    }

    fn extend(&mut self, vars: &[Slot], conjuncts: &[Id], pending: u64) -> bool {
        if pending == 0 {
            return true;
        }
        let mut pick: Option<(Slot, Candidates<'g>)> = None;
        for &v in vars.iter().filter(|&&v| pending & bit(v) != 0) {
            let c = self.candidates(v, conjuncts, pending);
            if pick.as_ref().is_none_or(|(_, best)| c.len() < best.len()) {
                pick = Some((v, c));
            }
        }
        let (var, cands) = pick.expect("pending variable");
        let rest = pending & !bit(var);
        let chain = vars.iter().fold(0, |m, v| m | bit(*v));
        'next: for i in 0..cands.len() {
            self.values[var] = cands.get(i);
            for &c in conjuncts {
                let need = self.ir[c].free & chain;
                if need & bit(var) != 0 && need & rest == 0 && !self.run(c) {
                    continue 'next;
                }
            }
            if self.extend(vars, conjuncts, rest) {
                return true;
            }
        }
        false
    }
}

/// Evaluates `f` on `g` under `assignment` with the compiled evaluator.
pub fn evaluate(g: &Graph, f: &Formula, assignment: &Assignment) -> Result<bool, EvalError> {
    Evaluator::new(g, f)?.eval(assignment)
}

/// Applies a one-free-variable formula to every node.
pub fn classify(g: &Graph, f: &Formula) -> Result<Vec<bool>, EvalError> {
    let free = f.free_vars();
    if free.len() != 1 {
        return Err(EvalError::FreeVariableCount(free.len()));
    }
    let var = free.into_iter().next().expect("one free variable");
    let mut ev = Evaluator::new(g, f)?;
    g.nodes().map(|v| ev.eval_at(&var, v)).collect()
}

/// Direct recursive semantics, exponential in quantifier depth.
pub fn evaluate_naive(g: &Graph, f: &Formula, assignment: &Assignment) -> Result<bool, EvalError> {
    for v in f.free_vars() {
        match assignment.get(&v) {
            None => return Err(EvalError::Unassigned(v)),
            Some(&node) if node >= g.num_nodes() => {
                return Err(EvalError::NodeOutOfRange {
                    var: v,
                    node,
                    num_nodes: g.num_nodes(),
                })
            }
            Some(_) => {}
        }
    }
    let mut env: HashMap<Var, Node> = assignment.iter().map(|(k, v)| (k.clone(), *v)).collect();
    Ok(naive(g, f, &mut env))
}

fn naive(g: &Graph, f: &Formula, env: &mut HashMap<Var, Node>) -> bool {
    let val = |v: &Var, env: &HashMap<Var, Node>| env[v];
    match f {
        Formula::Pred(i, v) => g.predicate(*i, val(v, env)),
        Formula::Edge(a, b) => g.has_edge(val(a, env), val(b, env)),
        Formula::Eq(a, b) => val(a, env) == val(b, env),
        Formula::Not(h) => !naive(g, h, env),
        Formula::And(a, b) => naive(g, a, env) && naive(g, b, env),
        Formula::Or(a, b) => naive(g, a, env) || naive(g, b, env),
        Formula::Implies(a, b) => !naive(g, a, env) || naive(g, b, env),
        Formula::Iff(a, b) => naive(g, a, env) == naive(g, b, env),
        Formula::Exists(v, h) => witnesses(g, v, h, env) >= 1,
        Formula::Forall(v, h) => witnesses(g, v, h, env) == g.num_nodes(),
        Formula::CountExists(k, v, h) => witnesses(g, v, h, env) >= *k as usize,
        Formula::CountExistsExact(k, v, h) => witnesses(g, v, h, env) == *k as usize,
    }
}

fn witnesses(g: &Graph, v: &Var, body: &Formula, env: &mut HashMap<Var, Node>) -> usize {
    let saved = env.get(v).copied();
    let mut hits = 0;
    for a in g.nodes() {
        env.insert(v.clone(), a);
        if naive(g, body, env) {
            hits += 1;
        }
    }
    match saved {
        Some(old) => env.insert(v.clone(), old),
        None => env.remove(v),
    };
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{count, edge, eq, exactly, exists, parse_formula, pred};

    fn path3() -> Graph {
        Graph::from_edges(3, 0, [(0, 1), (1, 2)]).unwrap()
    }

    fn at(pairs: &[(&str, Node)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn counting_sentence() {
        let f = count(2, "x", eq("x", "x"));
        assert!(evaluate(&path3(), &f, &Assignment::new()).unwrap());
        let single = Graph::new(1, 0);
        assert!(!evaluate(&single, &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn unassigned_variable_is_reported() {
        let err = evaluate(&path3(), &edge("x", "y"), &at(&[("x", 0)])).unwrap_err();
        assert_eq!(err, EvalError::Unassigned("y".into()));
    }

    #[test]
    fn classify_requires_one_free_variable() {
        assert_eq!(
            classify(&path3(), &edge("x", "y")),
            Err(EvalError::FreeVariableCount(2))
        );
        assert_eq!(classify(&path3(), &eq("x", "x")).unwrap(), vec![true; 3]);
    }

    #[test]
    fn predicates_past_dimension_are_false() {
        let f = pred(4, "x");
        assert_eq!(classify(&path3(), &f).unwrap(), vec![false; 3]);
        let g = exists("y", pred(7, "y").and(edge("x", "y")));
        assert_eq!(classify(&path3(), &g).unwrap(), vec![false; 3]);
    }

    #[test]
    fn shadowed_variables() {
        // The inner `x` must not leak into the outer comparison.
        let f = parse_formula("exists y. (E(x,y) & exists x. E(y,x)) & x = x").unwrap();
        let g = path3();
        assert_eq!(classify(&g, &f).unwrap(), vec![true, false, false]);
        for v in g.nodes() {
            let a = at(&[("x", v)]);
            assert_eq!(evaluate(&g, &f, &a), evaluate_naive(&g, &f, &a));
        }
    }

    #[test]
    fn exact_counts_match_direct_counts() {
        let g = Graph::from_edges(4, 0, [(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        for k in 0..=4 {
            let f = exactly(k, "y", edge("x", "y"));
            let got = classify(&g, &f).unwrap();
            let want: Vec<bool> = g.nodes().map(|v| g.out_degree(v) == k as usize).collect();
            assert_eq!(got, want, "k = {k}");
        }
    }

    #[test]
    fn chained_search_agrees_with_naive() {
        let f = parse_formula(
            "exists y. exists z. (E(x,y) & E(y,z) & ~E(x,z) & forall y. (E(z,y) -> y = x))",
        )
        .unwrap();
        let g = Graph::from_edges(4, 0, [(0, 1), (1, 2), (2, 0), (1, 3), (3, 0)]).unwrap();
        for v in g.nodes() {
            let a = at(&[("x", v)]);
            assert_eq!(evaluate(&g, &f, &a), evaluate_naive(&g, &f, &a), "node {v}");
        }
    }

    #[test]
    fn iff_and_implication_under_negation() {
        let f = parse_formula("~(P1(x) <-> exists y. E(x,y)) | ~(P1(x) -> x != x)").unwrap();
        let mut g = path3();
        g = {
            let mut h = Graph::new(3, 1);
            for (u, v) in g.edges() {
                h.add_edge(u, v).unwrap();
            }
            h.set_predicate(1, 1, true).unwrap();
            h
        };
        for v in g.nodes() {
            let a = at(&[("x", v)]);
            assert_eq!(evaluate(&g, &f, &a), evaluate_naive(&g, &f, &a), "node {v}");
        }
    }
}
