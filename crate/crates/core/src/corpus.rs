//! Graph families and named formulas.
//!
//! Node conventions:
//! * `make_linear_order(m)` has edges `(i, j)` for `i < j`. For `m = 2n+1`,
//!   node `i` plays the role of `v_{i-n}`; see [`order_node`].
//! * `gadgetise(g)` keeps node `u` of `g` as the `P₁` node `v¹_u`. The `e`-th
//!   edge of `g` in lexicographic order gets `v² = |V| + 2e` (label `P₂`,
//!   attached to the source) and `v³ = |V| + 2e + 1` (label `P₃`, attached to
//!   the target).

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, Node};
use crate::logic::{and_all, parse_formula, Formula};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn positive(name: &str, value: usize) -> Result<(), CorpusError> {
    if value == 0 {
        Err(CorpusError::InvalidParameter(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

pub fn make_linear_order(num_nodes: usize) -> Result<Graph, CorpusError> {
    positive("num_nodes", num_nodes)?;
    let mut g = Graph::new(num_nodes, 0);
    for i in 0..num_nodes {
        for j in i + 1..num_nodes {
            g.add_edge(i, j)?;
        }
    }
    Ok(g)
}

/// `n = ℓ·c + 1`, the half-width of the counterexample orders.
pub fn half_width(ell: usize, c: usize) -> usize {
    ell * c + 1
}

/// Node id of `v_i` in an order over `2n+1` nodes.
pub fn order_node(n: usize, i: i64) -> Node {
    let id = i + n as i64;
    assert!(id >= 0 && id <= 2 * n as i64, "v_{i} outside -{n}..{n}");
    id as Node
}

/// `(G, G′)`: the strict linear order over `2n+1` nodes and the copy in
/// which the edge `(v_{-1}, v_1)` is reversed.
pub fn make_perturbed_order(ell: usize, c: usize) -> Result<(Graph, Graph), CorpusError> {
    positive("ell", ell)?;
    positive("c", c)?;
    let n = half_width(ell, c);
    let g = make_linear_order(2 * n + 1)?;
    let mut h = g.clone();
    let (lo, hi) = (order_node(n, -1), order_node(n, 1));
    h.remove_edge(lo, hi)?;
    h.add_edge(hi, lo)?;
    Ok((g, h))
}

/// Ids of the two middle nodes of the gadget for edge `(u, w)` of `g`.
pub fn gadget_nodes(g: &Graph, u: Node, w: Node) -> Option<(Node, Node)> {
    let e = g.edges().position(|p| p == (u, w))?;
    let base = g.num_nodes() + 2 * e;
    Some((base, base + 1))
}

pub fn gadgetise(g: &Graph) -> Graph {
    let edges: Vec<(Node, Node)> = g.edges().collect();
    let n = g.num_nodes();
    let mut out = Graph::new(n + 2 * edges.len(), 3);
    let label = |i: usize| (1..=3).map(|j| j == i).collect::<Vec<bool>>();
    for v in 0..n {
        out.set_label(v, label(1)).expect("in range");
    }
    for (e, &(u, w)) in edges.iter().enumerate() {
        let (two, three) = (n + 2 * e, n + 2 * e + 1);
        out.set_label(two, label(2)).expect("in range");
        out.set_label(three, label(3)).expect("in range");
        for (a, b) in [(u, two), (two, three), (three, w)] {
            out.add_undirected_edge(a, b).expect("simple gadget");
        }
    }
    out
}

/// `(H, H′)`: `H = gad(G)`; `H′` re-attaches the middle nodes of the gadget
/// for `(v_{-1}, v_1)` to the opposite endpoints, which reverses that
/// gadgetised edge while keeping node ids and labels.
pub fn make_perturbed_gadget(ell: usize, c: usize) -> Result<(Graph, Graph), CorpusError> {
    let (g, _) = make_perturbed_order(ell, c)?;
    let n = half_width(ell, c);
    let (lo, hi) = (order_node(n, -1), order_node(n, 1));
    let (two, three) = gadget_nodes(&g, lo, hi).expect("order contains (v_-1, v_1)");
    let h = gadgetise(&g);
    let mut h2 = h.clone();
    for (a, b) in [(lo, two), (three, hi)] {
        h2.remove_edge(a, b)?;
        h2.remove_edge(b, a)?;
    }
    h2.add_undirected_edge(hi, two)?;
    h2.add_undirected_edge(three, lo)?;
    Ok((h, h2))
}

/// The 9-cycle of `H′` through `v¹_{-1}, v¹_0, v¹_1` with labels cycling
/// `P₁, P₂, P₃`, listed from `v¹_{-1}` (the closing edge back to it is
/// implicit).
pub fn nine_cycle_witness(ell: usize, c: usize) -> Result<Vec<Node>, CorpusError> {
    let (g, _) = make_perturbed_order(ell, c)?;
    let n = half_width(ell, c);
    let (a, b, d) = (order_node(n, -1), order_node(n, 0), order_node(n, 1));
    let (ab2, ab3) = gadget_nodes(&g, a, b).expect("edge");
    let (bd2, bd3) = gadget_nodes(&g, b, d).expect("edge");
    let (ad2, ad3) = gadget_nodes(&g, a, d).expect("edge");
    Ok(vec![a, ab2, ab3, b, bd2, bd3, d, ad2, ad3])
}

/// Whether `cycle` is a simple closed walk in `g` whose labels cycle
/// through `P₁, P₂, P₃`.
pub fn is_labelled_cycle(g: &Graph, cycle: &[Node]) -> bool {
    let k = cycle.len();
    let mut seen = cycle.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == k
        && k.is_multiple_of(3)
        && cycle.iter().all(|&v| v < g.num_nodes())
        && (0..k).all(|i| g.has_edge(cycle[i], cycle[(i + 1) % k]))
        && (0..k).all(|i| {
            (1..=3).all(|p| g.predicate(p, cycle[i]) == (p == i % 3 + 1))
        })
}

/// A single-step graph edit. Predicate indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edit {
    AddEdge(Node, Node),
    RemoveEdge(Node, Node),
    AddUndirected(Node, Node),
    RemoveUndirected(Node, Node),
    FlipLabel(Node, usize),
}

pub fn mutate(g: &Graph, edit: Edit) -> Result<Graph, CorpusError> {
    let mut out = g.clone();
    let check = |v: Node| {
        if v < g.num_nodes() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node: v,
                num_nodes: g.num_nodes(),
            })
        }
    };
    match edit {
        Edit::AddEdge(u, v) => out.add_edge(u, v)?,
        Edit::RemoveEdge(u, v) => out.remove_edge(u, v)?,
        Edit::AddUndirected(u, v) => out.add_undirected_edge(u, v)?,
        Edit::RemoveUndirected(u, v) => {
            out.remove_edge(u, v)?;
            out.remove_edge(v, u)?;
        }
        Edit::FlipLabel(v, i) => {
            check(v)?;
            let current = g.predicate(i, v);
            out.set_predicate(v, i, !current)?;
        }
    }
    Ok(out)
}

/// Every edit that toggles one undirected edge or one label bit.
pub fn single_undirected_edits(g: &Graph) -> Vec<Edit> {
    let mut edits = Vec::new();
    for u in g.nodes() {
        for v in u + 1..g.num_nodes() {
            edits.push(if g.has_edge(u, v) {
                Edit::RemoveUndirected(u, v)
            } else {
                Edit::AddUndirected(u, v)
            });
        }
    }
    for v in g.nodes() {
        for i in 1..=g.dimension() {
            edits.push(Edit::FlipLabel(v, i));
        }
    }
    edits
}

/// What an edit toggles, so a sequence never undoes its own steps.
fn edit_site(e: Edit) -> (Node, Node, usize) {
    match e {
        Edit::AddEdge(u, v) | Edit::RemoveEdge(u, v) => (u, v, 0),
        Edit::AddUndirected(u, v) | Edit::RemoveUndirected(u, v) => (u.min(v), u.max(v), 0),
        Edit::FlipLabel(v, i) => (v, v, i),
    }
}

#[derive(Clone, Debug)]
pub struct CorpusGraph {
    pub name: String,
    pub graph: Graph,
}

/// Fixed corpus of undirected dimension-3 graphs: `gad(L_n)` for
/// `1 ≤ n ≤ max_order`, all their single edits, `multi_edits` seeded
/// random edit sequences per order, gadgetised non-orders, and `H′`
/// instances.
pub fn gadget_corpus(max_order: usize, multi_edits: usize, seed: u64) -> Vec<CorpusGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in 1..=max_order {
        let base = gadgetise(&make_linear_order(n).expect("n >= 1"));
        out.push(CorpusGraph {
            name: format!("gad(L{n})"),
            graph: base.clone(),
        });
        let edits = single_undirected_edits(&base);
        for e in &edits {
            out.push(CorpusGraph {
                name: format!("gad(L{n}) {e:?}"),
                graph: mutate(&base, *e).expect("valid edit"),
            });
        }
        for t in 0..multi_edits {
            let steps = rng.gen_range(2..=3);
            let mut g = base.clone();
            let mut names = Vec::new();
            let mut touched = Vec::new();
            for _ in 0..steps {
                let fresh: Vec<Edit> = single_undirected_edits(&g)
                    .into_iter()
                    .filter(|e| !touched.contains(&edit_site(*e)))
                    .collect();
                let Some(&e) = fresh.choose(&mut rng) else { break };
                touched.push(edit_site(e));
                g = mutate(&g, e).expect("valid edit");
                names.push(format!("{e:?}"));
            }
            out.push(CorpusGraph {
                name: format!("gad(L{n}) multi#{t} {}", names.join(" ")),
                graph: g,
            });
        }
    }
    let cycle3 = Graph::from_edges(3, 0, [(0, 1), (1, 2), (2, 0)]).expect("3-cycle");
    out.push(CorpusGraph {
        name: "gad(C3)".into(),
        graph: gadgetise(&cycle3),
    });
    for (ell, c) in [(1, 1), (1, 2), (2, 1)] {
        let (_, perturbed) = make_perturbed_gadget(ell, c).expect("valid parameters");
        out.push(CorpusGraph {
            name: format!("H'({ell},{c})"),
            graph: perturbed,
        });
    }
    out
}

fn formula(text: &str) -> Formula {
    parse_formula(text).unwrap_or_else(|e| panic!("built-in formula `{text}`: {e}"))
}

const TOTALITY: &str = "forall x. forall y. (x = y | E(x,y) | E(y,x))";
const TRANSITIVITY: &str = "forall x. forall y. forall z. (E(x,y) & E(y,z) -> E(x,z))";

/// `(x=x) ∧ totality ∧ transitivity`.
pub fn formula_phi_lin() -> Formula {
    formula(&format!("x = x & {TOTALITY} & {TRANSITIVITY}"))
}

pub fn formula_totality() -> Formula {
    formula(TOTALITY)
}

/// `P₁, P₂, P₃` partition the nodes.
pub fn formula_phi1() -> Formula {
    formula(
        "forall x. ((P1(x) | P2(x) | P3(x)) & ~(P1(x) & P2(x)) & ~(P1(x) & P3(x)) & ~(P2(x) & P3(x)))",
    )
}

/// Degree constraints on gadget nodes; no two `P₁` nodes adjacent.
pub fn formula_phi2() -> Formula {
    formula(
        "forall x. (P2(x) -> exists[=2] y. E(x,y) & exists[=1] y. (E(x,y) & P1(y)) & exists[=1] y. (E(x,y) & P3(y))) \
         & forall x. (P3(x) -> exists[=2] y. E(x,y) & exists[=1] y. (E(x,y) & P1(y)) & exists[=1] y. (E(x,y) & P2(y))) \
         & forall x. forall y. ~(P1(x) & P1(y) & E(x,y))",
    )
}

/// Exactly one gadgetised edge between any two distinct `P₁` nodes.
pub fn formula_phi3() -> Formula {
    let forward = "exists[=1] y. exists[=1] z. (P2(y) & P3(z) & E(x,y) & E(y,z) & E(z,x'))";
    let backward = "exists[=1] y. exists[=1] z. (P3(y) & P2(z) & E(x,y) & E(y,z) & E(z,x'))";
    formula(&format!(
        "forall x. forall x'. (P1(x) & P1(x') & x != x' -> ~({forward} <-> {backward}))"
    ))
}

/// No directed 3-cycle of gadgetised edges.
pub fn formula_phi4() -> Formula {
    formula(
        "~exists x1. exists x2. exists x3. exists y1. exists y2. exists y3. exists z1. exists z2. exists z3. (\
         P1(x1) & P1(x2) & P1(x3) & P2(y1) & P2(y2) & P2(y3) & P3(z1) & P3(z2) & P3(z3) \
         & E(x1,y1) & E(y1,z1) & E(z1,x2) & E(x2,y2) & E(y2,z2) & E(z2,x3) & E(x3,y3) & E(y3,z3) & E(z3,x1))",
    )
}

/// `(x=x) ∧ φ₁ ∧ φ₂ ∧ φ₃ ∧ φ₄`.
pub fn formula_phi_gadlin_fo() -> Formula {
    formula("x = x")
        .and(formula_phi1())
        .and(formula_phi2())
        .and(formula_phi3())
        .and(formula_phi4())
}

/// The four edge/non-edge configurations of a pair of distinct nodes.
pub fn chi_formula(j: usize) -> Result<Formula, CorpusError> {
    let text = match j {
        1 => "E(x,y) & E(y,x)",
        2 => "~E(x,y) & E(y,x)",
        3 => "E(x,y) & ~E(y,x)",
        4 => "~E(x,y) & ~E(y,x) & x != y",
        _ => return Err(CorpusError::InvalidParameter(format!("chi index {j} not in 1..=4"))),
    };
    Ok(formula(text))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// No two distinct nodes share an out-degree.
    DistinctOutdegree,
    /// The gadget property ψ.
    GadgetPsi,
}

/// Finite part of an infinitary conjunction, indices restricted to
/// `< bound`. On graphs with at most `bound` nodes (for
/// [`Truncation::DistinctOutdegree`]) or at most `bound` `P₁` nodes (for
/// [`Truncation::GadgetPsi`]) it is equivalent to the full conjunction.
pub fn inf_c2_truncation(which: Truncation, bound: usize) -> Result<Formula, CorpusError> {
    positive("bound", bound)?;
    let parts: Vec<Formula> = match which {
        Truncation::DistinctOutdegree => (0..bound)
            .map(|i| {
                formula(&format!(
                    "forall x. forall y. (exists[={i}] y. E(x,y) & exists[={i}] x. E(y,x) -> x = y)"
                ))
            })
            .collect(),
        Truncation::GadgetPsi => (0..bound)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .map(|(i, j)| {
                formula(&format!(
                    "exists[{}] x. P1(x) -> exists x. (exists[={j}] y. (P2(y) & E(x,y)) & P1(x) \
                     & exists y. (P2(y) & E(x,y) & exists x. (P3(x) & E(y,x) \
                     & exists y. (P1(y) & E(x,y) & exists[={i}] x. (P2(x) & E(y,x))))))",
                    j + 1
                ))
            })
            .collect(),
    };
    Ok(and_all(parts).unwrap_or_else(|| formula("forall x. (x = x)")))
}
