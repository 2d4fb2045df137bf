//! `c`-bounded Weisfeiler-Leman colour refinement with a colour table
//! shared across graphs, so colours of different graphs are comparable.

mod distinguish;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, Node};

pub use distinguish::{build_distinguishing_formula, Distinguisher};

pub type ColorId = usize;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum WlError {
    #[error("graph index {0} out of range")]
    GraphIndex(usize),
    #[error("node {node} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { node: Node, num_nodes: usize },
    #[error("round {requested} not computed (have {available})")]
    RoundOutOfRange { requested: usize, available: usize },
    #[error("colour {0} is not in the table or mixes rounds")]
    InconsistentTable(ColorId),
}

/// A multiset of colours with every multiplicity capped at `c`, stored as
/// ascending `(colour, multiplicity)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BoundedMultiset {
    pub entries: Vec<(ColorId, usize)>,
}

impl BoundedMultiset {
    pub fn count(&self, color: ColorId) -> usize {
        self.entries
            .binary_search_by_key(&color, |e| e.0)
            .map_or(0, |i| self.entries[i].1)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Expanded element list, ascending.
    pub fn elements(&self) -> Vec<ColorId> {
        self.entries
            .iter()
            .flat_map(|&(c, k)| std::iter::repeat_n(c, k))
            .collect()
    }
}

pub fn bound_multiset(items: impl IntoIterator<Item = ColorId>, c: usize) -> BoundedMultiset {
    let mut counts: BTreeMap<ColorId, usize> = BTreeMap::new();
    for t in items {
        *counts.entry(t).or_default() += 1;
    }
    BoundedMultiset {
        entries: counts
            .into_iter()
            .map(|(t, k)| (t, k.min(c)))
            .filter(|&(_, k)| k > 0)
            .collect(),
    }
}

/// What a colour id stands for.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorStructure {
    /// Round 0: the 1-based indices of the set label bits. Trailing zero
    /// bits do not matter, so graphs of different dimension compare by
    /// predicate truth.
    Base(Vec<usize>),
    Refined {
        prev: ColorId,
        both: BoundedMultiset,
        in_only: BoundedMultiset,
        out_only: BoundedMultiset,
        non_nbr: BoundedMultiset,
    },
}

impl ColorStructure {
    /// The four multiset components in the order both, in-only, out-only,
    /// non-neighbour.
    pub fn multisets(&self) -> Option<[&BoundedMultiset; 4]> {
        match self {
            ColorStructure::Base(_) => None,
            ColorStructure::Refined {
                both,
                in_only,
                out_only,
                non_nbr,
                ..
            } => Some([both, in_only, out_only, non_nbr]),
        }
    }
}

/// Canonical interning of colour structures.
#[derive(Clone, Debug, Default)]
pub struct ColorTable {
    ids: HashMap<ColorStructure, ColorId>,
    structures: Vec<ColorStructure>,
    rounds: Vec<usize>,
}

impl ColorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, s: ColorStructure) -> ColorId {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let round = match &s {
            ColorStructure::Base(_) => 0,
            ColorStructure::Refined { prev, .. } => self.rounds[*prev] + 1,
        };
        let id = self.structures.len();
        self.structures.push(s.clone());
        self.rounds.push(round);
        self.ids.insert(s, id);
        id
    }

    pub fn get(&self, id: ColorId) -> Option<&ColorStructure> {
        self.structures.get(id)
    }

    /// The refinement round a colour belongs to.
    pub fn round(&self, id: ColorId) -> Option<usize> {
        self.rounds.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }
}

fn base_color(g: &Graph, v: Node, table: &mut ColorTable) -> ColorId {
    let bits = g
        .label(v)
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i + 1)
        .collect();
    table.intern(ColorStructure::Base(bits))
}

/// One refinement round: every node's new colour is the interned tuple of
/// its previous colour and the bounded colour multisets over its four
/// neighbourhood cells.
pub fn wl_step(g: &Graph, colors: &[ColorId], c: usize, table: &mut ColorTable) -> Vec<ColorId> {
    assert_eq!(colors.len(), g.num_nodes(), "one colour per node");
    g.nodes()
        .map(|v| {
            let mut cells: [Vec<ColorId>; 4] = Default::default();
            for w in g.nodes().filter(|&w| w != v) {
                let cell = match (g.has_edge(w, v), g.has_edge(v, w)) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                cells[cell].push(colors[w]);
            }
            let [both, in_only, out_only, non_nbr] = cells.map(|cell| bound_multiset(cell, c));
            table.intern(ColorStructure::Refined {
                prev: colors[v],
                both,
                in_only,
                out_only,
                non_nbr,
            })
        })
        .collect()
}

/// Colours of one graph, indexed `[round][node]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColorAssignment {
    pub rounds: Vec<Vec<ColorId>>,
}

impl ColorAssignment {
    /// Class sizes of the partition at `round`, ordered by the smallest
    /// node in each class.
    pub fn partition_sizes(&self, round: usize) -> Vec<usize> {
        let mut order: Vec<ColorId> = Vec::new();
        let mut sizes: HashMap<ColorId, usize> = HashMap::new();
        for &col in &self.rounds[round] {
            let e = sizes.entry(col).or_insert_with(|| {
                order.push(col);
                0
            });
            *e += 1;
        }
        order.iter().map(|c| sizes[c]).collect()
    }

    pub fn num_classes(&self, round: usize) -> usize {
        self.partition_sizes(round).len()
    }
}

/// Result of refining several graphs against one shared table.
#[derive(Clone, Debug)]
pub struct WlRun {
    pub c: usize,
    pub table: ColorTable,
    pub graphs: Vec<ColorAssignment>,
}

impl WlRun {
    pub fn num_rounds(&self) -> usize {
        self.graphs.first().map_or(0, |a| a.rounds.len() - 1)
    }

    pub fn color(&self, graph: usize, round: usize, node: Node) -> Result<ColorId, WlError> {
        let a = self.graphs.get(graph).ok_or(WlError::GraphIndex(graph))?;
        let colors = a.rounds.get(round).ok_or(WlError::RoundOutOfRange {
            requested: round,
            available: a.rounds.len().saturating_sub(1),
        })?;
        colors.get(node).copied().ok_or(WlError::NodeOutOfRange {
            node,
            num_nodes: colors.len(),
        })
    }
}

pub fn run_wl(graphs: &[Graph], c: usize, rounds: usize) -> WlRun {
    let mut table = ColorTable::new();
    let mut out = Vec::with_capacity(graphs.len());
    for g in graphs {
        let mut colors: Vec<ColorId> = g.nodes().map(|v| base_color(g, v, &mut table)).collect();
        let mut history = vec![colors.clone()];
        for _ in 0..rounds {
            colors = wl_step(g, &colors, c, &mut table);
            history.push(colors.clone());
        }
        out.push(ColorAssignment { rounds: history });
    }
    WlRun {
        c,
        table,
        graphs: out,
    }
}

/// The first round whose partition the next round leaves unchanged.
pub fn stable_round(g: &Graph, c: usize) -> usize {
    let mut table = ColorTable::new();
    let mut colors: Vec<ColorId> = g.nodes().map(|v| base_color(g, v, &mut table)).collect();
    let classes = |cs: &[ColorId]| {
        let mut s = cs.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len()
    };
    let mut round = 0;
    loop {
        let next = wl_step(g, &colors, c, &mut table);
        // Each round refines the previous one, so equal class counts mean
        // equal partitions.
        if classes(&next) == classes(&colors) {
            return round;
        }
        colors = next;
        round += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{make_linear_order, make_perturbed_order};

    #[test]
    fn bounding_multisets() {
        assert_eq!(bound_multiset([7, 7, 7, 3], 2).elements(), vec![3, 7, 7]);
        assert!(bound_multiset([], 3).is_empty());
        assert_eq!(bound_multiset([1, 1, 2], 5).elements(), vec![1, 1, 2]);
        assert!(bound_multiset([1, 1, 2], 0).is_empty());
    }

    #[test]
    fn undirected_graphs_have_empty_one_way_cells() {
        let g = Graph::from_edges(3, 0, [(0, 1), (1, 0), (1, 2), (2, 1)]).unwrap();
        let run = run_wl(std::slice::from_ref(&g), 2, 2);
        for id in 0..run.table.len() {
            if let Some(ColorStructure::Refined { in_only, out_only, .. }) = run.table.get(id) {
                assert!(in_only.is_empty() && out_only.is_empty());
            }
        }
    }

    #[test]
    fn isolated_node_sees_only_non_neighbours() {
        let g = Graph::new(3, 0);
        let mut t = ColorTable::new();
        let base: Vec<_> = g.nodes().map(|v| base_color(&g, v, &mut t)).collect();
        let next = wl_step(&g, &base, 5, &mut t);
        match t.get(next[0]).unwrap() {
            ColorStructure::Refined {
                both,
                in_only,
                out_only,
                non_nbr,
                ..
            } => {
                assert!(both.is_empty() && in_only.is_empty() && out_only.is_empty());
                assert_eq!(non_nbr.elements(), vec![base[1], base[2]]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn middle_bands_shrink_by_c() {
        let (g, _) = make_perturbed_order(2, 2).unwrap();
        let run = run_wl(&[g], 2, 2);
        let round1 = &run.graphs[0].rounds[1];
        // Node i is v_{i-5}; v_{-3}..v_3 are ids 2..=8.
        for i in 0..11 {
            assert_eq!(round1[i] == round1[5], (2..=8).contains(&i), "round 1, node {i}");
        }
        let round2 = &run.graphs[0].rounds[2];
        for i in 0..11 {
            assert_eq!(round2[i] == round2[5], (4..=6).contains(&i), "round 2, node {i}");
        }
    }

    #[test]
    fn rounds_zero_on_unlabelled_graph() {
        let g = make_linear_order(4).unwrap();
        let run = run_wl(&[g], 1, 0);
        assert_eq!(run.graphs[0].partition_sizes(0), vec![4]);
    }

    #[test]
    fn stable_rounds() {
        let mut k4 = Graph::new(4, 0);
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    k4.add_edge(u, v).unwrap();
                }
            }
        }
        assert_eq!(stable_round(&k4, 3), 0);
        assert_eq!(stable_round(&Graph::new(1, 0), 1), 0);
        for n in 2..=6 {
            assert_eq!(stable_round(&make_linear_order(n).unwrap(), n), 1, "L{n}");
        }
    }

    #[test]
    fn labels_of_different_width_compare_by_set_bits() {
        let mut a = Graph::new(1, 1);
        a.set_predicate(0, 1, true).unwrap();
        let mut b = Graph::new(1, 3);
        b.set_predicate(0, 1, true).unwrap();
        let run = run_wl(&[a, b], 1, 1);
        assert_eq!(run.graphs[0].rounds, run.graphs[1].rounds);
    }
}
