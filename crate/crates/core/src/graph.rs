//! Finite simple node-labelled digraphs.
//!
//! Undirected graphs are digraphs with a symmetric edge relation. Nodes are
//! dense ids `0..num_nodes`; every node carries a bit vector of length
//! `dimension`, and predicate `P_i` (1-indexed) reads bit `i - 1`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Node = usize;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {node} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { node: Node, num_nodes: usize },
    #[error("loop at node {0}: simple graphs have no edge (v, v)")]
    Loop(Node),
    #[error("label of node {node} has {found} bits, expected {expected}")]
    LabelWidth {
        node: Node,
        expected: usize,
        found: usize,
    },
    #[error("label bit {bit} of node {node} is not 0 or 1")]
    LabelBit { node: Node, bit: u8 },
    #[error("predicate index {index} out of range for dimension {dimension}")]
    PredicateOutOfRange { index: usize, dimension: usize },
    #[error("expected {expected} label rows, found {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("malformed graph JSON: {0}")]
    Json(String),
}

/// Which part of a node's surroundings to return from [`Graph::neighbors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodKind {
    /// Sources of edges into `v`.
    In,
    /// Targets of edges out of `v`.
    Out,
    /// `In ∪ Out`.
    Any,
    /// `In ∩ Out`.
    Both,
    /// `In ∖ Out`.
    InOnly,
    /// `Out ∖ In`.
    OutOnly,
    /// Every node other than `v` with no edge to or from `v`.
    NonNeighbor,
}

impl NeighborhoodKind {
    pub const ALL: [NeighborhoodKind; 7] = [
        NeighborhoodKind::In,
        NeighborhoodKind::Out,
        NeighborhoodKind::Any,
        NeighborhoodKind::Both,
        NeighborhoodKind::InOnly,
        NeighborhoodKind::OutOnly,
        NeighborhoodKind::NonNeighbor,
    ];
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    num_nodes: usize,
    dimension: usize,
    labels: Vec<Vec<bool>>,
    adjacency: Vec<bool>,
    out_lists: Vec<Vec<Node>>,
    in_lists: Vec<Vec<Node>>,
}

impl Graph {
    /// A graph with no edges and all labels zero.
    pub fn new(num_nodes: usize, dimension: usize) -> Self {
        Graph {
            num_nodes,
            dimension,
            labels: vec![vec![false; dimension]; num_nodes],
            adjacency: vec![false; num_nodes * num_nodes],
            out_lists: vec![Vec::new(); num_nodes],
            in_lists: vec![Vec::new(); num_nodes],
        }
    }

    pub fn from_edges(
        num_nodes: usize,
        dimension: usize,
        edges: impl IntoIterator<Item = (Node, Node)>,
    ) -> Result<Self, GraphError> {
        let mut g = Graph::new(num_nodes, dimension);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nodes(&self) -> std::ops::Range<Node> {
        0..self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.out_lists.iter().map(Vec::len).sum()
    }

    fn check(&self, v: Node) -> Result<(), GraphError> {
        if v < self.num_nodes {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node: v,
                num_nodes: self.num_nodes,
            })
        }
    }

    /// Inserts the ordered pair `(u, v)`. Adding an existing edge is a no-op.
    pub fn add_edge(&mut self, u: Node, v: Node) -> Result<(), GraphError> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(GraphError::Loop(u));
        }
        let slot = u * self.num_nodes + v;
        if !self.adjacency[slot] {
            self.adjacency[slot] = true;
            insert_sorted(&mut self.out_lists[u], v);
            insert_sorted(&mut self.in_lists[v], u);
        }
        Ok(())
    }

    /// Inserts both `(u, v)` and `(v, u)`.
    pub fn add_undirected_edge(&mut self, u: Node, v: Node) -> Result<(), GraphError> {
        self.add_edge(u, v)?;
        self.add_edge(v, u)
    }

    /// Removes the ordered pair `(u, v)` if present.
    pub fn remove_edge(&mut self, u: Node, v: Node) -> Result<(), GraphError> {
        self.check(u)?;
        self.check(v)?;
        let slot = u * self.num_nodes + v;
        if self.adjacency[slot] {
            self.adjacency[slot] = false;
            self.out_lists[u].retain(|&w| w != v);
            self.in_lists[v].retain(|&w| w != u);
        }
        Ok(())
    }

    pub fn set_label(&mut self, v: Node, label: Vec<bool>) -> Result<(), GraphError> {
        self.check(v)?;
        if label.len() != self.dimension {
            return Err(GraphError::LabelWidth {
                node: v,
                expected: self.dimension,
                found: label.len(),
            });
        }
        self.labels[v] = label;
        Ok(())
    }

    /// Sets bit `index - 1` of `v`'s label, i.e. predicate `P_index`.
    pub fn set_predicate(&mut self, v: Node, index: usize, value: bool) -> Result<(), GraphError> {
        self.check(v)?;
        if index == 0 || index > self.dimension {
            return Err(GraphError::PredicateOutOfRange {
                index,
                dimension: self.dimension,
            });
        }
        self.labels[v][index - 1] = value;
        Ok(())
    }

    #[inline]
    pub fn has_edge(&self, u: Node, v: Node) -> bool {
        self.adjacency[u * self.num_nodes + v]
    }

    pub fn label(&self, v: Node) -> &[bool] {
        &self.labels[v]
    }

    /// Truth of `P_index(v)`; indices past the dimension read as false.
    #[inline]
    pub fn predicate(&self, index: usize, v: Node) -> bool {
        index >= 1 && index <= self.dimension && self.labels[v][index - 1]
    }

    pub fn out_neighbors(&self, v: Node) -> &[Node] {
        &self.out_lists[v]
    }

    pub fn in_neighbors(&self, v: Node) -> &[Node] {
        &self.in_lists[v]
    }

    pub fn out_degree(&self, v: Node) -> usize {
        self.out_lists[v].len()
    }

    pub fn in_degree(&self, v: Node) -> usize {
        self.in_lists[v].len()
    }

    /// All ordered edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        self.out_lists
            .iter()
            .enumerate()
            .flat_map(|(u, outs)| outs.iter().map(move |&v| (u, v)))
    }

    /// The requested neighbourhood of `v` in ascending node order.
    pub fn neighbors(&self, v: Node, kind: NeighborhoodKind) -> Result<Vec<Node>, GraphError> {
        self.check(v)?;
        let out = match kind {
            NeighborhoodKind::In => self.in_lists[v].clone(),
            NeighborhoodKind::Out => self.out_lists[v].clone(),
            _ => self
                .nodes()
                .filter(|&w| {
                    let fwd = self.has_edge(v, w);
                    let bwd = self.has_edge(w, v);
                    match kind {
                        NeighborhoodKind::Any => fwd || bwd,
                        NeighborhoodKind::Both => fwd && bwd,
                        NeighborhoodKind::InOnly => bwd && !fwd,
                        NeighborhoodKind::OutOnly => fwd && !bwd,
                        NeighborhoodKind::NonNeighbor => w != v && !fwd && !bwd,
                        NeighborhoodKind::In | NeighborhoodKind::Out => unreachable!(),
                    }
                })
                .collect(),
        };
        Ok(out)
    }

    /// Neighbours of `v` in either direction, ascending.
    pub fn any_neighbors(&self, v: Node) -> Vec<Node> {
        self.nodes()
            .filter(|&w| self.has_edge(v, w) || self.has_edge(w, v))
            .collect()
    }

    pub fn is_undirected(&self) -> bool {
        self.edges().all(|(u, v)| self.has_edge(v, u))
    }

    fn is_total(&self) -> bool {
        self.nodes().all(|x| {
            self.nodes()
                .all(|y| x == y || self.has_edge(x, y) || self.has_edge(y, x))
        })
    }

    /// Irreflexive, total and transitive, checked directly from the
    /// first-order definitions.
    pub fn is_strict_linear_order(&self) -> bool {
        if !self.is_total() {
            return false;
        }
        // E(x,y) ∧ E(y,z) → E(x,z); x = z is covered since (x,x) is never an edge.
        self.edges().all(|(x, y)| {
            self.out_lists[y]
                .iter()
                .all(|&z| self.has_edge(x, z))
        })
    }

    /// Irreflexive, total, and every node has a different number of successors.
    pub fn is_strict_linear_order_alt(&self) -> bool {
        if !self.is_total() {
            return false;
        }
        let mut seen = vec![false; self.num_nodes];
        self.nodes().all(|v| {
            let d = self.out_degree(v);
            // distinct out-degrees among n nodes are a permutation of 0..n
            d < self.num_nodes && !std::mem::replace(&mut seen[d], true)
        })
    }

    /// Relabels nodes: node `v` of `self` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[Node]) -> Graph {
        assert_eq!(perm.len(), self.num_nodes, "permutation length");
        let mut g = Graph::new(self.num_nodes, self.dimension);
        for v in self.nodes() {
            g.labels[perm[v]] = self.labels[v].clone();
        }
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]).expect("permutation preserves simplicity");
        }
        g
    }

    pub fn to_json_value(&self) -> GraphJson {
        let directed = !self.is_undirected();
        let edges = self
            .edges()
            .filter(|&(u, v)| directed || u < v)
            .map(|(u, v)| [u, v])
            .collect();
        GraphJson {
            directed,
            dimension: self.dimension,
            num_nodes: self.num_nodes,
            labels: self
                .labels
                .iter()
                .map(|l| l.iter().map(|&b| b as u8).collect())
                .collect(),
            edges,
        }
    }

    /// Canonical compact JSON. Symmetric edge sets are written as undirected.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("graph JSON serialises")
    }

    pub fn from_json(text: &str) -> Result<Graph, GraphError> {
        let raw: GraphJson =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        Graph::try_from(raw)
    }
}

fn insert_sorted(list: &mut Vec<Node>, v: Node) {
    if let Err(pos) = list.binary_search(&v) {
        list.insert(pos, v);
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph{}", self.to_json())
    }
}

/// On-disk graph format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub directed: bool,
    pub dimension: usize,
    pub num_nodes: usize,
    pub labels: Vec<Vec<u8>>,
    pub edges: Vec<[Node; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = GraphError;

    fn try_from(raw: GraphJson) -> Result<Graph, GraphError> {
        if raw.labels.len() != raw.num_nodes {
            return Err(GraphError::LabelCount {
                expected: raw.num_nodes,
                found: raw.labels.len(),
            });
        }
        let mut g = Graph::new(raw.num_nodes, raw.dimension);
        for (v, row) in raw.labels.into_iter().enumerate() {
            let bits = row
                .into_iter()
                .map(|b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    bit => Err(GraphError::LabelBit { node: v, bit }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            g.set_label(v, bits)?;
        }
        for [u, v] in raw.edges {
            if raw.directed {
                g.add_edge(u, v)?;
            } else {
                g.add_undirected_edge(u, v)?;
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(n: usize) -> Graph {
        Graph::from_edges(n, 0, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).unwrap()
    }

    #[test]
    fn in_neighbourhood_of_linear_order() {
        let g = order(4);
        assert!(g.neighbors(0, NeighborhoodKind::In).unwrap().is_empty());
        assert_eq!(g.neighbors(3, NeighborhoodKind::In).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn out_of_range_node_is_rejected() {
        let g = order(3);
        assert_eq!(
            g.neighbors(3, NeighborhoodKind::Any),
            Err(GraphError::NodeOutOfRange { node: 3, num_nodes: 3 })
        );
    }

    #[test]
    fn loops_are_rejected() {
        let mut g = Graph::new(2, 0);
        assert_eq!(g.add_edge(1, 1), Err(GraphError::Loop(1)));
    }

    #[test]
    fn neighbourhood_cells_partition_nodes() {
        let g = Graph::from_edges(5, 0, [(0, 1), (1, 0), (0, 2), (3, 0), (2, 4)]).unwrap();
        for v in g.nodes() {
            let mut all: Vec<Node> = [
                NeighborhoodKind::Both,
                NeighborhoodKind::InOnly,
                NeighborhoodKind::OutOnly,
                NeighborhoodKind::NonNeighbor,
            ]
            .iter()
            .flat_map(|&k| g.neighbors(v, k).unwrap())
            .collect();
            all.push(v);
            all.sort_unstable();
            assert_eq!(all, (0..5).collect::<Vec<_>>());
        }
        assert_eq!(g.neighbors(0, NeighborhoodKind::Both).unwrap(), vec![1]);
        assert_eq!(g.neighbors(0, NeighborhoodKind::InOnly).unwrap(), vec![3]);
        assert_eq!(g.neighbors(0, NeighborhoodKind::OutOnly).unwrap(), vec![2]);
        assert_eq!(g.neighbors(0, NeighborhoodKind::NonNeighbor).unwrap(), vec![4]);
    }

    #[test]
    fn undirectedness() {
        assert!(Graph::new(3, 0).is_undirected());
        assert!(!order(4).is_undirected());
        let mut g = Graph::new(3, 1);
        g.add_undirected_edge(0, 2).unwrap();
        assert!(g.is_undirected());
    }

    #[test]
    fn linear_order_predicates() {
        assert!(Graph::new(1, 0).is_strict_linear_order());
        assert!(Graph::new(1, 0).is_strict_linear_order_alt());
        assert!(order(5).is_strict_linear_order());
        assert!(order(5).is_strict_linear_order_alt());
        let cycle = Graph::from_edges(3, 0, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(!cycle.is_strict_linear_order());
        assert!(!cycle.is_strict_linear_order_alt());
        assert!(!Graph::new(2, 0).is_strict_linear_order_alt());
        assert!(!Graph::new(2, 0).is_strict_linear_order());
    }

    #[test]
    fn predicates_past_dimension_are_false() {
        let mut g = Graph::new(2, 1);
        g.set_predicate(1, 1, true).unwrap();
        assert!(g.predicate(1, 1));
        assert!(!g.predicate(2, 1));
        assert!(!g.predicate(0, 1));
        assert!(g.set_predicate(0, 2, true).is_err());
    }

    #[test]
    fn json_undirected_expands_pairs() {
        let text = r#"{"directed":false,"dimension":1,"num_nodes":3,"labels":[[1],[0],[0]],"edges":[[0,1],[1,2]]}"#;
        let g = Graph::from_json(text).unwrap();
        assert!(g.has_edge(1, 0) && g.has_edge(0, 1) && g.has_edge(2, 1));
        assert_eq!(g.to_json(), text);
    }

    #[test]
    fn json_rejects_bad_bits() {
        let text = r#"{"directed":true,"dimension":1,"num_nodes":1,"labels":[[2]],"edges":[]}"#;
        assert_eq!(
            Graph::from_json(text),
            Err(GraphError::LabelBit { node: 0, bit: 2 })
        );
    }
}
