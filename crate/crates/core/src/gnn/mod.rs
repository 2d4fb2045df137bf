//! Aggregate-combine-readout GNNs over exact decimal numerals.
//!
//! Layer functions are named combinators rather than closures so a model
//! can be printed, serialised and traced.

mod models;
mod numeral;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, Node};

pub use models::{check_psi, gadlin_classifier, lin_classifier, n2};
pub use numeral::{Numeral, NumeralParseError};

/// Per-node feature vector.
pub type NodeState = Vec<Numeral>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GnnError {
    #[error("layer {layer} expects width {expected}, got {found}")]
    WidthMismatch {
        layer: String,
        expected: usize,
        found: usize,
    },
    #[error("model expects graphs of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Aggregation over a multiset of neighbour states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    /// `[10^|M|]`
    PowTenOfCount,
    /// `[|M|]`
    Count,
    /// `[Σ m[pos]]`
    Sum { pos: usize },
    /// `[10^{Σ m[pos]}]`
    PowTenOfSum { pos: usize },
    /// `[OR of m[value] over m with m[filter] = 1]`
    OrWhere { filter: usize, value: usize },
    /// Concatenation of several aggregates.
    Concat(Vec<Aggregate>),
}

impl Aggregate {
    fn width(&self) -> usize {
        match self {
            Aggregate::Concat(parts) => parts.iter().map(Aggregate::width).sum(),
            _ => 1,
        }
    }

    fn apply(&self, m: &[&NodeState]) -> Vec<Numeral> {
        match self {
            Aggregate::PowTenOfCount => vec![Numeral::pow10(m.len())],
            Aggregate::Count => vec![Numeral::from(m.len() as u64)],
            Aggregate::Sum { pos } => vec![m.iter().fold(Numeral::zero(), |acc, s| acc.add(&s[*pos]))],
            Aggregate::PowTenOfSum { pos } => {
                let total = m.iter().fold(Numeral::zero(), |acc, s| acc.add(&s[*pos]));
                let exp = total.to_usize().expect("exponent fits in memory");
                vec![Numeral::pow10(exp)]
            }
            Aggregate::OrWhere { filter, value } => vec![m
                .iter()
                .filter(|s| s[*filter].is_one())
                .fold(Numeral::zero(), |acc, s| acc.or(&s[*value]))],
            Aggregate::Concat(parts) => parts.iter().flat_map(|p| p.apply(m)).collect(),
        }
    }
}

/// Which neighbour multisets a layer aggregates. Aggregates are
/// concatenated in the order in-neighbours, out-neighbours.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    None,
    /// One aggregate over `N(v) = ←N(v) ∪ →N(v)`.
    Undirected(Aggregate),
    Directed {
        incoming: Option<Aggregate>,
        outgoing: Option<Aggregate>,
    },
}

impl Aggregation {
    fn width(&self) -> usize {
        match self {
            Aggregation::None => 0,
            Aggregation::Undirected(a) => a.width(),
            Aggregation::Directed { incoming, outgoing } => {
                incoming.as_ref().map_or(0, Aggregate::width) + outgoing.as_ref().map_or(0, Aggregate::width)
            }
        }
    }

    fn apply(&self, g: &Graph, states: &[NodeState], v: Node) -> Vec<Numeral> {
        let gather = |ns: &[Node]| ns.iter().map(|&w| &states[w]).collect::<Vec<_>>();
        match self {
            Aggregation::None => Vec::new(),
            Aggregation::Undirected(a) => a.apply(&gather(&g.any_neighbors(v))),
            Aggregation::Directed { incoming, outgoing } => {
                let mut out = Vec::new();
                if let Some(a) = incoming {
                    out.extend(a.apply(&gather(g.in_neighbors(v))));
                }
                if let Some(a) = outgoing {
                    out.extend(a.apply(&gather(g.out_neighbors(v))));
                }
                out
            }
        }
    }
}

/// Global readout over the multiset of all node states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    None,
    /// `1` iff the first components are pairwise different across all
    /// nodes, and every first component `10^n` comes with a second
    /// component `11…1` (`n` ones). Otherwise `0`.
    LinOrderCheck,
    /// `1` iff every state has `1` at `pos`.
    AllOnes { pos: usize },
    /// `1` iff for all `i < j < |P₁|` some state has `10^j` at `pow` and
    /// digit `i` of `or` set, where `|P₁|` counts states with `1` at
    /// `label`.
    PsiCheck { label: usize, pow: usize, or: usize },
    Concat(Vec<Readout>),
}

impl Readout {
    fn width(&self) -> usize {
        match self {
            Readout::None => 0,
            Readout::Concat(parts) => parts.iter().map(Readout::width).sum(),
            _ => 1,
        }
    }

    fn apply(&self, all: &[NodeState]) -> Vec<Numeral> {
        match self {
            Readout::None => Vec::new(),
            Readout::LinOrderCheck => {
                let mut firsts: Vec<&Numeral> = all.iter().map(|s| &s[0]).collect();
                firsts.sort();
                let distinct = firsts.windows(2).all(|w| w[0] != w[1]);
                let sums = all
                    .iter()
                    .all(|s| s[0].as_pow10().is_none_or(|n| s[1].is_repunit(n)));
                vec![Numeral::from_bool(distinct && sums)]
            }
            Readout::AllOnes { pos } => vec![Numeral::from_bool(all.iter().all(|s| s[*pos].is_one()))],
            Readout::PsiCheck { label, pow, or } => {
                let p1 = all.iter().filter(|s| s[*label].is_one()).count();
                let ok = (0..p1).all(|j| {
                    (0..j).all(|i| {
                        all.iter()
                            .any(|s| s[*pow].as_pow10() == Some(j) && s[*or].digit(i) == 1)
                    })
                });
                vec![Numeral::from_bool(ok)]
            }
            Readout::Concat(parts) => parts.iter().flat_map(|p| p.apply(all)).collect(),
        }
    }
}

/// How a node's new state is formed from its own state `w`, the aggregate
/// `a` and the readout `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    Identity,
    /// `a`
    TakeAggregate,
    /// `w ++ a`
    OwnThenAggregate,
    /// `r`
    TakeReadout,
    /// `w` with `w[target] := a[0]` when `w[guard] = 1`.
    WriteAggregateIf { guard: usize, target: usize },
    /// `w` with `r` written from `offset` on.
    WriteReadoutAt { offset: usize },
    /// First gadget layer. From labels `w[0..3]` and the aggregate
    /// `[10^{N₂}, deg, n₁, n₂, n₃]` builds
    /// `w[0..3] ++ [10^{N₂} if P₁ else 0, 0, partition, degrees, 0]`, where
    /// `partition` says exactly one label bit is set and `degrees` is the
    /// local degree constraint on `P₁`, `P₂` and `P₃` nodes.
    GadgetLocal,
}

impl Combine {
    fn width(&self, input: usize, agg: usize, read: usize) -> usize {
        match self {
            Combine::Identity | Combine::WriteAggregateIf { .. } => input,
            Combine::TakeAggregate => agg,
            Combine::OwnThenAggregate => input + agg,
            Combine::TakeReadout => read,
            Combine::WriteReadoutAt { offset } => input.max(offset + read),
            Combine::GadgetLocal => 8,
        }
    }

    fn apply(&self, w: &NodeState, a: &[Numeral], r: &[Numeral]) -> NodeState {
        match self {
            Combine::Identity => w.clone(),
            Combine::TakeAggregate => a.to_vec(),
            Combine::OwnThenAggregate => w.iter().chain(a).cloned().collect(),
            Combine::TakeReadout => r.to_vec(),
            Combine::WriteAggregateIf { guard, target } => {
                let mut out = w.clone();
                if w[*guard].is_one() {
                    out[*target] = a[0].clone();
                }
                out
            }
            Combine::WriteReadoutAt { offset } => {
                let mut out = w.clone();
                out.resize(out.len().max(offset + r.len()), Numeral::zero());
                out[*offset..offset + r.len()].clone_from_slice(r);
                out
            }
            Combine::GadgetLocal => {
                let (p1, p2, p3) = (w[0].is_one(), w[1].is_one(), w[2].is_one());
                let deg = a[1].to_usize();
                let (n1, n2, n3) = (a[2].to_usize(), a[3].to_usize(), a[4].to_usize());
                let partition = [p1, p2, p3].iter().filter(|&&b| b).count() == 1;
                let degrees = (!p1 || n1 == Some(0))
                    && (!p2 || (deg == Some(2) && n1 == Some(1) && n3 == Some(1)))
                    && (!p3 || (deg == Some(2) && n1 == Some(1) && n2 == Some(1)));
                let mut out = w[..3].to_vec();
                out.push(if p1 { a[0].clone() } else { Numeral::zero() });
                out.push(Numeral::zero());
                out.push(Numeral::from_bool(partition));
                out.push(Numeral::from_bool(degrees));
                out.push(Numeral::zero());
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnnLayer {
    pub name: String,
    pub input_width: usize,
    pub aggregation: Aggregation,
    pub combine: Combine,
    pub readout: Readout,
}

impl GnnLayer {
    pub fn identity(width: usize) -> Self {
        GnnLayer {
            name: "identity".into(),
            input_width: width,
            aggregation: Aggregation::None,
            combine: Combine::Identity,
            readout: Readout::None,
        }
    }

    pub fn output_width(&self) -> usize {
        self.combine
            .width(self.input_width, self.aggregation.width(), self.readout.width())
    }
}

/// Final per-node decision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classify {
    /// `state = (1)`.
    IsOne,
    /// Every listed position holds `1`.
    OnesAt(Vec<usize>),
}

impl Classify {
    pub fn apply(&self, s: &NodeState) -> bool {
        match self {
            Classify::IsOne => s.len() == 1 && s[0].is_one(),
            Classify::OnesAt(ps) => ps.iter().all(|&p| s[p].is_one()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnnClassifier {
    pub name: String,
    /// Label width of accepted graphs; the initial state is the label.
    pub dimension: usize,
    pub layers: Vec<GnnLayer>,
    pub cls: Classify,
}

/// Node labels as 0/1 numerals.
pub fn initial_states(g: &Graph) -> Vec<NodeState> {
    g.nodes()
        .map(|v| g.label(v).iter().map(|&b| Numeral::from_bool(b)).collect())
        .collect()
}

/// Simultaneous update of every node from the previous states.
pub fn apply_layer(g: &Graph, states: &[NodeState], layer: &GnnLayer) -> Result<Vec<NodeState>, GnnError> {
    if let Some(bad) = states.iter().find(|s| s.len() != layer.input_width) {
        return Err(GnnError::WidthMismatch {
            layer: layer.name.clone(),
            expected: layer.input_width,
            found: bad.len(),
        });
    }
    let read = layer.readout.apply(states);
    Ok(g.nodes()
        .map(|v| {
            let agg = layer.aggregation.apply(g, states, v);
            layer.combine.apply(&states[v], &agg, &read)
        })
        .collect())
}

/// States before the first layer and after every layer.
pub fn trace(g: &Graph, model: &GnnClassifier) -> Result<Vec<Vec<NodeState>>, GnnError> {
    if g.dimension() != model.dimension {
        return Err(GnnError::DimensionMismatch {
            expected: model.dimension,
            found: g.dimension(),
        });
    }
    let mut states = initial_states(g);
    let mut out = vec![states.clone()];
    for layer in &model.layers {
        states = apply_layer(g, &states, layer)?;
        out.push(states.clone());
    }
    Ok(out)
}

pub fn run_classifier(g: &Graph, model: &GnnClassifier) -> Result<Vec<bool>, GnnError> {
    let states = trace(g, model)?.pop().expect("initial states");
    Ok(states.iter().map(|s| model.cls.apply(s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::make_linear_order;

    #[test]
    fn identity_layer() {
        let g = make_linear_order(3).unwrap();
        let states = vec![vec![Numeral::from(4)], vec![Numeral::from(5)], vec![Numeral::zero()]];
        assert_eq!(apply_layer(&g, &states, &GnnLayer::identity(1)).unwrap(), states);
    }

    #[test]
    fn width_mismatch() {
        let g = make_linear_order(2).unwrap();
        let states = vec![vec![], vec![]];
        assert!(matches!(
            apply_layer(&g, &states, &GnnLayer::identity(1)),
            Err(GnnError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn declared_widths_chain() {
        for model in [lin_classifier(), gadlin_classifier()] {
            let mut width = model.dimension;
            for layer in &model.layers {
                assert_eq!(layer.input_width, width, "{}", layer.name);
                width = layer.output_width();
            }
        }
    }

    #[test]
    fn models_serialise() {
        let text = serde_json::to_string(&gadlin_classifier()).unwrap();
        let back: GnnClassifier = serde_json::from_str(&text).unwrap();
        assert_eq!(back, gadlin_classifier());
    }
}
