//! The two hand-built classifiers and the direct `ψ` check.

use std::collections::HashSet;

use super::{Aggregate, Aggregation, Classify, Combine, GnnClassifier, GnnLayer, Readout};
use crate::graph::{Graph, Node};

/// Directed model over unlabelled digraphs accepting exactly the strict
/// linear orders.
pub fn lin_classifier() -> GnnClassifier {
    GnnClassifier {
        name: "lin".into(),
        dimension: 0,
        layers: vec![
            GnnLayer {
                name: "pow10_indegree".into(),
                input_width: 0,
                aggregation: Aggregation::Directed {
                    incoming: Some(Aggregate::PowTenOfCount),
                    outgoing: None,
                },
                combine: Combine::TakeAggregate,
                readout: Readout::None,
            },
            GnnLayer {
                name: "sum_incoming".into(),
                input_width: 1,
                aggregation: Aggregation::Directed {
                    incoming: Some(Aggregate::Sum { pos: 0 }),
                    outgoing: None,
                },
                combine: Combine::OwnThenAggregate,
                readout: Readout::None,
            },
            GnnLayer {
                name: "order_check".into(),
                input_width: 2,
                aggregation: Aggregation::None,
                combine: Combine::TakeReadout,
                readout: Readout::LinOrderCheck,
            },
        ],
        cls: Classify::IsOne,
    }
}

/// Undirected model over three-labelled graphs accepting exactly the
/// gadgetised strict linear orders.
///
/// State layout: `0..3` labels, `3` holds `10^{N₂}` on `P₁` nodes, `4` the
/// propagated OR, `5..8` the verdicts of the partition check, the local
/// degree check and `ψ`.
pub fn gadlin_classifier() -> GnnClassifier {
    let or_step = |name: &str, filter: usize, value: usize, guard: usize| GnnLayer {
        name: name.into(),
        input_width: 8,
        aggregation: Aggregation::Undirected(Aggregate::OrWhere { filter, value }),
        combine: Combine::WriteAggregateIf { guard, target: 4 },
        readout: Readout::None,
    };
    GnnClassifier {
        name: "gadlin".into(),
        dimension: 3,
        layers: vec![
            GnnLayer {
                name: "local_counts".into(),
                input_width: 3,
                aggregation: Aggregation::Undirected(Aggregate::Concat(vec![
                    Aggregate::PowTenOfSum { pos: 1 },
                    Aggregate::Count,
                    Aggregate::Sum { pos: 0 },
                    Aggregate::Sum { pos: 1 },
                    Aggregate::Sum { pos: 2 },
                ])),
                combine: Combine::GadgetLocal,
                readout: Readout::None,
            },
            or_step("or_p1_to_p3", 0, 3, 2),
            or_step("or_p3_to_p2", 2, 4, 1),
            or_step("or_p2_to_p1", 1, 4, 0),
            GnnLayer {
                name: "global_checks".into(),
                input_width: 8,
                aggregation: Aggregation::None,
                combine: Combine::WriteReadoutAt { offset: 5 },
                readout: Readout::Concat(vec![
                    Readout::AllOnes { pos: 5 },
                    Readout::AllOnes { pos: 6 },
                    Readout::PsiCheck { label: 0, pow: 3, or: 4 },
                ]),
            },
        ],
        cls: Classify::OnesAt(vec![5, 6, 7]),
    }
}

/// Number of `P₂`-labelled neighbours.
pub fn n2(g: &Graph, v: Node) -> usize {
    g.any_neighbors(v).into_iter().filter(|&w| g.predicate(2, w)).count()
}

/// For all `i < j < |P₁|` some gadgetised edge `u–P₂–P₃–w` joins `P₁`
/// nodes with `N₂(u) = j` and `N₂(w) = i`.
pub fn check_psi(g: &Graph) -> bool {
    let p1: Vec<Node> = g.nodes().filter(|&v| g.predicate(1, v)).collect();
    let mut pairs = HashSet::new();
    for &u in &p1 {
        for a in g.any_neighbors(u).into_iter().filter(|&a| g.predicate(2, a)) {
            for b in g.any_neighbors(a).into_iter().filter(|&b| g.predicate(3, b)) {
                for w in g.any_neighbors(b).into_iter().filter(|&w| g.predicate(1, w)) {
                    pairs.insert((n2(g, u), n2(g, w)));
                }
            }
        }
    }
    (0..p1.len()).all(|j| (0..j).all(|i| pairs.contains(&(j, i))))
}
