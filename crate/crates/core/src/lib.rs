//! Bounded Weisfeiler-Leman refinement, counting-logic model checking and
//! exact aggregate-combine-readout GNNs over finite labelled digraphs.

pub mod corpus;
pub mod experiment;
pub mod gnn;
pub mod graph;
pub mod logic;
pub mod wl;

pub use graph::{Graph, GraphError, NeighborhoodKind, Node};
