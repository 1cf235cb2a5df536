//! Local independence graphs for marked point processes.
//!
//! The crate covers the graph side (δ-separation by two independent routes,
//! dynamic Markov statements), a simulator for multivariate counting processes
//! whose intensities respect a given graph, exact likelihood evaluation with
//! its closure factorization, and likelihood-ratio audits of graph-implied
//! local independencies on simulated data.

pub mod graph;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod markov;
pub mod separation;
pub mod sim;

pub use graph::{DynamicGraph, GraphError, MarkId, UndirectedGraph, VertexSet};
pub use separation::{
    active_trail_witness, ancestral_moral_separated, delta_separated_moral, delta_separated_trail, minimal_separators,
    Query, SeparationError, Trail,
};
