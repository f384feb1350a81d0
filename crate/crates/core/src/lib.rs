//! k-means clustering in the metric space of attributed graphs.
//!
//! Graphs are compared with the graph metric `D(X, Y)`, the smallest
//! Euclidean distance between their vector representations over all
//! vertex permutations. Centroids are structural sample means computed by
//! the incremental arithmetic mean. Elkan's triangle-inequality pruning
//! carries over unchanged because `D` is a metric, and every graph distance
//! is counted so the two k-means variants can be compared by matchings.

pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod matcher;
pub mod mean;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{AttributeSpace, AttributedGraph, GraphBuilder, Permutation, Representation};
pub use matcher::{Alignment, DistanceOracle, Matcher};
