//! Dynamic `(1-eps)`-approximate maximum weight matching by weight
//! reduction: overlapping padded weight classes solved independently,
//! aggregated by locally greedy census matchings and a degree-two
//! dynamic solver, with a generic low-recourse transformation and a
//! bipartite weighted-to-unweighted unfolding on top.
//!
//! Everything is verified at desk scale against exact brute-force
//! oracles with exact rational arithmetic.

pub mod adversarial;
pub mod census;
pub mod composer;
pub mod degree_two;
pub mod framework;
pub mod graph;
pub mod intervals;
pub mod low_degree;
pub mod low_recourse;
pub mod matching;
pub mod oracle;
pub mod report;
pub mod runner;
pub mod solver;
pub mod trace;
pub mod unfold;
pub mod weight;

pub use graph::{DynamicGraph, EdgeId, UpdateEvent, UpdateKind, VertexId, WeightedEdge};
pub use matching::Matching;
pub use weight::Rat;
