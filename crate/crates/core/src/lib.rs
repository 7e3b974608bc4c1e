//! Finite ultrametric spaces and their isometric embeddings.
//!
//! The crate builds the nested ball partition of a finite ultrametric space
//! ([`tree::build_tree`]), turns it into explicit sparse coordinates in `l_p`
//! for any `p >= 1` or in `c_0` ([`embed`]), and provides the tools around it:
//! distortion of point maps, the subdominant ultrametric of an arbitrary
//! finite metric ([`distortion`]), subset search for large pieces of a metric
//! space that are close to ultrametric ([`dvoretzky`]), and seeded generators
//! of test spaces ([`gen`]).
//!
//! Everything here is pure computation over `alloc` collections, so the crate
//! is `no_std`. File formats and the command line live in the `umetric` crate.

#![no_std]

extern crate alloc;

pub mod distortion;
pub mod dvoretzky;
pub mod embed;
mod error;
pub mod gen;
pub mod metric;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod rng;
pub mod tree;

pub use distortion::{
    map_distortion, subdominant_ultrametric, ultrametric_distortion, DistortionReport, PointMap,
    UltrametricFit,
};
pub use dvoretzky::{
    best_subset_exact, best_subset_greedy, wn_experiment, Bound, ExperimentRecord, GreedyStrategy,
    SearchMethod, SubsetCertificate,
};
pub use embed::{
    embed_c0, embed_lp, extend_check, isometry_check, EmbeddingTarget, IsometryCheck,
    SparseEmbedding,
};
pub use error::{Error, Result};
pub use gen::{generate, GenKind, GenSpec};
pub use metric::{validate, FiniteMetricSpace, Tolerance, ValidationReport, Violation};
pub use tree::{build_tree, closed_ball, BallNode, BallTree, NodeId};
