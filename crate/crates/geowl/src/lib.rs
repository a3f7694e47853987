//! Distance-based color refinement for labeled 3D point clouds.
//!
//! This crate decides geometric (in)distinguishability of point clouds under
//! a family of distance-graph Weisfeiler-Leman refinements (node-level with
//! edge weights, tuple-level `k`-WL / folklore `k`-FWL, and an edge-enhanced
//! `k`-E-WL), provides an exact permutation-search congruence oracle over
//! distance matrices, generates the regular-polyhedron counterexample
//! families that separate those tests, and runs a deterministic continuous
//! message-passing model whose invariance and separation properties mirror
//! the discrete refinements.
//!
//! The main entry points:
//!
//! - [`geometry`]: point clouds, E(3) actions, distance quantization and the
//!   brute-force congruence oracle.
//! - [`wl`]: the refinement engine and pairwise distinguishability verdicts.
//! - [`counterexamples`]: generators and verifiers for the polyhedral
//!   counterexample corpus, including the concentric-layer augmentation
//!   operator.
//! - [`model`]: the continuous tuple-representation model (plain / folklore /
//!   edge-enhanced variants) with scalar, node-level and equivariant heads.
//! - [`io`]: XYZ file round-tripping and deterministic JSON reports.

pub mod counterexamples;
pub mod geometry;
pub mod io;
pub mod model;
pub mod wl;

pub use geometry::{
    apply_e3, build_point_cloud, canonicalize_distances, center_coordinates,
    congruent_bruteforce, distance_matrix, random_e3, CongruenceVerdict, E3Transform, PointCloud,
    QuantizedDistanceMatrix,
};
pub use wl::{distinguish, refine, Method, RefinementConfig, RefinementResult, Rounds, Verdict};

/// Default absolute tolerance for treating two distances as equal.
///
/// Generators emit coordinates at unit circumradius, so an absolute
/// tolerance is meaningful; closed-form algebraic coordinates leave several
/// orders of magnitude of headroom above double-precision noise.
pub const DEFAULT_TAU: f64 = 1e-9;
