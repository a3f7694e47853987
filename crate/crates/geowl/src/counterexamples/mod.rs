//! Counterexample generators and verifiers.
//!
//! All generators produce pairs of point clouds that are non-congruent yet
//! indistinguishable by node-level distance refinement ([`crate::wl::Method::Wl1e`]).
//! The fixed pairs live on single regular polyhedra; the parametric pairs
//! combine two polyhedra with a free relative scale; and the augmentation
//! operator stacks concentric scaled layers of a fixed pair into an infinite
//! family.

mod augment;
mod families;
mod polyhedra;
pub mod search;
mod verify;

pub use augment::{
    all_layer_pair, augment_pair, complementary_labels, union_label_state, verify_stable_state,
    ComplementaryLabels, LabelState, LayerSpec, LayerType,
};
pub use families::{
    cube_octahedron_pair, dodecahedron_pair, figure2_pair, BaseFamily, CounterexamplePair,
    CubeOctaVariant, DodecVariant, KindSpec, two_cubes_pair,
};
pub use polyhedra::{polyhedron, Polyhedron, PolyhedronKind};
pub use verify::{verify_counterexample, VerificationReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("layer radii must be pairwise distinct (radius {0} repeats)")]
    DuplicateRadius(f64),
    #[error("at least one layer must be of type ori or com")]
    AllLayersAll,
    #[error("augmentation spec must contain at least one layer")]
    EmptySpec,
    #[error("'{0}' is not a fixed-polyhedron base family")]
    NotBaseFamily(String),
}
