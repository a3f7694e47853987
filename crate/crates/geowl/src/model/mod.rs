//! Continuous tuple-representation model over raw distances.
//!
//! Three message-passing variants mirror the discrete tuple refinements:
//! `plain` aggregates per-position neighbor multisets, `f` aggregates
//! ordered replacement vectors per candidate node, `e` additionally
//! maintains a per-round edge state pooled from all tuples incident to the
//! edge. Multisets are realized as sums of an elementwise two-layer map, so
//! every readout is permutation invariant by construction; all inputs enter
//! through distances and labels, so scalars are E(3) invariant.
//!
//! There is no training here: weights are drawn deterministically from a
//! seed, which is what the invariance / separation property tests need.

mod forward;
mod weights;

pub use forward::{Model, TupleReps};

use crate::geometry::PointCloud;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("tuple order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("refusing a forward pass over {n}^{k} tuples (cap {cap})")]
    TooManyTuples { n: usize, k: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    F,
    E,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::F => "f",
            Variant::E => "e",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plain" => Ok(Variant::Plain),
            "f" => Ok(Variant::F),
            "e" => Ok(Variant::E),
            other => Err(format!("unknown variant '{other}'")),
        }
    }
}

/// The fixed smooth nonlinearity; recorded in the config so outputs are
/// reproducible from it alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

impl Activation {
    pub fn apply(self, xs: &mut [f64]) {
        match self {
            Activation::Tanh => {
                for x in xs {
                    *x = x.tanh();
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub k: usize,
    /// Message-passing rounds T.
    pub rounds: usize,
    /// Tuple representation width K.
    pub hidden_dim: usize,
    /// Distance expansion width H_e.
    pub rbf_dim: usize,
    /// Label embedding width H_z.
    pub label_embed_dim: usize,
    pub seed: u64,
    pub activation: Activation,
    #[serde(default = "default_cap")]
    pub tuple_cap: usize,
}

fn default_cap() -> usize {
    crate::wl::DEFAULT_TUPLE_CAP
}

impl ModelConfig {
    pub fn new(variant: Variant, k: usize, rounds: usize, seed: u64) -> Self {
        ModelConfig {
            variant,
            k,
            rounds,
            hidden_dim: 32,
            rbf_dim: 16,
            label_embed_dim: 8,
            seed,
            activation: Activation::Tanh,
            tuple_cap: default_cap(),
        }
    }
}

/// Radial basis coefficients: component j of the expansion of distance d is
/// `exp(-beta_j (exp(-d) - mu_j)^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfParams {
    pub betas: Vec<f64>,
    pub mus: Vec<f64>,
}

impl RbfParams {
    /// Fixed coefficients: common beta 10, centers equally spaced in (0, 1].
    pub fn standard(dim: usize) -> RbfParams {
        RbfParams {
            betas: vec![10.0; dim],
            mus: (1..=dim).map(|j| j as f64 / dim as f64).collect(),
        }
    }
}

pub fn rbf_expand(d: f64, p: &RbfParams) -> Vec<f64> {
    debug_assert_eq!(p.betas.len(), p.mus.len());
    let e = (-d).exp();
    p.betas
        .iter()
        .zip(p.mus.iter())
        .map(|(&beta, &mu)| (-beta * (e - mu) * (e - mu)).exp())
        .collect()
}

#[derive(Debug, Clone)]
pub struct ModelOutput {
    pub tuple_reps: TupleReps,
    pub scalar: f64,
    pub node_reps: Vec<Vec<f64>>,
    pub equivariant: [f64; 3],
}

/// Full deterministic forward pass.
pub fn forward(pc: &PointCloud, cfg: &ModelConfig) -> Result<ModelOutput, ModelError> {
    Model::new(cfg.clone())?.forward(pc)
}
