//! Color refinement over quantized distance graphs.
//!
//! Five refinement methods share one engine: node-level refinement on the
//! unweighted complete graph ([`Method::Wl1`]), node-level refinement where
//! every neighbor contributes its color together with the connecting
//! distance class ([`Method::Wl1e`]), and three tuple-level refinements over
//! all `n^k` ordered tuples ([`Method::KWl`], [`Method::KFwl`],
//! [`Method::KEwl`]).
//!
//! Hashing is realized by interning structural signatures (sorted multisets
//! and ordered vectors of prior color ids) into a dictionary shared across
//! all clouds of one run, which gives exact injectivity and reproducible
//! verdicts. Two clouds are distinguished iff some round's color histograms
//! differ.

mod engine;

pub(crate) use engine::{build_graphs, run_multi, DistGraph, MultiRun};

use crate::geometry::{PointCloud, QuantizedDistanceMatrix};
use crate::DEFAULT_TAU;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{method:?} requires k >= 2, got {k}")]
    OrderTooSmall { method: Method, k: usize },
    #[error("refusing to refine {n}^{k} tuples (cap {cap}); raise the cap to override")]
    TooManyTuples { n: usize, k: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classic node refinement; every node is adjacent to every other.
    Wl1,
    /// Node refinement with (neighbor color, distance class) multisets.
    Wl1e,
    /// Tuple refinement, one neighbor multiset per replaced position.
    KWl,
    /// Folklore tuple refinement, ordered replacement vectors per candidate
    /// node.
    KFwl,
    /// Tuple refinement with per-round edge states pooled from incident
    /// tuples.
    KEwl,
}

impl Method {
    pub fn is_tuple_method(self) -> bool {
        matches!(self, Method::KWl | Method::KFwl | Method::KEwl)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Wl1 => "wl1",
            Method::Wl1e => "wl1e",
            Method::KWl => "kwl",
            Method::KFwl => "kfwl",
            Method::KEwl => "kewl",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wl1" => Ok(Method::Wl1),
            "wl1e" => Ok(Method::Wl1e),
            "kwl" => Ok(Method::KWl),
            "kfwl" => Ok(Method::KFwl),
            "kewl" => Ok(Method::KEwl),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rounds {
    UntilStable,
    Fixed(usize),
}

/// Default cap on `n^k`; keeps desk-scale runs in RAM.
pub const DEFAULT_TUPLE_CAP: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct RefinementConfig {
    pub method: Method,
    /// Tuple order; silently ignored by `wl1`/`wl1e` so sweeps can share
    /// configs.
    pub k: usize,
    pub rounds: Rounds,
    pub tau: f64,
    pub tuple_cap: usize,
}

impl RefinementConfig {
    pub fn new(method: Method, k: usize) -> Self {
        RefinementConfig {
            method,
            k,
            rounds: Rounds::UntilStable,
            tau: DEFAULT_TAU,
            tuple_cap: DEFAULT_TUPLE_CAP,
        }
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = Rounds::Fixed(rounds);
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Order actually used by the engine (1 for node-level methods).
    pub fn effective_k(&self) -> usize {
        if self.method.is_tuple_method() {
            self.k
        } else {
            1
        }
    }

    pub(crate) fn validate(&self, max_n: usize) -> Result<(), EngineError> {
        if self.method.is_tuple_method() && self.k < 2 {
            return Err(EngineError::OrderTooSmall {
                method: self.method,
                k: self.k,
            });
        }
        let k = self.effective_k() as u32;
        let count = (max_n as u128).pow(k);
        if count > self.tuple_cap as u128 {
            return Err(EngineError::TooManyTuples {
                n: max_n,
                k: k as usize,
                cap: self.tuple_cap,
            });
        }
        Ok(())
    }
}

/// Sorted (color id, count) pairs for one round of one cloud.
pub type Histogram = Vec<(u32, u64)>;

/// Colors of all tuples (or nodes) after some round, indexed by the tuple's
/// row-major index in `V^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorTable {
    pub colors: Vec<u32>,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementResult {
    /// Histogram per computed round, starting with the initial coloring.
    pub per_round_histograms: Vec<Histogram>,
    /// First round whose partition one further round does not refine;
    /// `None` if the round budget ran out first.
    pub stable_round: Option<usize>,
    pub final_table: ColorTable,
    /// Per-node colors; for tuple methods each node pools the final colors
    /// of all tuples whose first entry is that node.
    pub node_colors: Vec<u32>,
}

impl RefinementResult {
    /// Class sizes of the stable node partition, largest first.
    pub fn node_class_sizes(&self) -> Vec<usize> {
        let mut counts: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
        for &c in &self.node_colors {
            *counts.entry(c).or_default() += 1;
        }
        let mut sizes: Vec<usize> = counts.into_values().collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub method: Method,
    pub k: usize,
    pub distinguished: bool,
    /// First round whose histograms differ.
    pub separation_round: Option<usize>,
    /// Rounds actually computed (init round not counted).
    pub rounds_run: usize,
}

/// Joint refinement of two clouds with a shared signature dictionary.
#[derive(Debug, Clone)]
pub struct PairRefinement {
    pub left: RefinementResult,
    pub right: RefinementResult,
    pub verdict: Verdict,
}

/// Refine a single cloud.
pub fn refine(pc: &PointCloud, cfg: &RefinementConfig) -> Result<RefinementResult, EngineError> {
    cfg.validate(pc.len())?;
    let graphs = build_graphs(&[pc], cfg.tau);
    let run = run_multi(&graphs, cfg, false)?;
    Ok(run.into_results().pop().unwrap())
}

/// Jointly refine two clouds; distances are canonicalized across both so
/// equal values hash identically.
pub fn refine_pair(
    a: &PointCloud,
    b: &PointCloud,
    cfg: &RefinementConfig,
) -> Result<PairRefinement, EngineError> {
    cfg.validate(a.len().max(b.len()))?;
    let graphs = build_graphs(&[a, b], cfg.tau);
    let run = run_multi(&graphs, cfg, false)?;
    Ok(pair_from_run(run, cfg))
}

/// Distinguishability verdict; stops at the first differing round.
pub fn distinguish(
    a: &PointCloud,
    b: &PointCloud,
    cfg: &RefinementConfig,
) -> Result<Verdict, EngineError> {
    cfg.validate(a.len().max(b.len()))?;
    let graphs = build_graphs(&[a, b], cfg.tau);
    let run = run_multi(&graphs, cfg, true)?;
    Ok(pair_from_run(run, cfg).verdict)
}

fn pair_from_run(run: MultiRun, cfg: &RefinementConfig) -> PairRefinement {
    let rounds_run = run.rounds_run;
    let mut results = run.into_results();
    let right = results.pop().unwrap();
    let left = results.pop().unwrap();
    let separation_round = left
        .per_round_histograms
        .iter()
        .zip(right.per_round_histograms.iter())
        .position(|(l, r)| l != r);
    // Unequal node counts separate at the initial histogram already.
    let separation_round = if left.per_round_histograms.len() != right.per_round_histograms.len() {
        Some(0)
    } else {
        separation_round
    };
    PairRefinement {
        verdict: Verdict {
            method: cfg.method,
            k: cfg.effective_k(),
            distinguished: separation_round.is_some(),
            separation_round,
            rounds_run,
        },
        left,
        right,
    }
}

/// Initial tuple coloring of a single quantized cloud: two tuples share a
/// color iff their ordered class matrices and ordered label vectors agree.
pub fn init_tuple_colors(q: &QuantizedDistanceMatrix, labels: &[u32], k: usize) -> ColorTable {
    engine::init_tuple_colors(q, labels, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        apply_e3, build_point_cloud, canonicalize_distances, distance_matrix, random_e3,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(coords: Vec<[f64; 3]>) -> PointCloud {
        build_point_cloud(coords, None).unwrap()
    }

    fn equilateral() -> PointCloud {
        cloud(vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, 3f64.sqrt() / 2.0, 0.0],
        ])
    }

    fn random_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        cloud(
            (0..n)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect(),
        )
    }

    #[test]
    fn wl1_complete_graph_is_immediately_stable() {
        let pc = random_cloud(1, 5);
        let r = refine(&pc, &RefinementConfig::new(Method::Wl1, 2)).unwrap();
        assert_eq!(r.stable_round, Some(0));
        assert_eq!(r.per_round_histograms[0].len(), 1);
    }

    #[test]
    fn wl1_partitions_by_label() {
        let mut pc = random_cloud(2, 6);
        pc.labels = vec![1, 1, 2, 2, 3, 3];
        let r = refine(&pc, &RefinementConfig::new(Method::Wl1, 2)).unwrap();
        assert_eq!(r.node_class_sizes(), vec![2, 2, 2]);
    }

    #[test]
    fn wl1_single_node() {
        let pc = cloud(vec![[0.0; 3]]);
        let r = refine(&pc, &RefinementConfig::new(Method::Wl1, 2)).unwrap();
        assert_eq!(r.node_colors.len(), 1);
        assert_eq!(r.per_round_histograms[0], vec![(0, 1)]);
    }

    #[test]
    fn init_colors_respect_equality_patterns() {
        // generic cloud, all distances distinct: diagonal vs off-diagonal
        // 2-tuples split, and all off-diagonal tuples are distinct.
        let pc = random_cloud(3, 4);
        let d = distance_matrix(&pc);
        let q = canonicalize_distances(&[&d], 1e-9);
        let t = init_tuple_colors(&q[0], &pc.labels, 2);
        let n = 4;
        let mut offdiag = std::collections::HashSet::new();
        for i in 0..n {
            for j in 0..n {
                let c = t.colors[i * n + j];
                if i != j {
                    offdiag.insert(c);
                }
            }
        }
        // (i,j) and (j,i) share the class matrix, so 6 distinct off-diagonal
        // colors for 12 ordered tuples.
        assert_eq!(offdiag.len(), 6);
        for i in 0..n {
            assert!(!offdiag.contains(&t.colors[i * n + i]));
        }
    }

    #[test]
    fn equilateral_triangle_has_two_tuple_colors() {
        let pc = equilateral();
        let d = distance_matrix(&pc);
        let q = canonicalize_distances(&[&d], 1e-9);
        let t = init_tuple_colors(&q[0], &pc.labels, 2);
        let distinct: std::collections::HashSet<u32> = t.colors.iter().copied().collect();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn identical_clouds_are_indistinguishable_everywhere() {
        let pc = random_cloud(5, 6);
        for method in [Method::Wl1, Method::Wl1e, Method::KWl, Method::KFwl, Method::KEwl] {
            let cfg = RefinementConfig::new(method, 2);
            let v = distinguish(&pc, &pc.clone(), &cfg).unwrap();
            assert!(!v.distinguished, "{method:?}");
        }
    }

    #[test]
    fn wl1e_separates_perturbed_clouds_at_round_one() {
        let pc = random_cloud(6, 7);
        let mut moved = pc.clone();
        moved.coords[0][0] += 0.1;
        let v = distinguish(&pc, &moved, &RefinementConfig::new(Method::Wl1e, 2)).unwrap();
        assert!(v.distinguished);
        assert!(v.separation_round.unwrap() <= 1);
    }

    #[test]
    fn congruent_images_are_never_distinguished() {
        let pc = random_cloud(7, 6);
        for (mi, method) in [Method::Wl1e, Method::KWl, Method::KFwl, Method::KEwl]
            .into_iter()
            .enumerate()
        {
            for seed in 0..4u64 {
                let g = random_e3(1000 + seed * 7 + mi as u64);
                let moved = apply_e3(&pc, &g).unwrap();
                let mut perm: Vec<usize> = (0..pc.len()).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in (1..perm.len()).rev() {
                    let j = rng.gen_range(0..=i);
                    perm.swap(i, j);
                }
                let shuffled = moved.permuted(&perm);
                for k in [2usize, 3] {
                    let cfg = RefinementConfig::new(method, k);
                    let v = distinguish(&pc, &shuffled, &cfg).unwrap();
                    assert!(!v.distinguished, "{method:?} k={k} seed={seed}");
                }
            }
        }
    }

    #[test]
    fn equal_side_triangles_indistinguishable_by_2wl() {
        let a = equilateral();
        let g = random_e3(11);
        let b = apply_e3(&a, &g).unwrap();
        let v = distinguish(&a, &b, &RefinementConfig::new(Method::KWl, 2)).unwrap();
        assert!(!v.distinguished);
    }

    #[test]
    fn refinement_is_monotone() {
        // partition at round t+1 refines round t: verify on the color maps
        let pc = random_cloud(8, 6);
        let cfg = RefinementConfig::new(Method::KWl, 2);
        let graphs = build_graphs(&[&pc], cfg.tau);
        let run = run_multi(&graphs, &cfg, false).unwrap();
        let hists = &run.sides[0].histograms;
        for w in hists.windows(2) {
            assert!(w[1].len() >= w[0].len());
        }
    }

    #[test]
    fn memory_guard_refuses_large_runs() {
        let pc = random_cloud(9, 40);
        let cfg = RefinementConfig::new(Method::KWl, 4);
        assert!(matches!(
            refine(&pc, &cfg),
            Err(EngineError::TooManyTuples { .. })
        ));
    }

    #[test]
    fn order_guard_rejects_k1_tuple_methods() {
        let pc = random_cloud(10, 4);
        let cfg = RefinementConfig::new(Method::KFwl, 1);
        assert!(matches!(
            refine(&pc, &cfg),
            Err(EngineError::OrderTooSmall { .. })
        ));
        // wl1e ignores k silently
        let cfg = RefinementConfig::new(Method::Wl1e, 7);
        assert!(refine(&pc, &cfg).is_ok());
    }

    #[test]
    fn random_pairs_usually_separate_at_round_one() {
        let mut separated_late = 0;
        for seed in 0..24u64 {
            let a = random_cloud(seed, 8);
            let b = random_cloud(seed + 4096, 8);
            let v = distinguish(&a, &b, &RefinementConfig::new(Method::Wl1e, 2)).unwrap();
            assert!(v.distinguished, "seed {seed}");
            if v.separation_round.unwrap() > 1 {
                separated_late += 1;
            }
        }
        assert_eq!(separated_late, 0, "{separated_late} pairs separated after round 1");
    }

    #[test]
    fn fixed_round_budget_is_respected() {
        let pc = random_cloud(12, 6);
        let r = refine(&pc, &RefinementConfig::new(Method::Wl1e, 2).with_rounds(0)).unwrap();
        assert_eq!(r.per_round_histograms.len(), 1);
        assert_eq!(r.final_table.round, 0);
    }
}
