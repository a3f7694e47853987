//! Exhaustive subset search over polyhedron vertices: the oracle that the
//! embedded fixed pairs were derived from.
//!
//! A counterexample pair is two equal-size vertex subsets that are
//! indistinguishable under node-level refinement yet non-congruent. The
//! search buckets subsets by their per-node distance-class profiles, splits
//! each bucket into congruence classes with the exact oracle, and keeps one
//! representative pair per class pair that survives a full joint refinement
//! run. Representatives are the lexicographically smallest index subsets.

use crate::counterexamples::polyhedra::{polyhedron, PolyhedronKind};
use crate::geometry::{
    build_point_cloud, canonicalize_distances, congruent_bruteforce, distance_matrix, PointCloud,
};
use crate::wl::{refine_pair, Method, RefinementConfig};
use crate::DEFAULT_TAU;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoundPair {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Stable class sizes, largest first (equal on both sides).
    pub kind_sizes: Vec<usize>,
    /// Number of subsets congruent to each side within the same profile
    /// bucket.
    pub left_orbit: usize,
    pub right_orbit: usize,
}

struct Combinations {
    indices: Vec<usize>,
    n: usize,
    done: bool,
}

impl Combinations {
    fn new(n: usize, m: usize) -> Self {
        Combinations {
            indices: (0..m).collect(),
            n,
            done: m > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.indices.clone();
        let m = self.indices.len();
        let mut i = m;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.indices[i] < self.n - (m - i) {
                self.indices[i] += 1;
                for j in (i + 1)..m {
                    self.indices[j] = self.indices[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

fn subset_cloud(vertices: &[crate::geometry::Vec3], subset: &[usize]) -> PointCloud {
    build_point_cloud(subset.iter().map(|&i| vertices[i]).collect(), None).unwrap()
}

/// All counterexample pairs among size-`m` vertex subsets of the given
/// polyhedron, one representative per congruence-class pair.
pub fn search_pairs(kind: PolyhedronKind, m: usize) -> Vec<FoundPair> {
    let poly = polyhedron(kind, 1.0).expect("unit radius");
    let n = kind.vertex_count();
    let dm = distance_matrix(&build_point_cloud(poly.vertices.clone(), None).unwrap());
    let q = &canonicalize_distances(&[&dm], DEFAULT_TAU)[0];

    // Bucket by the sorted list of per-node class profiles; equal profiles
    // are necessary for indistinguishability.
    let mut buckets: HashMap<Vec<u32>, Vec<Vec<usize>>> = HashMap::new();
    for subset in Combinations::new(n, m) {
        let mut profiles: Vec<Vec<u32>> = subset
            .iter()
            .map(|&i| {
                let mut p: Vec<u32> = subset
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| q.class(i, j))
                    .collect();
                p.sort_unstable();
                p
            })
            .collect();
        profiles.sort();
        let key: Vec<u32> = profiles.into_iter().flatten().collect();
        buckets.entry(key).or_default().push(subset);
    }

    let mut keyed_buckets: Vec<(Vec<u32>, Vec<Vec<usize>>)> = buckets
        .into_iter()
        .filter(|(_, subs)| subs.len() >= 2)
        .collect();
    keyed_buckets.sort();

    let wl1e = RefinementConfig::new(Method::Wl1e, 1);
    let mut found = Vec::new();
    for (_, subsets) in keyed_buckets {
        // split the bucket into congruence classes; subsets arrive in
        // lexicographic order, so each class representative is lex-minimal
        let mut classes: Vec<(Vec<usize>, usize, PointCloud)> = Vec::new();
        for subset in subsets {
            let cloud = subset_cloud(&poly.vertices, &subset);
            match classes
                .iter_mut()
                .find(|(_, _, rep)| congruent_bruteforce(&cloud, rep, DEFAULT_TAU).congruent)
            {
                Some((_, count, _)) => *count += 1,
                None => classes.push((subset, 1, cloud)),
            }
        }
        for a in 0..classes.len() {
            for b in (a + 1)..classes.len() {
                let run = refine_pair(&classes[a].2, &classes[b].2, &wl1e).expect("refinement");
                if !run.verdict.distinguished {
                    found.push(FoundPair {
                        left: classes[a].0.clone(),
                        right: classes[b].0.clone(),
                        kind_sizes: run.left.node_class_sizes(),
                        left_orbit: classes[a].1,
                        right_orbit: classes[b].1,
                    });
                }
            }
        }
    }
    found.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
    found
}

/// Search every subset size of the icosahedron. The fixed pair is expected
/// to be the only one; callers assert on that.
pub fn search_icosahedron_all_sizes() -> Vec<(usize, FoundPair)> {
    let mut out = Vec::new();
    for m in 2..=10 {
        for pair in search_pairs(PolyhedronKind::Icosahedron, m) {
            out.push((m, pair));
        }
    }
    out
}

/// True iff every node of both subsets has the same quantized distance
/// list (within and across the two subsets).
pub fn has_uniform_distance_lists(kind: PolyhedronKind, left: &[usize], right: &[usize]) -> bool {
    let poly = polyhedron(kind, 1.0).expect("unit radius");
    let l = subset_cloud(&poly.vertices, left);
    let r = subset_cloud(&poly.vertices, right);
    let dl = distance_matrix(&l);
    let dr = distance_matrix(&r);
    let q = canonicalize_distances(&[&dl, &dr], DEFAULT_TAU);
    let mut lists = Vec::new();
    for (qm, len) in [(&q[0], left.len()), (&q[1], right.len())] {
        for i in 0..len {
            let mut p: Vec<u32> = (0..len).filter(|&j| j != i).map(|j| qm.class(i, j)).collect();
            p.sort_unstable();
            lists.push(p);
        }
    }
    lists.windows(2).all(|w| w[0] == w[1])
}
