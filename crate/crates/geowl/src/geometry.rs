//! Point clouds, rigid motions, distance extraction and congruence testing.
//!
//! Everything here works on the *distance graph* of a cloud: congruence of
//! two clouds is decided purely by permutation search over their distance
//! matrices, never by fitting rotations or reflections.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type Vec3 = [f64; 3];

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point cloud must contain at least one point")]
    EmptyCloud,
    #[error("coords and labels have different lengths ({coords} vs {labels})")]
    LengthMismatch { coords: usize, labels: usize },
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("rotation matrix is not orthogonal (max deviation {deviation:e})")]
    NonOrthogonal { deviation: f64 },
}

/// A labeled 3D point cloud. Label 0 means "unlabeled".
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub coords: Vec<Vec3>,
    pub labels: Vec<u32>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Reorders points so that new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> PointCloud {
        assert_eq!(perm.len(), self.len());
        PointCloud {
            coords: perm.iter().map(|&p| self.coords[p]).collect(),
            labels: perm.iter().map(|&p| self.labels[p]).collect(),
        }
    }
}

/// Builds a cloud, defaulting labels to all-zero.
pub fn build_point_cloud(
    coords: Vec<Vec3>,
    labels: Option<Vec<u32>>,
) -> Result<PointCloud, GeometryError> {
    if coords.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    if let Some(idx) = coords
        .iter()
        .position(|c| !c.iter().all(|x| x.is_finite()))
    {
        return Err(GeometryError::NonFinite { index: idx });
    }
    let labels = match labels {
        Some(l) => {
            if l.len() != coords.len() {
                return Err(GeometryError::LengthMismatch {
                    coords: coords.len(),
                    labels: l.len(),
                });
            }
            l
        }
        None => vec![0; coords.len()],
    };
    Ok(PointCloud { coords, labels })
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Dense symmetric matrix of pairwise values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// All-pair Euclidean distances: symmetric with zero diagonal.
pub fn distance_matrix(pc: &PointCloud) -> SquareMatrix {
    let n = pc.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(pc.coords[i], pc.coords[j]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    SquareMatrix { n, data }
}

/// Pairwise distances mapped to a joint equivalence-class alphabet.
///
/// Class ids are dense `0..C` and increase with the representative value, so
/// id 0 is always the class of the zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDistanceMatrix {
    pub n: usize,
    pub classes: Vec<u32>,
    pub representatives: Vec<f64>,
}

impl QuantizedDistanceMatrix {
    pub fn class(&self, i: usize, j: usize) -> u32 {
        self.classes[i * self.n + j]
    }
}

/// Jointly quantize raw distance matrices into a shared class alphabet.
///
/// All values across *all* inputs are sorted together and consecutive values
/// with gap <= `tau` are merged into one class, so equal distances in
/// different clouds always receive the same symbol. Per-matrix bucketing
/// could split a value shared between two clouds, which would make
/// cross-cloud hashing meaningless.
pub fn canonicalize_distances(
    matrices: &[&SquareMatrix],
    tau: f64,
) -> Vec<QuantizedDistanceMatrix> {
    assert!(tau > 0.0, "tau must be positive");
    let mut values: Vec<f64> = matrices
        .iter()
        .flat_map(|m| m.data.iter().copied())
        .collect();
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();

    // Runs of consecutive values with gaps <= tau collapse to one class.
    let mut bounds: Vec<f64> = Vec::new(); // upper end of each run
    let mut reps: Vec<f64> = Vec::new();
    let mut run_start = 0;
    for i in 0..values.len() {
        if i + 1 == values.len() || values[i + 1] - values[i] > tau {
            bounds.push(values[i]);
            reps.push(0.5 * (values[run_start] + values[i]));
            run_start = i + 1;
        }
    }

    let class_of = |v: f64| -> u32 {
        bounds.partition_point(|&b| b + tau < v) as u32
    };

    matrices
        .iter()
        .map(|m| QuantizedDistanceMatrix {
            n: m.n,
            classes: m.data.iter().map(|&v| class_of(v)).collect(),
            representatives: reps.clone(),
        })
        .collect()
}

/// An element of E(3): orthogonal linear part (reflections allowed) plus a
/// translation.
#[derive(Debug, Clone, PartialEq)]
pub struct E3Transform {
    pub rotation: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl E3Transform {
    pub fn identity() -> Self {
        E3Transform {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn pure_translation(t: Vec3) -> Self {
        E3Transform {
            translation: t,
            ..Self::identity()
        }
    }

    /// Max deviation of `R^T R` from the identity.
    pub fn orthogonality_deviation(&self) -> f64 {
        let r = &self.rotation;
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += r[l][i] * r[l][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        let r = &self.rotation;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        let r = &self.rotation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + self.translation[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + self.translation[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + self.translation[2],
        ]
    }
}

/// Applies a rigid motion; labels are unchanged.
pub fn apply_e3(pc: &PointCloud, g: &E3Transform) -> Result<PointCloud, GeometryError> {
    let dev = g.orthogonality_deviation();
    if dev > 1e-12 {
        return Err(GeometryError::NonOrthogonal { deviation: dev });
    }
    Ok(PointCloud {
        coords: pc.coords.iter().map(|&p| g.apply_point(p)).collect(),
        labels: pc.labels.clone(),
    })
}

/// Seeded Haar-ish orthogonal matrix (reflection with probability 1/2) plus
/// a translation with entries in [-10, 10].
pub fn random_e3(seed: u64) -> E3Transform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Gram-Schmidt of a Gaussian 3x3.
    let mut cols = [[0.0f64; 3]; 3];
    loop {
        for c in cols.iter_mut() {
            for x in c.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
        }
        let mut ok = true;
        for i in 0..3 {
            for j in 0..i {
                let p = dot(cols[i], cols[j]);
                for l in 0..3 {
                    cols[i][l] -= p * cols[j][l];
                }
            }
            let len = norm(cols[i]);
            if len < 1e-6 {
                ok = false;
                break;
            }
            for l in 0..3 {
                cols[i][l] /= len;
            }
        }
        if ok {
            break;
        }
    }
    let mut rotation = [[0.0f64; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            rotation[r][c] = cols[c][r];
        }
    }
    let mut g = E3Transform {
        rotation,
        translation: [
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        ],
    };
    let want_reflection: bool = rng.gen();
    if (g.determinant() < 0.0) != want_reflection {
        for r in 0..3 {
            g.rotation[r][2] = -g.rotation[r][2];
        }
    }
    g
}

/// Subtracts the centroid from every point.
pub fn center_coordinates(pc: &PointCloud) -> PointCloud {
    let n = pc.len() as f64;
    let mut c = [0.0f64; 3];
    for p in &pc.coords {
        for l in 0..3 {
            c[l] += p[l];
        }
    }
    for l in 0..3 {
        c[l] /= n;
    }
    PointCloud {
        coords: pc.coords.iter().map(|&p| sub(p, c)).collect(),
        labels: pc.labels.clone(),
    }
}

/// Outcome of the exact congruence test.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceVerdict {
    pub congruent: bool,
    /// Maps indices of the first cloud to indices of the second.
    pub witness_permutation: Option<Vec<usize>>,
    /// Largest distance deviation under the witness; infinite when
    /// non-congruent.
    pub max_residual: f64,
}

impl CongruenceVerdict {
    fn negative() -> Self {
        CongruenceVerdict {
            congruent: false,
            witness_permutation: None,
            max_residual: f64::INFINITY,
        }
    }
}

/// Decides congruence by backtracking permutation search over distance
/// matrices: clouds are congruent iff some label-preserving permutation maps
/// one matrix onto the other within `tau` entrywise. No coordinate fitting
/// is involved, so reflections need no special handling.
pub fn congruent_bruteforce(a: &PointCloud, b: &PointCloud, tau: f64) -> CongruenceVerdict {
    let n = a.len();
    if n != b.len() {
        return CongruenceVerdict::negative();
    }
    let da = distance_matrix(a);
    let db = distance_matrix(b);
    let q = canonicalize_distances(&[&da, &db], tau);

    // Node invariant: own label plus the multiset of (distance class, other
    // label) pairs. Anything a valid permutation maps together must agree.
    let profile = |qm: &QuantizedDistanceMatrix, labels: &[u32], i: usize| -> Vec<(u32, u32)> {
        let mut p: Vec<(u32, u32)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (qm.class(i, j), labels[j]))
            .collect();
        p.sort_unstable();
        p
    };
    let prof_a: Vec<_> = (0..n).map(|i| (a.labels[i], profile(&q[0], &a.labels, i))).collect();
    let prof_b: Vec<_> = (0..n).map(|i| (b.labels[i], profile(&q[1], &b.labels, i))).collect();

    let mut sorted_a = prof_a.clone();
    let mut sorted_b = prof_b.clone();
    sorted_a.sort();
    sorted_b.sort();
    if sorted_a != sorted_b {
        return CongruenceVerdict::negative();
    }

    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| prof_b[j] == prof_a[i]).collect())
        .collect();

    // Most-constrained-first static order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| candidates[i].len());

    let mut mapping = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let found = backtrack(
        0,
        &order,
        &candidates,
        &da,
        &db,
        tau,
        &mut mapping,
        &mut used,
    );
    if !found {
        return CongruenceVerdict::negative();
    }
    let mut max_residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let r = (da.get(i, j) - db.get(mapping[i], mapping[j])).abs();
            max_residual = max_residual.max(r);
        }
    }
    CongruenceVerdict {
        congruent: true,
        witness_permutation: Some(mapping),
        max_residual,
    }
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    pos: usize,
    order: &[usize],
    candidates: &[Vec<usize>],
    da: &SquareMatrix,
    db: &SquareMatrix,
    tau: f64,
    mapping: &mut [usize],
    used: &mut [bool],
) -> bool {
    if pos == order.len() {
        return true;
    }
    let i = order[pos];
    'cands: for &j in &candidates[i] {
        if used[j] {
            continue;
        }
        for &ii in &order[..pos] {
            if (da.get(i, ii) - db.get(j, mapping[ii])).abs() > tau {
                continue 'cands;
            }
        }
        mapping[i] = j;
        used[j] = true;
        if backtrack(pos + 1, order, candidates, da, db, tau, mapping, used) {
            return true;
        }
        used[j] = false;
        mapping[i] = usize::MAX;
    }
    false
}
