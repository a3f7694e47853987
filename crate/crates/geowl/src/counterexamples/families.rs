//! The fixed and parametric counterexample pairs.
//!
//! The vertex subsets of the fixed pairs were recovered once by exhaustive
//! search over polyhedron-vertex subsets, constrained by node-refinement
//! indistinguishability, non-congruence and the stable kind counts; the
//! search itself is retained in [`super::search`] as a test oracle. Within
//! each solution's congruence class the lexicographically smallest index
//! subset is stored.

use crate::counterexamples::polyhedra::{polyhedron, PolyhedronKind};
use crate::counterexamples::FamilyError;
use crate::geometry::{build_point_cloud, PointCloud, Vec3};
use serde_json::json;

/// The six-node icosahedron pair: the right cloud is a face plus its
/// antipodal face (two small triangles), the left is a closed six-ring with
/// the same per-node distance list.
pub const ICO_FIG2_LEFT: [usize; 6] = [0, 1, 3, 6, 9, 10];
pub const ICO_FIG2_RIGHT: [usize; 6] = [0, 1, 2, 9, 10, 11];

pub const DODEC6_LEFT: [usize; 6] = [0, 1, 6, 7, 8, 11];
pub const DODEC6_RIGHT: [usize; 6] = [0, 1, 6, 7, 16, 19];

/// Obtained by inserting two nodes into each side of the six-node pair.
pub const DODEC8_LEFT: [usize; 8] = [0, 1, 6, 7, 8, 9, 10, 11];
pub const DODEC8_RIGHT: [usize; 8] = [0, 1, 6, 7, 12, 15, 16, 19];

pub const DODEC10A_LEFT: [usize; 10] = [0, 1, 2, 5, 6, 7, 8, 11, 12, 15];
pub const DODEC10A_RIGHT: [usize; 10] = [0, 1, 2, 5, 6, 7, 8, 11, 16, 19];

/// Left side holds two regular face pentagons, right side is a ten-ring.
pub const DODEC10B_LEFT: [usize; 10] = [0, 1, 6, 7, 12, 15, 16, 17, 18, 19];
pub const DODEC10B_RIGHT: [usize; 10] = [0, 1, 6, 7, 8, 9, 10, 11, 12, 15];

/// Expected stable kind structure of a pair, where stated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KindSpec {
    /// Only the number of kinds is stated.
    Count(usize),
    /// Class sizes, largest first.
    Sizes(Vec<usize>),
}

impl KindSpec {
    /// `sizes` must be sorted largest first.
    pub fn matches(&self, sizes: &[usize]) -> bool {
        match self {
            KindSpec::Count(c) => sizes.len() == *c,
            KindSpec::Sizes(s) => {
                let mut expect = s.clone();
                expect.sort_unstable_by(|a, b| b.cmp(a));
                expect == sizes
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            KindSpec::Count(c) => json!({ "count": c }),
            KindSpec::Sizes(s) => {
                let mut sorted = s.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                json!({ "sizes": sorted })
            }
        }
    }
}

/// A pair of clouds expected to be non-congruent yet indistinguishable by
/// node-level distance refinement.
#[derive(Debug, Clone)]
pub struct CounterexamplePair {
    pub left: PointCloud,
    pub right: PointCloud,
    pub family: String,
    pub params: serde_json::Value,
    pub expected_kinds: Option<KindSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DodecVariant {
    Size6,
    Size14,
    Size8,
    Size12,
    Size10a,
    Size10b,
}

/// The seven fixed single-polyhedron pairs; these are the admissible bases
/// of the augmentation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseFamily {
    Fig2,
    Dodec6,
    Dodec14,
    Dodec8,
    Dodec12,
    Dodec10a,
    Dodec10b,
}

impl BaseFamily {
    pub const ALL: [BaseFamily; 7] = [
        BaseFamily::Fig2,
        BaseFamily::Dodec6,
        BaseFamily::Dodec14,
        BaseFamily::Dodec8,
        BaseFamily::Dodec12,
        BaseFamily::Dodec10a,
        BaseFamily::Dodec10b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseFamily::Fig2 => "fig2",
            BaseFamily::Dodec6 => "dodec6",
            BaseFamily::Dodec14 => "dodec14",
            BaseFamily::Dodec8 => "dodec8",
            BaseFamily::Dodec12 => "dodec12",
            BaseFamily::Dodec10a => "dodec10a",
            BaseFamily::Dodec10b => "dodec10b",
        }
    }

    pub fn from_name(name: &str) -> Option<BaseFamily> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn kind(self) -> PolyhedronKind {
        match self {
            BaseFamily::Fig2 => PolyhedronKind::Icosahedron,
            _ => PolyhedronKind::Dodecahedron,
        }
    }

    /// Vertex index subsets (left, right) into the polyhedron's vertex
    /// list. The 14- and 12-node pairs are the literal complements of the
    /// 6- and 8-node pairs.
    pub fn subsets(self) -> (Vec<usize>, Vec<usize>) {
        let complement = |s: &[usize]| -> Vec<usize> {
            (0..20).filter(|i| !s.contains(i)).collect()
        };
        match self {
            BaseFamily::Fig2 => (ICO_FIG2_LEFT.to_vec(), ICO_FIG2_RIGHT.to_vec()),
            BaseFamily::Dodec6 => (DODEC6_LEFT.to_vec(), DODEC6_RIGHT.to_vec()),
            BaseFamily::Dodec14 => (complement(&DODEC6_LEFT), complement(&DODEC6_RIGHT)),
            BaseFamily::Dodec8 => (DODEC8_LEFT.to_vec(), DODEC8_RIGHT.to_vec()),
            BaseFamily::Dodec12 => (complement(&DODEC8_LEFT), complement(&DODEC8_RIGHT)),
            BaseFamily::Dodec10a => (DODEC10A_LEFT.to_vec(), DODEC10A_RIGHT.to_vec()),
            BaseFamily::Dodec10b => (DODEC10B_LEFT.to_vec(), DODEC10B_RIGHT.to_vec()),
        }
    }

    /// Stable kind structure under node-level refinement.
    pub fn expected_kinds(self) -> KindSpec {
        match self {
            BaseFamily::Fig2 => KindSpec::Count(1),
            BaseFamily::Dodec6 => KindSpec::Count(2),
            BaseFamily::Dodec14 => KindSpec::Sizes(vec![4, 4, 4, 2]),
            BaseFamily::Dodec8 => KindSpec::Sizes(vec![4, 4]),
            BaseFamily::Dodec12 => KindSpec::Sizes(vec![4, 4, 2, 2]),
            BaseFamily::Dodec10a => KindSpec::Sizes(vec![4, 4, 2]),
            BaseFamily::Dodec10b => KindSpec::Count(1),
        }
    }

    pub fn pair(self) -> CounterexamplePair {
        let poly = polyhedron(self.kind(), 1.0).expect("unit radius");
        let (ls, rs) = self.subsets();
        let pick = |idx: &[usize]| -> PointCloud {
            build_point_cloud(idx.iter().map(|&i| poly.vertices[i]).collect(), None).unwrap()
        };
        CounterexamplePair {
            left: pick(&ls),
            right: pick(&rs),
            family: self.name().to_string(),
            params: json!({ "circumradius": 1.0 }),
            expected_kinds: Some(self.expected_kinds()),
        }
    }
}

/// The icosahedron pair at unit circumradius.
pub fn figure2_pair() -> CounterexamplePair {
    BaseFamily::Fig2.pair()
}

/// One of the six fixed dodecahedron pairs at unit circumradius.
pub fn dodecahedron_pair(variant: DodecVariant) -> CounterexamplePair {
    match variant {
        DodecVariant::Size6 => BaseFamily::Dodec6,
        DodecVariant::Size14 => BaseFamily::Dodec14,
        DodecVariant::Size8 => BaseFamily::Dodec8,
        DodecVariant::Size12 => BaseFamily::Dodec12,
        DodecVariant::Size10a => BaseFamily::Dodec10a,
        DodecVariant::Size10b => BaseFamily::Dodec10b,
    }
    .pair()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CubeOctaVariant {
    Red,
    Blue,
}

impl CubeOctaVariant {
    pub fn name(self) -> &'static str {
        match self {
            CubeOctaVariant::Red => "red",
            CubeOctaVariant::Blue => "blue",
        }
    }
}

/// Diagonal rectangle of the cube with half-side `a`, in the plane y = z
/// (contains the x axis).
fn rect_yz(a: f64) -> [Vec3; 4] {
    [[a, a, a], [-a, a, a], [a, -a, -a], [-a, -a, -a]]
}

/// Diagonal rectangle in the plane x = y (contains the z axis).
fn rect_xy(a: f64) -> [Vec3; 4] {
    [[a, a, a], [a, a, -a], [-a, -a, a], [-a, -a, -a]]
}

/// Diagonal rectangle in the plane x = z (contains the y axis).
fn rect_xz(a: f64) -> [Vec3; 4] {
    [[a, a, a], [a, -a, a], [-a, a, -a], [-a, -a, -a]]
}

fn cloud_of(parts: &[&[Vec3]]) -> PointCloud {
    let coords: Vec<Vec3> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    build_point_cloud(coords, None).unwrap()
}

/// Cube (side `2a`) combined with a regular octahedron (half-diagonal `b`):
/// centers coincide and each octahedron vertex lines up with a cube face
/// center. Both graphs sample the same octahedron vertices plus one diagonal
/// rectangle of the cube; the sides differ in how the rectangle's plane
/// relates to the sampled octahedron vertices.
pub fn cube_octahedron_pair(
    a: f64,
    b: f64,
    variant: CubeOctaVariant,
) -> Result<CounterexamplePair, FamilyError> {
    if a <= 0.0 {
        return Err(FamilyError::NonPositive { name: "a", value: a });
    }
    if b <= 0.0 {
        return Err(FamilyError::NonPositive { name: "b", value: b });
    }
    let (left, right, expected) = match variant {
        CubeOctaVariant::Red => {
            // Antipodal octahedron pair on the x axis; on the left the
            // rectangle's plane contains that axis (all six points coplanar),
            // on the right it does not.
            let pair: [Vec3; 2] = [[b, 0.0, 0.0], [-b, 0.0, 0.0]];
            (
                cloud_of(&[&pair, &rect_yz(a)]),
                cloud_of(&[&pair, &rect_xy(a)]),
                KindSpec::Sizes(vec![4, 2]),
            )
        }
        CubeOctaVariant::Blue => {
            // Equatorial octahedron square in the plane x = 0; the left
            // rectangle's plane is perpendicular to it, the right one is not.
            let square: [Vec3; 4] = [
                [0.0, b, 0.0],
                [0.0, -b, 0.0],
                [0.0, 0.0, b],
                [0.0, 0.0, -b],
            ];
            (
                cloud_of(&[&square, &rect_yz(a)]),
                cloud_of(&[&square, &rect_xy(a)]),
                KindSpec::Sizes(vec![4, 4]),
            )
        }
    };
    Ok(CounterexamplePair {
        left,
        right,
        family: "cubeocta".into(),
        params: json!({ "a": a, "b": b, "variant": variant.name() }),
        expected_kinds: Some(expected),
    })
}

/// Two cubes sharing their center and one face axis, the second twisted 45
/// degrees about it; each graph samples one diagonal rectangle per cube and
/// the sides differ in the relative orientation of the two rectangles.
///
/// With equal sizes all eight nodes share one distance list (one kind);
/// otherwise the two rectangles form two kinds of four nodes.
pub fn two_cubes_pair(a1: f64, a2: f64) -> Result<CounterexamplePair, FamilyError> {
    if a1 <= 0.0 {
        return Err(FamilyError::NonPositive { name: "a1", value: a1 });
    }
    if a2 <= 0.0 {
        return Err(FamilyError::NonPositive { name: "a2", value: a2 });
    }
    let s = 2f64.sqrt() * a2;
    // Diagonal rectangle of the twisted cube lying in the plane z = 0.
    let twisted: [Vec3; 4] = [
        [a2, s, 0.0],
        [-a2, s, 0.0],
        [a2, -s, 0.0],
        [-a2, -s, 0.0],
    ];
    let expected = if (a1 - a2).abs() <= 1e-12 * a1.max(a2) {
        KindSpec::Count(1)
    } else {
        KindSpec::Sizes(vec![4, 4])
    };
    Ok(CounterexamplePair {
        left: cloud_of(&[&rect_yz(a1), &twisted]),
        right: cloud_of(&[&rect_xz(a1), &twisted]),
        family: "twocubes".into(),
        params: json!({ "a1": a1, "a2": a2 }),
        expected_kinds: Some(expected),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{congruent_bruteforce, dist, distance_matrix};
    use crate::wl::{refine_pair, Method, RefinementConfig};
    use crate::DEFAULT_TAU;

    fn wl1e_cfg() -> RefinementConfig {
        RefinementConfig::new(Method::Wl1e, 2)
    }

    #[test]
    fn fig2_sides_share_one_distance_list_and_are_non_congruent() {
        let pair = figure2_pair();
        assert_eq!(pair.left.len(), 6);
        assert_eq!(pair.right.len(), 6);
        let r = refine_pair(&pair.left, &pair.right, &wl1e_cfg()).unwrap();
        assert!(!r.verdict.distinguished);
        assert_eq!(r.left.node_class_sizes(), vec![6]);
        assert_eq!(r.right.node_class_sizes(), vec![6]);
        assert!(!congruent_bruteforce(&pair.left, &pair.right, DEFAULT_TAU).congruent);
    }

    #[test]
    fn fig2_right_has_two_small_triangles_left_none() {
        let pair = figure2_pair();
        // edge length of the unit-circumradius icosahedron
        let d = distance_matrix(&pair.right);
        let mut vals: Vec<f64> = d.data.iter().copied().filter(|&v| v > 0.0).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let edge = vals[0];
        let count_triangles = |pc: &crate::geometry::PointCloud| -> usize {
            let n = pc.len();
            let mut count = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    for l in (j + 1)..n {
                        let ok = [(i, j), (i, l), (j, l)].iter().all(|&(x, y)| {
                            (dist(pc.coords[x], pc.coords[y]) - edge).abs() <= 1e-9
                        });
                        if ok {
                            count += 1;
                        }
                    }
                }
            }
            count
        };
        assert_eq!(count_triangles(&pair.right), 2);
        assert_eq!(count_triangles(&pair.left), 0);
    }

    #[test]
    fn dodecahedron_pairs_match_expected_kind_structure() {
        for (variant, sizes) in [
            (DodecVariant::Size6, vec![4, 2]),
            (DodecVariant::Size14, vec![4, 4, 4, 2]),
            (DodecVariant::Size8, vec![4, 4]),
            (DodecVariant::Size12, vec![4, 4, 2, 2]),
            (DodecVariant::Size10a, vec![4, 4, 2]),
            (DodecVariant::Size10b, vec![10]),
        ] {
            let pair = dodecahedron_pair(variant);
            let r = refine_pair(&pair.left, &pair.right, &wl1e_cfg()).unwrap();
            assert!(!r.verdict.distinguished, "{variant:?}");
            assert_eq!(r.left.node_class_sizes(), sizes, "{variant:?}");
            assert_eq!(r.right.node_class_sizes(), sizes, "{variant:?}");
            assert!(
                !congruent_bruteforce(&pair.left, &pair.right, DEFAULT_TAU).congruent,
                "{variant:?}"
            );
        }
    }

    #[test]
    fn complementarity_and_insertion_relations_hold() {
        let (l6, r6) = BaseFamily::Dodec6.subsets();
        let (l14, r14) = BaseFamily::Dodec14.subsets();
        let (l8, r8) = BaseFamily::Dodec8.subsets();
        let (l12, r12) = BaseFamily::Dodec12.subsets();
        let union = |a: &[usize], b: &[usize]| -> Vec<usize> {
            let mut v: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
            v.sort_unstable();
            v
        };
        let all: Vec<usize> = (0..20).collect();
        assert_eq!(union(&l6, &l14), all);
        assert_eq!(union(&r6, &r14), all);
        assert_eq!(union(&l8, &l12), all);
        assert_eq!(union(&r8, &r12), all);
        // 8 = 6 plus two inserted nodes; 12 = 14 minus the same two
        assert!(l6.iter().all(|i| l8.contains(i)));
        assert!(r6.iter().all(|i| r8.contains(i)));
        assert!(l12.iter().all(|i| l14.contains(i)));
        assert!(r12.iter().all(|i| r14.contains(i)));
    }

    #[test]
    fn dodec10b_left_holds_two_face_pentagons() {
        let pair = dodecahedron_pair(DodecVariant::Size10b);
        let d = distance_matrix(&pair.left);
        let mut vals: Vec<f64> = d.data.iter().copied().filter(|&v| v > 0.0).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let edge = vals[0];
        // in a face pentagon every node has exactly two side-length
        // neighbors, and the side graph splits into two 5-cycles
        let count_edge_deg = |pc: &crate::geometry::PointCloud, i: usize| -> usize {
            (0..pc.len())
                .filter(|&j| j != i && (dist(pc.coords[i], pc.coords[j]) - edge).abs() <= 1e-9)
                .count()
        };
        for side in [&pair.left, &pair.right] {
            for i in 0..side.len() {
                assert_eq!(count_edge_deg(side, i), 2);
            }
        }
        // left: two 5-cycles; right: one 10-cycle
        let cycle_len = |pc: &crate::geometry::PointCloud| -> usize {
            let adj: Vec<Vec<usize>> = (0..pc.len())
                .map(|i| {
                    (0..pc.len())
                        .filter(|&j| {
                            j != i && (dist(pc.coords[i], pc.coords[j]) - edge).abs() <= 1e-9
                        })
                        .collect()
                })
                .collect();
            let (mut prev, mut cur) = (usize::MAX, 0usize);
            let mut len = 0;
            loop {
                let next = *adj[cur].iter().find(|&&x| x != prev).unwrap();
                prev = cur;
                cur = next;
                len += 1;
                if cur == 0 {
                    return len;
                }
            }
        };
        assert_eq!(cycle_len(&pair.left), 5);
        assert_eq!(cycle_len(&pair.right), 10);
    }

    #[test]
    fn cube_octa_red_distance_list_at_unit_params() {
        // octahedron vertex list at a=1, b=2: one 2b, two sqrt(11), two sqrt(3)
        let pair = cube_octahedron_pair(1.0, 2.0, CubeOctaVariant::Red).unwrap();
        for side in [&pair.left, &pair.right] {
            let mut ds: Vec<f64> = (1..side.len())
                .map(|j| dist(side.coords[0], side.coords[j]))
                .collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect = [
                3f64.sqrt(),
                3f64.sqrt(),
                11f64.sqrt(),
                11f64.sqrt(),
                4.0,
            ];
            for (d, e) in ds.iter().zip(expect.iter()) {
                assert!((d - e).abs() <= 1e-12, "{d} vs {e}");
            }
        }
    }

    #[test]
    fn parametric_pairs_are_counterexamples_for_sampled_parameters() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let a = rng.gen_range(0.3..3.0);
            let b = rng.gen_range(0.3..3.0);
            for variant in [CubeOctaVariant::Red, CubeOctaVariant::Blue] {
                let pair = cube_octahedron_pair(a, b, variant).unwrap();
                let r = refine_pair(&pair.left, &pair.right, &wl1e_cfg()).unwrap();
                assert!(!r.verdict.distinguished);
                assert!(pair
                    .expected_kinds
                    .as_ref()
                    .unwrap()
                    .matches(&r.left.node_class_sizes()));
                assert!(!congruent_bruteforce(&pair.left, &pair.right, DEFAULT_TAU).congruent);
            }
            let pair = two_cubes_pair(a, b).unwrap();
            let r = refine_pair(&pair.left, &pair.right, &wl1e_cfg()).unwrap();
            assert!(!r.verdict.distinguished);
            assert_eq!(r.left.node_class_sizes(), vec![4, 4]);
            assert!(!congruent_bruteforce(&pair.left, &pair.right, DEFAULT_TAU).congruent);
        }
    }

    #[test]
    fn equal_cubes_collapse_to_one_kind() {
        let pair = two_cubes_pair(1.3, 1.3).unwrap();
        assert_eq!(pair.expected_kinds, Some(KindSpec::Count(1)));
        let r = refine_pair(&pair.left, &pair.right, &wl1e_cfg()).unwrap();
        assert!(!r.verdict.distinguished);
        assert_eq!(r.left.node_class_sizes(), vec![8]);
        assert!(!congruent_bruteforce(&pair.left, &pair.right, DEFAULT_TAU).congruent);
    }

    #[test]
    fn parameter_validation() {
        assert!(cube_octahedron_pair(0.0, 1.0, CubeOctaVariant::Red).is_err());
        assert!(cube_octahedron_pair(1.0, -1.0, CubeOctaVariant::Blue).is_err());
        assert!(two_cubes_pair(-0.5, 1.0).is_err());
    }
}
