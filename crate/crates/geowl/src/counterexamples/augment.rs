//! Concentric-layer augmentation of the fixed pairs into infinite families.
//!
//! A layer spec picks, per radius, either the base subset (`ori`), the
//! complementary polyhedron vertices (`com`) or the full polyhedron (`all`).
//! Layers share the polyhedron's vertex frame and differ by pure scaling, so
//! alignment is automatic. Any spec with pairwise distinct radii and at
//! least one non-`all` layer yields a counterexample again.

use crate::counterexamples::families::{BaseFamily, CounterexamplePair};
use crate::counterexamples::polyhedra::polyhedron;
use crate::counterexamples::FamilyError;
use crate::geometry::{build_point_cloud, PointCloud};
use crate::wl::{refine_pair, Method, RefinementConfig};
use serde_json::json;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerType {
    Ori,
    Com,
    All,
}

impl LayerType {
    pub fn name(self) -> &'static str {
        match self {
            LayerType::Ori => "ori",
            LayerType::Com => "com",
            LayerType::All => "all",
        }
    }
}

impl FromStr for LayerType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ori" => Ok(LayerType::Ori),
            "com" => Ok(LayerType::Com),
            "all" => Ok(LayerType::All),
            other => Err(format!("unknown layer type '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub layer_type: LayerType,
    pub radius: f64,
}

impl LayerSpec {
    pub fn new(layer_type: LayerType, radius: f64) -> Self {
        LayerSpec { layer_type, radius }
    }
}

/// A total labeling of one cloud's nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelState {
    pub assignment: Vec<u32>,
}

/// Stable labelings of the base subset and its complement, per side; label
/// id spaces of the two layers are disjoint.
#[derive(Debug, Clone)]
pub struct ComplementaryLabels {
    pub left_ori: LabelState,
    pub left_com: LabelState,
    pub right_ori: LabelState,
    pub right_com: LabelState,
}

fn base_of(pair: &CounterexamplePair) -> Result<BaseFamily, FamilyError> {
    BaseFamily::from_name(&pair.family).ok_or_else(|| FamilyError::NotBaseFamily(pair.family.clone()))
}

fn layer_indices(base: BaseFamily, layer: LayerType, left: bool) -> Vec<usize> {
    let (ls, rs) = base.subsets();
    let subset = if left { ls } else { rs };
    let total = base.kind().vertex_count();
    match layer {
        LayerType::Ori => subset,
        LayerType::Com => (0..total).filter(|i| !subset.contains(i)).collect(),
        LayerType::All => (0..total).collect(),
    }
}

fn layered_cloud(base: BaseFamily, spec: &[LayerSpec], left: bool) -> PointCloud {
    let unit = polyhedron(base.kind(), 1.0).expect("unit radius");
    let mut coords = Vec::new();
    for layer in spec {
        for idx in layer_indices(base, layer.layer_type, left) {
            let v = unit.vertices[idx];
            coords.push([
                v[0] * layer.radius,
                v[1] * layer.radius,
                v[2] * layer.radius,
            ]);
        }
    }
    build_point_cloud(coords, None).unwrap()
}

/// Builds the augmented pair from a fixed base pair and a layer spec.
pub fn augment_pair(
    base: &CounterexamplePair,
    spec: &[LayerSpec],
) -> Result<CounterexamplePair, FamilyError> {
    let family = base_of(base)?;
    if spec.is_empty() {
        return Err(FamilyError::EmptySpec);
    }
    for (i, a) in spec.iter().enumerate() {
        if a.radius <= 0.0 {
            return Err(FamilyError::NonPositive {
                name: "radius",
                value: a.radius,
            });
        }
        if spec[i + 1..].iter().any(|b| b.radius == a.radius) {
            return Err(FamilyError::DuplicateRadius(a.radius));
        }
    }
    if spec.iter().all(|l| l.layer_type == LayerType::All) {
        return Err(FamilyError::AllLayersAll);
    }
    let layers_json: Vec<_> = spec
        .iter()
        .map(|l| json!({ "type": l.layer_type.name(), "radius": l.radius }))
        .collect();
    Ok(CounterexamplePair {
        left: layered_cloud(family, spec, true),
        right: layered_cloud(family, spec, false),
        family: "aug".into(),
        params: json!({ "base": family.name(), "layers": layers_json }),
        expected_kinds: None,
    })
}

/// The full polyhedron on both sides (identical clouds); the object the
/// stable-state check runs on.
pub fn all_layer_pair(base: &CounterexamplePair) -> Result<CounterexamplePair, FamilyError> {
    let family = base_of(base)?;
    let spec = [LayerSpec::new(LayerType::All, 1.0)];
    Ok(CounterexamplePair {
        left: layered_cloud(family, &spec, true),
        right: layered_cloud(family, &spec, false),
        family: "all".into(),
        params: json!({ "base": family.name() }),
        expected_kinds: None,
    })
}

/// Stable label states of the induced base subset and complement clouds,
/// computed by running node-level refinement to stabilization jointly
/// across the two sides (so labels are comparable), with disjoint id spaces
/// for the two layers.
pub fn complementary_labels(
    base: &CounterexamplePair,
) -> Result<ComplementaryLabels, FamilyError> {
    let family = base_of(base)?;
    let cfg = RefinementConfig::new(Method::Wl1e, 1);
    let run_joint = |layer: LayerType| -> (Vec<u32>, Vec<u32>) {
        let l = layered_cloud(family, &[LayerSpec::new(layer, 1.0)], true);
        let r = layered_cloud(family, &[LayerSpec::new(layer, 1.0)], false);
        let res = refine_pair(&l, &r, &cfg).expect("node-level refinement");
        (res.left.final_table.colors, res.right.final_table.colors)
    };
    let (lo, ro) = run_joint(LayerType::Ori);
    let (lc, rc) = run_joint(LayerType::Com);
    let offset = lo.iter().chain(ro.iter()).copied().max().unwrap_or(0) + 1;
    Ok(ComplementaryLabels {
        left_ori: LabelState { assignment: lo },
        left_com: LabelState {
            assignment: lc.iter().map(|c| c + offset).collect(),
        },
        right_ori: LabelState { assignment: ro },
        right_com: LabelState {
            assignment: rc.iter().map(|c| c + offset).collect(),
        },
    })
}

/// Joins the stable subset and complement labelings into one labeling of the
/// full polyhedron, per side.
pub fn union_label_state(base: &CounterexamplePair) -> Result<(LabelState, LabelState), FamilyError> {
    let family = base_of(base)?;
    let labels = complementary_labels(base)?;
    let total = family.kind().vertex_count();
    let join = |left: bool, ori: &LabelState, com: &LabelState| -> LabelState {
        let ori_idx = layer_indices(family, LayerType::Ori, left);
        let com_idx = layer_indices(family, LayerType::Com, left);
        let mut assignment = vec![0u32; total];
        for (pos, &i) in ori_idx.iter().enumerate() {
            assignment[i] = ori.assignment[pos];
        }
        for (pos, &i) in com_idx.iter().enumerate() {
            assignment[i] = com.assignment[pos];
        }
        LabelState { assignment }
    };
    Ok((
        join(true, &labels.left_ori, &labels.left_com),
        join(false, &labels.right_ori, &labels.right_com),
    ))
}

/// True iff one node-refinement round starting from the given labelings
/// refines neither side's partition and the two sides' label histograms
/// stay equal, i.e. the pair of labelings is a stable state the refinement
/// cannot use to tell the clouds apart.
pub fn verify_stable_state(
    pair: &CounterexamplePair,
    init_left: &LabelState,
    init_right: &LabelState,
    tau: f64,
) -> bool {
    assert_eq!(init_left.assignment.len(), pair.left.len(), "left labeling must be total");
    assert_eq!(init_right.assignment.len(), pair.right.len(), "right labeling must be total");
    let mut left = pair.left.clone();
    let mut right = pair.right.clone();
    left.labels = init_left.assignment.clone();
    right.labels = init_right.assignment.clone();
    let cfg = RefinementConfig::new(Method::Wl1e, 1)
        .with_rounds(1)
        .with_tau(tau);
    let res = refine_pair(&left, &right, &cfg).expect("node-level refinement");
    res.left.stable_round == Some(0) && !res.verdict.distinguished
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexamples::families::figure2_pair;
    use crate::counterexamples::verify::verify_counterexample;
    use crate::geometry::{canonicalize_distances, SquareMatrix};
    use crate::DEFAULT_TAU;

    #[test]
    fn single_ori_layer_is_the_identity() {
        let base = figure2_pair();
        let aug = augment_pair(&base, &[LayerSpec::new(LayerType::Ori, 1.0)]).unwrap();
        assert_eq!(aug.left.coords, base.left.coords);
        assert_eq!(aug.right.coords, base.right.coords);
    }

    #[test]
    fn three_layer_augmentation_is_a_counterexample() {
        let base = figure2_pair();
        let spec = [
            LayerSpec::new(LayerType::Ori, 1.0),
            LayerSpec::new(LayerType::All, 2.0),
            LayerSpec::new(LayerType::Com, 3.0),
        ];
        let aug = augment_pair(&base, &spec).unwrap();
        assert_eq!(aug.left.len(), 6 + 12 + 6);
        assert_eq!(aug.right.len(), 6 + 12 + 6);
        let report = verify_counterexample(&aug, DEFAULT_TAU);
        assert!(report.pass, "{:?}", report.failures);
    }

    #[test]
    fn spec_validation() {
        let base = figure2_pair();
        assert!(matches!(
            augment_pair(&base, &[]),
            Err(FamilyError::EmptySpec)
        ));
        assert!(matches!(
            augment_pair(
                &base,
                &[
                    LayerSpec::new(LayerType::Ori, 1.0),
                    LayerSpec::new(LayerType::Com, 1.0)
                ]
            ),
            Err(FamilyError::DuplicateRadius(_))
        ));
        assert!(matches!(
            augment_pair(&base, &[LayerSpec::new(LayerType::All, 1.0)]),
            Err(FamilyError::AllLayersAll)
        ));
        let not_base = crate::counterexamples::two_cubes_pair(1.0, 2.0).unwrap();
        assert!(matches!(
            augment_pair(&not_base, &[LayerSpec::new(LayerType::Ori, 1.0)]),
            Err(FamilyError::NotBaseFamily(_))
        ));
    }

    #[test]
    fn layer_radii_stay_in_distinct_distance_classes() {
        let base = figure2_pair();
        let spec = [
            LayerSpec::new(LayerType::Ori, 0.5),
            LayerSpec::new(LayerType::All, 1.7),
            LayerSpec::new(LayerType::Com, 3.9),
        ];
        let aug = augment_pair(&base, &spec).unwrap();
        // distances-to-center of all nodes quantize into exactly 3 classes
        let norms: Vec<f64> = aug
            .left
            .coords
            .iter()
            .map(|c| crate::geometry::norm(*c))
            .collect();
        let m = SquareMatrix {
            n: 1,
            data: norms,
        };
        let q = canonicalize_distances(&[&m], DEFAULT_TAU);
        let distinct: std::collections::HashSet<u32> = q[0].classes.iter().copied().collect();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn complementary_labels_match_known_kind_structure() {
        // ori side of the icosahedron base: one kind everywhere
        let labels = complementary_labels(&figure2_pair()).unwrap();
        let distinct = |s: &LabelState| -> usize {
            s.assignment
                .iter()
                .collect::<std::collections::HashSet<_>>()
                .len()
        };
        assert_eq!(distinct(&labels.left_ori), 1);
        assert_eq!(distinct(&labels.right_ori), 1);
        // ori and com use disjoint label spaces
        assert!(labels
            .left_ori
            .assignment
            .iter()
            .all(|l| !labels.left_com.assignment.contains(l)));

        // six-node dodecahedron base: 2 kinds on ori, 4 kinds on its
        // complementary fourteen-node side
        let base = crate::counterexamples::dodecahedron_pair(
            crate::counterexamples::DodecVariant::Size6,
        );
        let labels = complementary_labels(&base).unwrap();
        assert_eq!(distinct(&labels.left_ori), 2);
        assert_eq!(distinct(&labels.left_com), 4);
    }

    #[test]
    fn union_labels_are_a_stable_state_of_the_full_polyhedron() {
        for family in BaseFamily::ALL {
            let base = family.pair();
            let all = all_layer_pair(&base).unwrap();
            let (init_l, init_r) = union_label_state(&base).unwrap();
            assert!(
                verify_stable_state(&all, &init_l, &init_r, DEFAULT_TAU),
                "{}",
                family.name()
            );
        }
    }

    #[test]
    fn union_distinct_initial_labels_fail_the_histogram_criterion() {
        let base = figure2_pair();
        let all = all_layer_pair(&base).unwrap();
        let n = all.left.len();
        let init_l = LabelState {
            assignment: (0..n as u32).collect(),
        };
        let init_r = LabelState {
            assignment: (n as u32..2 * n as u32).collect(),
        };
        assert!(!verify_stable_state(&all, &init_l, &init_r, DEFAULT_TAU));
        // but per-side identical all-distinct labelings on identical clouds
        // are a stable indistinguishable state
        let same = LabelState {
            assignment: (0..n as u32).collect(),
        };
        assert!(verify_stable_state(&all, &same, &same, DEFAULT_TAU));
    }

    #[test]
    fn uniform_labels_on_generic_pair_refine_in_one_round() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let coords: Vec<[f64; 3]> = (0..6)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let left = build_point_cloud(coords.clone(), None).unwrap();
        let mut moved = coords;
        moved[0][0] += 0.3;
        let right = build_point_cloud(moved, None).unwrap();
        let pair = CounterexamplePair {
            left,
            right,
            family: "test".into(),
            params: serde_json::json!({}),
            expected_kinds: None,
        };
        let uniform = LabelState {
            assignment: vec![0; 6],
        };
        assert!(!verify_stable_state(&pair, &uniform, &uniform, DEFAULT_TAU));
    }
}
