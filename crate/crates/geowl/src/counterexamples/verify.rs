//! The per-pair verification program: a counterexample must be
//! non-congruent under the exact oracle, indistinguishable by node-level
//! refinement, and (when the family states them) show the expected stable
//! kind structure.

use crate::counterexamples::families::{CounterexamplePair, KindSpec};
use crate::geometry::congruent_bruteforce;
use crate::wl::{refine_pair, Method, RefinementConfig};

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub family: String,
    pub params: serde_json::Value,
    pub oracle_congruent: bool,
    pub oracle_max_residual: Option<f64>,
    pub wl1e_distinguished: bool,
    pub separation_round: Option<usize>,
    /// Stable class sizes (largest first) per side.
    pub kind_sizes_left: Vec<usize>,
    pub kind_sizes_right: Vec<usize>,
    pub expected_kinds: Option<KindSpec>,
    pub kinds_match: Option<bool>,
    pub pass: bool,
    pub failures: Vec<String>,
}

pub fn verify_counterexample(pair: &CounterexamplePair, tau: f64) -> VerificationReport {
    let oracle = congruent_bruteforce(&pair.left, &pair.right, tau);
    let cfg = RefinementConfig::new(Method::Wl1e, 1).with_tau(tau);
    let run = refine_pair(&pair.left, &pair.right, &cfg).expect("node-level refinement");
    let kind_sizes_left = run.left.node_class_sizes();
    let kind_sizes_right = run.right.node_class_sizes();

    let kinds_match = pair
        .expected_kinds
        .as_ref()
        .map(|spec| spec.matches(&kind_sizes_left) && spec.matches(&kind_sizes_right));

    let mut failures = Vec::new();
    if oracle.congruent {
        failures.push("congruent".to_string());
    }
    if run.verdict.distinguished {
        failures.push("distinguished by 1-WL-E".to_string());
    }
    if kinds_match == Some(false) {
        failures.push(format!(
            "kind counts mismatch: left {kind_sizes_left:?}, right {kind_sizes_right:?}"
        ));
    }

    VerificationReport {
        family: pair.family.clone(),
        params: pair.params.clone(),
        oracle_congruent: oracle.congruent,
        oracle_max_residual: oracle.congruent.then_some(oracle.max_residual),
        wl1e_distinguished: run.verdict.distinguished,
        separation_round: run.verdict.separation_round,
        kind_sizes_left,
        kind_sizes_right,
        expected_kinds: pair.expected_kinds.clone(),
        kinds_match,
        pass: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexamples::families::figure2_pair;
    use crate::geometry::{apply_e3, random_e3};
    use crate::DEFAULT_TAU;

    #[test]
    fn golden_pair_passes() {
        let report = verify_counterexample(&figure2_pair(), DEFAULT_TAU);
        assert!(report.pass, "{:?}", report.failures);
        assert_eq!(report.kind_sizes_left, vec![6]);
    }

    #[test]
    fn congruent_pair_fails_with_reason() {
        let base = figure2_pair();
        let g = random_e3(3);
        let pair = CounterexamplePair {
            right: apply_e3(&base.left, &g).unwrap(),
            left: base.left,
            family: "test".into(),
            params: serde_json::json!({}),
            expected_kinds: None,
        };
        let report = verify_counterexample(&pair, DEFAULT_TAU);
        assert!(!report.pass);
        assert!(report.failures.iter().any(|f| f == "congruent"));
        assert!(report.oracle_max_residual.unwrap() <= DEFAULT_TAU);
    }

    #[test]
    fn perturbed_pair_fails_as_distinguished() {
        let base = figure2_pair();
        let mut right = base.left.clone();
        right.coords[2][1] += 0.05;
        let pair = CounterexamplePair {
            left: base.left,
            right,
            family: "test".into(),
            params: serde_json::json!({}),
            expected_kinds: None,
        };
        let report = verify_counterexample(&pair, DEFAULT_TAU);
        assert!(!report.pass);
        assert!(report
            .failures
            .iter()
            .any(|f| f.contains("distinguished")));
    }
}
