//! Integration tests for the classifier: agreement with the closed-form
//! case table and stability of verdicts under off-vertex perturbations.

use nlsmooth::catalog;
use nlsmooth::classifier::{classify, VerdictKind};
use nlsmooth::geometry::ScalarFn;
use nlsmooth::pencil::{laplace_halfpi_oracle, HalfPlaneCase};

#[test]
fn classify_agrees_with_oracle_on_grid() {
    for i in 0..41 {
        let s = -3.0 + 6.0 * i as f64 / 40.0;
        let spec = catalog::s_family_spec::<f64>(s);
        let verdict = classify(&spec).unwrap();
        let expected = match laplace_halfpi_oracle(s) {
            HalfPlaneCase::NoEigenvalues => VerdictKind::Preserves,
            HalfPlaneCase::ProperMinusI => VerdictKind::Border,
            HalfPlaneCase::Improper { .. } => VerdictKind::Violates,
        };
        assert_eq!(verdict.kind, expected, "s = {s}");
    }
}

/// Perturbing coefficient profiles away from the vertex (keeping the
/// frozen values) never changes the verdict kind.
#[test]
fn verdict_invariant_under_off_vertex_perturbation() {
    for (s, kind) in [
        (1.0, VerdictKind::Preserves),
        (0.0, VerdictKind::Border),
        (-1.0, VerdictKind::Violates),
    ] {
        let mut spec = catalog::s_family_spec::<f64>(s);
        for t in spec.orbits[0].terms.iter_mut().filter(|t| !t.is_identity()) {
            // b(r) = b(0) + 0.7 r^2 - 0.2 r^3
            t.weight_profile = Some(ScalarFn::Poly(vec![t.weight, 0.0, 0.7, -0.2]));
        }
        let verdict = classify(&spec).unwrap();
        assert_eq!(verdict.kind, kind, "s = {s}");
    }
}

/// The witness's dyadic W^2 levels grow at the rate set by the eigenvalue:
/// 2^{2 m (1 + Im lambda0)} per level for the s = -1 model.
#[test]
fn witness_blowup_rate_matches_eigenvalue() {
    let spec = catalog::s_family_spec::<f64>(-1.0);
    let verdict = classify(&spec).unwrap();
    let w = verdict.witness.expect("violating spec must carry a witness");
    let expected_ratio = 2f64.powf(2.0 * (1.0 + w.lambda0.im)); // 2^{2/3}
    let n = w.w2_dyadic.len();
    for i in n - 6..n {
        let ratio = w.w2_dyadic[i] / w.w2_dyadic[i - 1];
        assert!(
            (ratio / expected_ratio - 1.0).abs() < 0.05,
            "level {i}: ratio {ratio} vs expected {expected_ratio}"
        );
    }
}

/// Border obligations carry evaluated statuses when the spec provides the
/// data, and the failing configuration is pinpointed.
#[test]
fn border_obligations_pinpoint_failures() {
    use nlsmooth::classifier::{ObligationKind, ObligationStatus};
    // exterior coefficient with a(0) != 0: both vertex checks fail
    let spec = catalog::border_with_exterior_spec::<f64>(0.5);
    let verdict = classify(&spec).unwrap();
    assert_eq!(verdict.kind, VerdictKind::Border);
    let vertex = verdict
        .obligations
        .iter()
        .find(|o| o.kind == ObligationKind::ExteriorVertexValue)
        .unwrap();
    assert_eq!(vertex.status, ObligationStatus::Failed);
    let admiss = verdict
        .obligations
        .iter()
        .find(|o| o.kind == ObligationKind::AdmissibilityGenerators)
        .unwrap();
    assert_eq!(admiss.status, ObligationStatus::Failed);
}
