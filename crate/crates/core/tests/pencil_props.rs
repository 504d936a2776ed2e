//! Property tests for the pencil module.

use nlsmooth::catalog;
use nlsmooth::geometry::PrincipalPart;
use nlsmooth::num::c;
use nlsmooth::pencil::{laplace_halfpi_oracle, Band, HalfPlaneCase, Pencil, Properness};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The closed-form case table agrees with the eigenvalue search plus the
/// properness test on a 41-point grid of weight sums.
#[test]
fn oracle_agrees_with_search_on_grid() {
    for i in 0..41 {
        let s = -3.0 + 6.0 * i as f64 / 40.0;
        let model = catalog::halfpi_model::<f64>(0, s / 2.0, s / 2.0);
        let report = Pencil::new(&model).analyze(Band::regularity(), (-6.0, 6.0)).unwrap();
        match laplace_halfpi_oracle(s) {
            HalfPlaneCase::NoEigenvalues => {
                assert!(report.eigenvalues.is_empty(), "s = {s}: expected empty band");
            }
            HalfPlaneCase::ProperMinusI => {
                assert_eq!(report.eigenvalues.len(), 1, "s = {s}");
                let e = &report.eigenvalues[0];
                assert!((e.lambda - c(0.0, -1.0)).norm() < 1e-8);
                assert_eq!(e.proper, Properness::Proper, "s = {s}");
            }
            HalfPlaneCase::Improper { im_lambda } => {
                assert_eq!(report.eigenvalues.len(), 1, "s = {s}");
                let e = &report.eigenvalues[0];
                assert!(
                    (e.lambda - c(0.0, im_lambda)).norm() < 1e-8,
                    "s = {s}: {:?} vs {im_lambda}",
                    e.lambda
                );
                assert_eq!(e.proper, Properness::Improper, "s = {s}");
            }
        }
        // argument-principle closure on every tested model
        assert_eq!(report.argument_principle_count, report.total_multiplicity(), "s = {s}");
    }
}

/// Shooting-based characteristic matrix agrees with the analytic Laplace
/// fast path entrywise to 1e-10 for 50 random lambda in the band.
#[test]
fn shooting_matrix_matches_analytic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fast = catalog::halfpi_model::<f64>(0, 0.35, -0.85);
    let mut slow = fast.clone();
    slow.principal_part = PrincipalPart::GeneralConstantCoefficient(vec![[1.0, 0.0, 1.0]]);
    let pf = Pencil::new(&fast);
    let ps = Pencil::new(&slow);
    for _ in 0..50 {
        let lambda = c(rng.gen_range(-4.0..4.0), rng.gen_range(-1.0..-0.001));
        let mf = pf.characteristic_matrix(lambda);
        let ms = ps.characteristic_matrix(lambda);
        let scale = mf.max_norm().max(1.0);
        for (a, b) in mf.data.iter().zip(&ms.data) {
            assert!(
                (a - b).norm() < 1e-10 * scale,
                "lambda = {lambda}: {a} vs {b} (scale {scale})"
            );
        }
    }
}

/// Analyticity smoke test: the determinant satisfies a discrete
/// Cauchy-Riemann identity at random band points.
#[test]
fn determinant_is_analytic_in_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let model = catalog::halfpi_model::<f64>(
            0,
            rng.gen_range(-1.2..1.2),
            rng.gen_range(-1.2..1.2),
        );
        let p = Pencil::new(&model);
        let lambda = c(rng.gen_range(-3.0..3.0), rng.gen_range(-0.9..-0.1));
        let h = 1e-7;
        let dre = (p.char_det(lambda + c(h, 0.0)) - p.char_det(lambda - c(h, 0.0)))
            / c(2.0 * h, 0.0);
        let dim = (p.char_det(lambda + c(0.0, h)) - p.char_det(lambda - c(0.0, h)))
            / c(0.0, 2.0 * h);
        assert!(
            (dre - dim).norm() < 1e-4 * dre.norm().max(1.0),
            "CR residual at {lambda}: {} vs {}",
            dre,
            dim
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// For real weights the determinant modulus is symmetric under the
    /// reflection lambda -> -conj(lambda), so the band eigenvalue set is.
    #[test]
    fn reflection_symmetry_for_real_weights(
        b1 in -1.5f64..1.5,
        b2 in -1.5f64..1.5,
        re in 0.05f64..3.0,
        im in -0.95f64..-0.05,
    ) {
        let model = catalog::halfpi_model::<f64>(0, b1, b2);
        let p = Pencil::new(&model);
        let a = p.char_det(c(re, im)).norm();
        let b = p.char_det(c(-re, im)).norm();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(b).max(1.0));
    }

    /// Winding count over the band equals the enumerated multiplicity for
    /// random real-weight models.
    #[test]
    fn count_matches_enumeration(b1 in -1.4f64..1.4, b2 in -1.4f64..1.4) {
        let model = catalog::halfpi_model::<f64>(0, b1, b2);
        let p = Pencil::new(&model);
        // skip parameter sets within 1e-3 of the case boundaries, where an
        // eigenvalue sits on / hugs the search contour
        let s = b1 + b2;
        prop_assume!((s - 0.0).abs() > 1e-3 && (s + 2.0).abs() > 1e-3);
        let found = p.find_eigenvalues((-1.0, -1e-6), (-6.0, 6.0)).unwrap();
        let total: usize = found.eigenvalues.iter().map(|(_, m)| m).sum();
        let count = p
            .count_zeros_in_band((-1.0 - 1e-6, -1e-6), (-6.0, 6.0))
            .unwrap();
        prop_assert_eq!(total as i64, count);
    }
}
