//! Property tests for the consistency machinery.

use nlsmooth::catalog;
use nlsmooth::consistency::{
    consistency_of_traces, dependency_betas, hat_operators, weighted_seminorm_diagnostic,
    BetaTable, BoundaryTrace, DependentRow, HatOperatorMatrix, IntegralVerdict,
};
use nlsmooth::geometry::{ScalarFn, Side};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Scaling all traces by c multiplies every dyadic integral by c^2 and
    /// never changes the verdict.
    #[test]
    fn scale_covariance(scale in 0.01f64..100.0, p in 1usize..4) {
        let base = BoundaryTrace::from_profile(
            &ScalarFn::Poly({
                let mut cs = vec![0.0; p];
                cs.push(1.0);
                cs
            }),
            1.0,
            Side::Lower,
            0.25,
            24,
        );
        let scaled = BoundaryTrace::combine(&[(scale, &base)]).unwrap();
        let d0 = weighted_seminorm_diagnostic(&base);
        let d1 = weighted_seminorm_diagnostic(&scaled);
        prop_assert_eq!(d0.verdict, d1.verdict);
        for (a, b) in d0.integrals.iter().zip(&d1.integrals) {
            prop_assert!((b - scale * scale * a).abs() <= 1e-10 * b.abs().max(1e-280));
        }
    }

    /// Reconstruction residual of the beta expansion stays at rounding
    /// level for every rank-deficient vertex-weight configuration.
    #[test]
    fn beta_reconstruction_residual(b1 in -2.0f64..2.0) {
        let model = catalog::halfpi_model::<f64>(0, b1, -b1);
        let hat = hat_operators(&model);
        let bt = dependency_betas(&hat).unwrap();
        let scale = hat.max_norm();
        for dep in &bt.dependent {
            let row = 2 * dep.angle + dep.side.index();
            for col in 0..hat.rows[row].len() {
                let mut fit = 0.0;
                for ((j, s), beta) in bt.independent.iter().zip(&dep.betas) {
                    fit += beta * hat.rows[2 * j + s.index()][col];
                }
                prop_assert!((hat.rows[row][col] - fit).abs() <= 1e-12 * scale);
            }
        }
    }
}

/// The verdict of the consistency diagnostic does not depend on which
/// maximal independent subsystem is chosen: reversing the row scan order
/// flips the roles of the rows but yields the same verdicts.
#[test]
fn verdict_invariant_under_pivot_order() {
    let model = catalog::halfpi_model::<f64>(0, 0.3, -0.3);
    let hat = hat_operators(&model);
    let bt = dependency_betas(&hat).unwrap();
    // reversed scan order: swap the two rows, relabel sides accordingly
    let hat_rev = HatOperatorMatrix {
        orbit_id: 0,
        n_angles: 1,
        rows: vec![hat.rows[1].clone(), hat.rows[0].clone()],
    };
    let bt_rev_raw = dependency_betas(&hat_rev).unwrap();
    // in the reversed labeling, row 0 = Upper, row 1 = Lower
    let flip = |s: Side| match s {
        Side::Lower => Side::Upper,
        Side::Upper => Side::Lower,
    };
    let bt_rev = BetaTable {
        orbit_id: 0,
        independent: bt_rev_raw.independent.iter().map(|(j, s)| (*j, flip(*s))).collect(),
        dependent: bt_rev_raw
            .dependent
            .iter()
            .map(|d| DependentRow { angle: d.angle, side: flip(d.side), betas: d.betas.clone() })
            .collect(),
    };
    assert_ne!(bt.dependent[0].side, bt_rev.dependent[0].side);

    for (profile_lo, profile_up, expect) in [
        (ScalarFn::Poly(vec![0.0, 1.0]), ScalarFn::Zero, IntegralVerdict::Divergent),
        (ScalarFn::Poly(vec![1.0, 0.0, 2.0]), ScalarFn::Poly(vec![-3.0, 0.0, -2.0]), IntegralVerdict::Finite),
        (ScalarFn::Zero, ScalarFn::Zero, IntegralVerdict::Finite),
    ] {
        let trace_of = |_, side: Side| {
            let f = if side == Side::Lower { &profile_lo } else { &profile_up };
            BoundaryTrace::from_profile(f, std::f64::consts::FRAC_PI_2, side, 0.25, 24)
        };
        let a = consistency_of_traces(&bt, &trace_of).unwrap();
        let b = consistency_of_traces(&bt_rev, &trace_of).unwrap();
        assert_eq!(a.aggregate, expect);
        assert_eq!(a.aggregate, b.aggregate);
    }
}

/// Traces lying in the weighted class (pure powers r^{1+delta}) always pass.
#[test]
fn sufficiency_for_weighted_class_members() {
    for delta in [0.3, 0.4, 0.75, 1.0, 2.0] {
        let radii: Vec<f64> = (0..=24).map(|m| 0.25 * 2f64.powi(-m)).collect();
        let values: Vec<f64> = radii.iter().map(|r| r.powf(1.0 + delta)).collect();
        let mids: Vec<f64> = radii.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let derivs: Vec<f64> = mids.iter().map(|r| (1.0 + delta) * r.powf(delta)).collect();
        let tr = BoundaryTrace { radii, values, midpoints: mids, derivs };
        let d = weighted_seminorm_diagnostic(&tr);
        assert_eq!(d.verdict, IntegralVerdict::Finite, "delta = {delta}");
    }
}
