//! Acceptance suite: one check per shipped guarantee, each printed as a
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`.

use nlsmooth::catalog;
use nlsmooth::classifier::witness_singular_function;
use nlsmooth::consistency::{
    dependency_betas, hat_operators, null_vector_from_proper_eigenvector,
    weighted_seminorm_diagnostic, BoundaryTrace, IntegralVerdict,
};
use nlsmooth::geometry::{NonlocalTerm, OrbitModel, PrincipalPart, ScalarFn, Side};
use nlsmooth::num::c;
use nlsmooth::pencil::{Band, Pencil, Properness};
use nlsmooth::solver::{
    self, assemble, fit_singularity_exponent, solve, ExperimentReport,
    LogPolarGrid, ModelData, W2Trend,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

type Check = (&'static str, fn() -> Result<(), String>);

fn ok(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

/// 1. Closed-form eigenvalue reproduction for the improper family.
fn criterion_1() -> Result<(), String> {
    for s in [-1.9, -1.5, -1.0, -0.5, -0.1] {
        let model = catalog::halfpi_model::<f64>(0, s / 2.0, s / 2.0);
        let pencil = Pencil::new(&model);
        let started = Instant::now();
        let found = pencil
            .find_eigenvalues((-1.0, -1e-6), (-4.0, 4.0))
            .map_err(|e| format!("s = {s}: {e}"))?;
        let elapsed = started.elapsed();
        ok(elapsed.as_secs_f64() < 1.0, format!("s = {s}: took {elapsed:?} (>= 1 s)"))?;
        ok(
            found.eigenvalues.len() == 1,
            format!("s = {s}: expected 1 eigenvalue, got {}", found.eigenvalues.len()),
        )?;
        let expected = c(0.0, -(2.0 / std::f64::consts::PI) * (-s / 2.0).acos());
        let got = found.eigenvalues[0].0;
        ok(
            (got - expected).norm() <= 1e-8,
            format!("s = {s}: |{got} - {expected}| = {:.3e} > 1e-8", (got - expected).norm()),
        )?;
    }
    Ok(())
}

/// 2. Case-table reproduction with argument-principle closure.
fn criterion_2() -> Result<(), String> {
    let run = |s: f64| -> Result<nlsmooth::SpectralReport, String> {
        let model = catalog::halfpi_model::<f64>(0, s / 2.0, s / 2.0);
        Pencil::new(&model)
            .analyze(Band::regularity(), (-4.0, 4.0))
            .map_err(|e| format!("s = {s}: {e}"))
    };
    for s in [-3.0, -2.0, 0.5, 1.0] {
        let rep = run(s)?;
        ok(rep.eigenvalues.is_empty(), format!("s = {s}: expected empty band spectrum"))?;
        ok(rep.argument_principle_count == 0, format!("s = {s}: count != 0"))?;
    }
    let rep = run(0.0)?;
    ok(rep.eigenvalues.len() == 1, "s = 0: expected exactly one eigenvalue".into())?;
    let e = &rep.eigenvalues[0];
    ok(
        (e.lambda - c(0.0, -1.0)).norm() < 1e-8 && e.proper == Properness::Proper,
        format!("s = 0: expected proper -i, got {:?} {:?}", e.lambda, e.proper),
    )?;
    ok(
        rep.argument_principle_count == rep.total_multiplicity(),
        "s = 0: argument-principle count mismatch".into(),
    )?;
    for s in [-1.5, -1.0, -0.5] {
        let rep = run(s)?;
        ok(rep.eigenvalues.len() == 1, format!("s = {s}: expected one eigenvalue"))?;
        ok(
            rep.eigenvalues[0].proper == Properness::Improper,
            format!("s = {s}: expected improper"),
        )?;
        ok(
            rep.argument_principle_count == rep.total_multiplicity(),
            format!("s = {s}: closure mismatch"),
        )?;
    }
    Ok(())
}

/// 3. Beta machinery and the equivalence of the r-parameterized integrand
/// with the two-sided normal-derivative form.
fn criterion_3() -> Result<(), String> {
    for (name, model) in [
        ("halfpi s=0", catalog::halfpi_model::<f64>(0, 0.3, -0.3)),
        ("dirichlet", catalog::dirichlet_model::<f64>(0)),
    ] {
        let hat = hat_operators(&model);
        let bt = dependency_betas(&hat).map_err(|e| format!("{name}: {e}"))?;
        ok(bt.dependent.len() == 1, format!("{name}: expected one dependent row"))?;
        ok(
            (bt.dependent[0].betas[0] + 1.0).abs() < 1e-12,
            format!("{name}: beta = {}", bt.dependent[0].betas[0]),
        )?;
        let scale = hat.max_norm();
        for col in 0..2 {
            let recon = bt.dependent[0].betas[0] * hat.rows[0][col];
            ok(
                (hat.rows[1][col] - recon).abs() < 1e-12 * scale,
                format!("{name}: reconstruction residual too large in column {col}"),
            )?;
        }
    }

    // 20 random smooth trace pairs from one global polynomial f(y1, y2):
    // d/dr (Z2 + Z1) must equal the y2-form of the mismatch pointwise.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let eps = 0.25;
    for trial in 0..20 {
        let coeffs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // traces of f restricted to the two sides y = (0, -+r)
        let lower = ScalarFn::Poly(
            coeffs.iter().enumerate().map(|(j, c)| c * (-1.0f64).powi(j as i32)).collect(),
        );
        let upper = ScalarFn::Poly(coeffs.clone());
        let half = std::f64::consts::FRAC_PI_2;
        let z1 = BoundaryTrace::from_profile(&lower, half, Side::Lower, eps, 24);
        let z2 = BoundaryTrace::from_profile(&upper, half, Side::Upper, eps, 24);
        let combo = BoundaryTrace::combine(&[(1.0, &z2), (1.0, &z1)]).unwrap();
        for (i, &rho) in combo.midpoints.iter().enumerate() {
            // df/dy2 at (0, r) minus df/dy2 at (0, -r)
            let d = |y2: f64| -> f64 {
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(j, c)| c * j as f64 * y2.powi(j as i32 - 1))
                    .sum()
            };
            let y2_form = d(rho) - d(-rho);
            ok(
                (combo.derivs[i] - y2_form).abs() <= 1e-12 * (1.0 + y2_form.abs()),
                format!(
                    "trial {trial}: r-form {} vs y2-form {} at rho = {rho}",
                    combo.derivs[i], y2_form
                ),
            )?;
        }
    }
    Ok(())
}

/// 4. Consistency diagnostic calibration.
fn criterion_4() -> Result<(), String> {
    let eps = 0.25f64;
    let half = 1.0;
    let zero = BoundaryTrace::from_profile(&ScalarFn::Zero, half, Side::Lower, eps, 24);
    let d = weighted_seminorm_diagnostic(&zero);
    ok(d.verdict == IntegralVerdict::Finite, "zero trace not finite".into())?;

    let linear =
        BoundaryTrace::from_profile(&ScalarFn::Poly(vec![0.0, 1.0]), half, Side::Lower, eps, 24);
    let d = weighted_seminorm_diagnostic(&linear);
    ok(d.verdict == IntegralVerdict::Divergent, "linear trace not divergent".into())?;
    ok(
        d.slope.unwrap().abs() <= 0.02,
        format!("linear trace slope {} out of 0 +- 0.02", d.slope.unwrap()),
    )?;

    // r^{3/2}: exact midpoint derivative, I_m = (9/4)(r_m - r_{m+1})
    let radii: Vec<f64> = (0..=24).map(|m| eps * 2f64.powi(-m)).collect();
    let values: Vec<f64> = radii.iter().map(|r| r.powf(1.5)).collect();
    let mids: Vec<f64> = radii.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let derivs: Vec<f64> = mids.iter().map(|r| 1.5 * r.sqrt()).collect();
    let tr = BoundaryTrace { radii: radii.clone(), values, midpoints: mids, derivs };
    let d = weighted_seminorm_diagnostic(&tr);
    ok(d.verdict == IntegralVerdict::Finite, "r^{3/2} not finite".into())?;
    ok(
        (d.slope.unwrap() + 1.0).abs() <= 0.05,
        format!("r^{{3/2}} slope {} out of -1 +- 0.05", d.slope.unwrap()),
    )?;
    for (m, i_m) in d.integrals.iter().enumerate() {
        let exact = 2.25 * (radii[m] - radii[m + 1]);
        ok(
            (i_m - exact).abs() <= 0.01 * exact,
            format!("I_{m} = {i_m} deviates from closed form {exact} by > 1%"),
        )?;
    }
    Ok(())
}

/// 5. Witness validity for s = -1, b1 = b2 = -1/2.
fn criterion_5() -> Result<(), String> {
    let model = catalog::halfpi_model::<f64>(0, -0.5, -0.5);
    let pencil = Pencil::new(&model);
    let lambda = c(0.0, -2.0 / 3.0);
    let js = pencil.jordan_structure(lambda).map_err(|e| e.to_string())?;
    let cutoff = 0.5 * 0.0625; // d_chi min(eps, kappa2) for the defaults
    let w = witness_singular_function(&pencil, &js, Properness::Improper, cutoff)
        .map_err(|e| e.to_string())?;
    ok(
        w.interior_residual < 1e-10,
        format!("interior residual {} >= 1e-10", w.interior_residual),
    )?;
    ok(
        w.boundary_residual < 1e-10,
        format!("boundary residual {} >= 1e-10", w.boundary_residual),
    )?;
    // W = r^{2/3} cos(2 omega/3): check the angular profile
    let prof = &w.angular_profiles[0][0];
    let mid = prof.re[prof.re.len() / 2];
    for (omega, re) in prof.omega.iter().zip(&prof.re) {
        let expect = (2.0 * omega / 3.0).cos() / (2.0 * prof.omega[prof.re.len() / 2] / 3.0).cos();
        ok(
            (re / mid - expect).abs() < 1e-8,
            format!("profile at omega = {omega} deviates from cos(2w/3)"),
        )?;
    }
    let n = w.w2_dyadic.len();
    for i in n - 8..n {
        ok(
            w.w2_dyadic[i] > w.w2_dyadic[i - 1],
            format!(
                "dyadic W2 level {} not increasing: {} -> {}",
                i,
                w.w2_dyadic[i - 1],
                w.w2_dyadic[i]
            ),
        )?;
    }
    Ok(())
}

/// 6. Numerical singularity exponent on the default grid, with runtime and
/// truncation-doubling bounds.
fn criterion_6() -> Result<(), String> {
    let model = catalog::halfpi_model::<f64>(0, -0.5, -0.5);
    let grid = LogPolarGrid::new(&model, 256, 512, 12.0).map_err(|e| e.to_string())?;
    let data = ModelData {
        f0: &|_, _, _| 1.0,
        psi: &|_, _, _| 0.0,
        outer: &|_, _| 0.0,
        exterior: &[],
    };
    let started = Instant::now();
    let problem = assemble(&model, &grid, &data).map_err(|e| e.to_string())?;
    let sol = solve(&problem).map_err(|e| e.to_string())?;
    let fit = fit_singularity_exponent(&sol, 0, 0.0).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ok(
        elapsed.as_secs_f64() < 60.0,
        format!("256x512 solve + fit took {elapsed:?} (>= 60 s)"),
    )?;
    ok(
        (0.633..=0.700).contains(&fit.alpha),
        format!("alpha = {} outside [0.633, 0.700]", fit.alpha),
    )?;
    // doubling T
    let grid2 = LogPolarGrid::new(&model, 256, 1024, 24.0).map_err(|e| e.to_string())?;
    let problem2 = assemble(&model, &grid2, &data).map_err(|e| e.to_string())?;
    let sol2 = solve(&problem2).map_err(|e| e.to_string())?;
    let fit2 = fit_singularity_exponent(&sol2, 0, 0.0).map_err(|e| e.to_string())?;
    let change = (fit.alpha - fit2.alpha).abs() / fit.alpha;
    ok(
        change < 0.005,
        format!("doubling T moved alpha by {:.4}% (>= 0.5%)", 100.0 * change),
    )
}

/// 7. Smoothness dichotomy surrogate on the three shipped scenarios.
fn criterion_7() -> Result<(), String> {
    let expect = [
        ("w2-bounded-s1", W2Trend::Bounded),
        ("w2-border-consistent", W2Trend::Bounded),
        ("border-violation-a-const", W2Trend::Divergent),
    ];
    for (id, want) in expect {
        let run = solver::run_experiment::<f64>(id, None).map_err(|e| format!("{id}: {e}"))?;
        match run.report {
            ExperimentReport::W2 { trend, ref monitored, .. } => {
                ok(
                    trend == want,
                    format!("{id}: trend {trend:?} != {want:?} (monitored {monitored:?})"),
                )?;
            }
            _ => return Err(format!("{id}: unexpected report shape")),
        }
    }
    Ok(())
}

/// 8. Manufactured-solution convergence order >= 1.8 on both
/// configurations.
fn criterion_8() -> Result<(), String> {
    let run = solver::run_experiment::<f64>("manufactured-convergence", None)
        .map_err(|e| e.to_string())?;
    match run.report {
        ExperimentReport::Convergence { dirichlet, nonlocal } => {
            for (name, table) in [("dirichlet", dirichlet), ("nonlocal s=1", nonlocal)] {
                for (i, p) in table.orders.iter().enumerate() {
                    ok(
                        *p >= 1.8,
                        format!("{name}: order {} at refinement {i} (< 1.8)", p),
                    )?;
                }
            }
            Ok(())
        }
        _ => Err("unexpected report shape".into()),
    }
}

/// 9. Cross-module coherence on a randomized family of border-type models.
fn criterion_9() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut proper_seen = 0usize;
    let mut trials = 0usize;
    while trials < 50 {
        let half: f64 = rng.gen_range(0.4..std::f64::consts::PI - 0.4);
        let margin = 0.05 * half;
        let rot1 = rng.gen_range(margin..2.0 * half - margin);
        let rot2 = -rng.gen_range(margin..2.0 * half - margin);
        let chi1: f64 = rng.gen_range(0.6..1.8);
        let chi2: f64 = rng.gen_range(0.6..1.8);
        let b1: f64 = rng.gen_range(-1.5..1.5);
        // solve for b2 making the hat-operator matrix singular, so the
        // pencil acquires the eigenvalue -i with a polynomial eigenvector
        let tau = |ang: f64| (ang.cos(), ang.sin());
        let (t1x, t1y) = tau(-half);
        let (t2x, t2y) = tau(half);
        let (v1x, v1y) = tau(-half + rot1);
        let (v2x, v2y) = tau(half + rot2);
        let row1 = (t1x + b1 * chi1 * v1x, t1y + b1 * chi1 * v1y);
        let denom = row1.0 * (chi2 * v2y) - row1.1 * (chi2 * v2x);
        if denom.abs() < 1e-3 {
            continue;
        }
        let b2 = -(row1.0 * t2y - row1.1 * t2x) / denom;
        if !b2.is_finite() || b2.abs() > 20.0 {
            continue;
        }
        trials += 1;
        let model = OrbitModel {
            orbit_id: 0,
            angles: vec![half],
            terms: vec![
                NonlocalTerm::identity(0, Side::Lower),
                NonlocalTerm::identity(0, Side::Upper),
                NonlocalTerm {
                    angle: 0,
                    side: Side::Lower,
                    target: 0,
                    term: 1,
                    weight: b1,
                    weight_profile: None,
                    rotation: rot1,
                    homothety: chi1,
                },
                NonlocalTerm {
                    angle: 0,
                    side: Side::Upper,
                    target: 0,
                    term: 1,
                    weight: b2,
                    weight_profile: None,
                    rotation: rot2,
                    homothety: chi2,
                },
            ],
            principal_part: PrincipalPart::Laplace,
        };
        model.validate().map_err(|e| format!("trial {trials}: {e}"))?;
        let pencil = Pencil::new(&model);
        let scale = pencil.characteristic_matrix(c(0.0, -1.0)).max_norm();
        ok(
            pencil.char_det(c(0.0, -1.0)).norm() < 1e-8 * scale.powi(2),
            format!("trial {trials}: -i is not an eigenvalue as constructed"),
        )?;
        let js = pencil.jordan_structure(c(0.0, -1.0)).map_err(|e| format!("{e}"))?;
        if pencil.is_proper(&js).proper != Properness::Proper {
            continue;
        }
        proper_seen += 1;
        let q = null_vector_from_proper_eigenvector(&pencil, &js, 0)
            .map_err(|e| format!("trial {trials}: {e}"))?;
        let hat = hat_operators(&model);
        let residual = hat.apply(&q).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let qscale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ok(
            residual < 1e-8 * hat.max_norm().max(1.0) * qscale.max(1.0),
            format!("trial {trials}: annihilation residual {residual:.3e}"),
        )?;
    }
    ok(
        proper_seen >= 40,
        format!("only {proper_seen}/50 models reported proper -i; test too weak"),
    )
}

#[test]
fn acceptance() {
    let checks: Vec<Check> = vec![
        ("1 closed-form eigenvalue reproduction", criterion_1),
        ("2 case-table reproduction + closure", criterion_2),
        ("3 beta machinery + trace parameterization", criterion_3),
        ("4 consistency diagnostic calibration", criterion_4),
        ("5 witness validity", criterion_5),
        ("6 numerical singularity exponent", criterion_6),
        ("7 smoothness dichotomy surrogate", criterion_7),
        ("8 manufactured-solution convergence", criterion_8),
        ("9 cross-module coherence", criterion_9),
    ];
    let mut failures = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("criterion {name}: PASS"),
            Err(msg) => {
                println!("criterion {name}: FAIL ({msg})");
                failures.push(format!("{name}: {msg}"));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}
