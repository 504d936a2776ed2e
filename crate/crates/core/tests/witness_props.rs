//! Witness-construction properties beyond the acceptance checks.

use nlsmooth::catalog;
use nlsmooth::classifier::{witness_singular_function, WitnessEval};
use nlsmooth::geometry::PrincipalPart;
use nlsmooth::num::c;
use nlsmooth::pencil::{Pencil, Properness};

/// For any coefficient pair (c0, c1) and any lambda, the log-augmented
/// field `r^{i lambda} (Phi1 + i ln r Phi0)` with
/// `Phi1 = basis . c1 + d/dlambda basis . c0` solves the interior equation
/// identically (it is the lambda-derivative of an interior-homogeneous
/// family). This pins down the log-term algebra of the evaluator;
/// the boundary rows are of course not satisfied for arbitrary chains.
#[test]
fn log_term_interior_identity_for_arbitrary_chains() {
    let model = catalog::halfpi_model::<f64>(0, 0.7, -0.2);
    let pencil = Pencil::new(&model);
    let lambda = c(0.4, -0.8); // not an eigenvalue, deliberately
    let chain = vec![
        vec![c(1.0, 0.3), c(-0.5, 0.2)], // c0
        vec![c(0.2, -0.4), c(0.9, 0.1)], // c1
    ];
    let ev = WitnessEval::new(&pencil, lambda, &chain, 1, 0.03125);
    for &r in &[0.5, 0.02, 1e-4] {
        for &omega in &[-1.2, 0.0, 0.3, 1.5] {
            let res = ev.interior_residual(0, r, omega);
            assert!(res < 1e-9, "residual {res} at r = {r}, omega = {omega}");
        }
    }
}

/// End-to-end witness on a non-Laplace principal part: the shooting path
/// must produce a band eigenvalue whose witness satisfies the boundary
/// rows to solver accuracy.
#[test]
fn witness_for_general_principal_part() {
    let mut model = catalog::halfpi_model::<f64>(0, -0.5, -0.5);
    model.principal_part = PrincipalPart::GeneralConstantCoefficient(vec![[1.0, 0.25, 1.0]]);
    // tune b2 so that -i is *not* involved: find the band eigenvalue of
    // this perturbed operator directly
    let pencil = Pencil::new(&model);
    let found = pencil.find_eigenvalues((-1.0, -1e-6), (-6.0, 6.0)).unwrap();
    assert!(!found.eigenvalues.is_empty(), "perturbed model lost its band eigenvalue");
    let (lambda, _) = found.eigenvalues[0];
    assert!(lambda.im > -1.0 + 1e-6 && lambda.im < -1e-6);
    let js = pencil.jordan_structure(lambda).unwrap();
    let verdict = pencil.is_proper(&js);
    assert_eq!(verdict.proper, Properness::Improper);
    let w = witness_singular_function(&pencil, &js, verdict.proper, 0.03125).unwrap();
    assert_eq!(w.log_power, 0);
    assert!(w.boundary_residual < 1e-8, "boundary residual {}", w.boundary_residual);
    assert!(w.interior_residual < 1e-8, "interior residual {}", w.interior_residual);
}

/// Witness construction refuses proper eigenvalues.
#[test]
fn witness_refuses_proper_eigenvalue() {
    let model = catalog::halfpi_model::<f64>(0, 0.4, -0.4);
    let pencil = Pencil::new(&model);
    let js = pencil.jordan_structure(c(0.0, -1.0)).unwrap();
    let err = witness_singular_function(&pencil, &js, Properness::Proper, 0.03);
    assert!(err.is_err());
}
