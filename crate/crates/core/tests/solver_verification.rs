//! Solver verification beyond the unit tests: witness round-trip and the
//! manufactured-solution harness on the nonlocal configuration.

use nlsmooth::solver::{run_experiment, ExperimentReport};

/// Solving with the witness's induced forcing reproduces the truncated
/// witness, with errors decreasing monotonically under refinement.
#[test]
fn witness_round_trip_converges() {
    let run = run_experiment::<f64>("witness-roundtrip", None).unwrap();
    match run.report {
        ExperimentReport::WitnessRoundTrip { errors, monotone } => {
            assert!(monotone, "errors not monotone: {errors:?}");
            assert!(errors[0] < 1e-2, "coarse error too large: {errors:?}");
        }
        _ => panic!("unexpected report shape"),
    }
}

/// The border-consistent experiment pins the vertex constant through the
/// boundary rows; the fitted constant matches within 2%.
#[test]
fn border_constant_extraction() {
    let run = run_experiment::<f64>("w2-border-consistent", None).unwrap();
    match run.report {
        ExperimentReport::W2 { constant, trend, .. } => {
            let (fitted, expected) = constant.expect("experiment pins a constant");
            assert!(
                (fitted - expected).abs() <= 0.02 * expected.abs(),
                "fitted C = {fitted}, expected {expected}"
            );
            assert_eq!(trend, nlsmooth::solver::W2Trend::Bounded);
        }
        _ => panic!("unexpected report shape"),
    }
}
