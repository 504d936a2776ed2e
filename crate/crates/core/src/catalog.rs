//! Built-in example problems.
//!
//! The workhorse geometry is the half-plane model: one angle of full opening
//! pi (half-opening pi/2) whose two sides are coupled to the interior ray
//! `omega = 0` by rotations through -+ pi/2 with unit homothety and vertex
//! weights `b_1`, `b_2`. Its band spectrum is controlled entirely by
//! `s = b_1 + b_2` (see [`crate::pencil::laplace_halfpi_oracle`]).

use crate::geometry::{
    BoundaryRhs, ExteriorTerm, NonlocalTerm, OmegaApproach, OrbitModel, PrincipalPart,
    ProblemSpec, Rhs, ScalarFn, Side, Truncation,
};
use crate::num::Real;

/// Shipped example identifiers, in the order `examples list` prints them.
pub const EXAMPLE_IDS: [&str; 6] =
    ["case1", "case2", "case3", "dirichlet", "bitsadze-border", "two-orbits-mixed"];

/// Shipped experiment identifiers for the discrete solver.
pub const EXPERIMENT_IDS: [&str; 6] = [
    "singular-exponent-s-1",
    "manufactured-convergence",
    "border-violation-a-const",
    "w2-bounded-s1",
    "w2-border-consistent",
    "witness-roundtrip",
];

/// Half-plane model with vertex weights `b1` (lower side) and `b2` (upper).
pub fn halfpi_model<T: Real>(orbit_id: u32, b1: T, b2: T) -> OrbitModel<T> {
    let half = T::FRAC_PI_2();
    OrbitModel {
        orbit_id,
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
                rotation: half,
                homothety: T::one(),
            },
            NonlocalTerm {
                angle: 0,
                side: Side::Upper,
                target: 0,
                term: 1,
                weight: b2,
                weight_profile: None,
                rotation: -half,
                homothety: T::one(),
            },
        ],
        principal_part: PrincipalPart::Laplace,
    }
}

/// Half-plane model with variable weights `b_sigma(y) = beta_sigma * y2`.
pub fn halfpi_model_linear_weights<T: Real>(orbit_id: u32, beta1: T, beta2: T) -> OrbitModel<T> {
    let mut m = halfpi_model(orbit_id, T::zero(), T::zero());
    for t in m.terms.iter_mut().filter(|t| !t.is_identity()) {
        let beta = if t.side == Side::Lower { beta1 } else { beta2 };
        t.weight_profile = Some(ScalarFn::LinearY2(beta));
    }
    m
}

/// Pure Dirichlet model on the opening-pi angle (identity terms only).
pub fn dirichlet_model<T: Real>(orbit_id: u32) -> OrbitModel<T> {
    OrbitModel {
        orbit_id,
        angles: vec![T::FRAC_PI_2()],
        terms: vec![
            NonlocalTerm::identity(0, Side::Lower),
            NonlocalTerm::identity(0, Side::Upper),
        ],
        principal_part: PrincipalPart::Laplace,
    }
}

/// Two-point problem: orbit 0 carries weight sum `s_g`, orbit 1 `s_h`
/// (split evenly between the sides).
pub fn two_point_spec<T: Real>(s_g: T, s_h: T) -> ProblemSpec<T> {
    let half = T::of(0.5);
    ProblemSpec {
        orbits: vec![
            halfpi_model(0, s_g * half, s_g * half),
            halfpi_model(1, s_h * half, s_h * half),
        ],
        exterior_terms: vec![],
        rhs: Rhs { volume: ScalarFn::Const(T::one()), boundary: vec![] },
        truncation: Truncation::default(),
    }
}

/// Look up a shipped example spec by id.
pub fn example_spec<T: Real>(id: &str) -> Option<ProblemSpec<T>> {
    let spec = match id {
        // s = 1 at both points: no band eigenvalues anywhere.
        "case1" => two_point_spec(T::one(), T::one()),
        // s = 0 at the first point (asymmetric weights), s = 1 at the other:
        // border case with constant coefficients and consistent data.
        "case2" => ProblemSpec {
            orbits: vec![halfpi_model(0, T::of(0.3), T::of(-0.3)), halfpi_model(1, T::of(0.5), T::of(0.5))],
            exterior_terms: vec![],
            rhs: Rhs { volume: ScalarFn::Const(T::one()), boundary: vec![] },
            truncation: Truncation::default(),
        },
        // s = -1: one improper band eigenvalue at -(2/3) i.
        "case3" => ProblemSpec {
            orbits: vec![
                halfpi_model(0, T::of(-0.5), T::of(-0.5)),
                halfpi_model(1, T::of(0.5), T::of(0.5)),
            ],
            exterior_terms: vec![],
            rhs: Rhs { volume: ScalarFn::Const(T::one()), boundary: vec![] },
            truncation: Truncation::default(),
        },
        "dirichlet" => ProblemSpec {
            orbits: vec![dirichlet_model(0)],
            exterior_terms: vec![],
            rhs: Rhs {
                volume: ScalarFn::Zero,
                boundary: vec![
                    BoundaryRhs {
                        orbit_id: 0,
                        angle: 0,
                        side: Side::Lower,
                        value: ScalarFn::Zero,
                    },
                    BoundaryRhs {
                        orbit_id: 0,
                        angle: 0,
                        side: Side::Upper,
                        value: ScalarFn::Zero,
                    },
                ],
            },
            truncation: Truncation::default(),
        },
        // Variable weights beta1 y2, beta2 y2 with beta1 != beta2: border
        // case whose coefficient condition fails.
        "bitsadze-border" => ProblemSpec {
            orbits: vec![
                halfpi_model_linear_weights(0, T::one(), -T::one()),
                halfpi_model(1, T::of(0.5), T::of(0.5)),
            ],
            exterior_terms: vec![],
            rhs: Rhs { volume: ScalarFn::Const(T::one()), boundary: vec![] },
            truncation: Truncation::default(),
        },
        // Border at orbit 0, improper at orbit 1: overall verdict Violates.
        "two-orbits-mixed" => ProblemSpec {
            orbits: vec![
                halfpi_model(0, T::of(0.3), T::of(-0.3)),
                halfpi_model(1, T::of(-0.5), T::of(-0.5)),
            ],
            exterior_terms: vec![],
            rhs: Rhs { volume: ScalarFn::Const(T::one()), boundary: vec![] },
            truncation: Truncation::default(),
        },
        _ => return None,
    };
    Some(spec)
}

/// Spec for the half-plane family parameterized by the weight sum alone.
pub fn s_family_spec<T: Real>(s: T) -> ProblemSpec<T> {
    ProblemSpec {
        orbits: vec![halfpi_model(0, s * T::of(0.5), s * T::of(0.5))],
        exterior_terms: vec![],
        rhs: Rhs { volume: ScalarFn::Const(T::one()), boundary: vec![] },
        truncation: Truncation::default(),
    }
}

/// Border spec (s = 0) with a constant exterior coefficient `a`, realizing a
/// nonlocal term supported strictly inside the domain (image curve anchored
/// at an interior point).
pub fn border_with_exterior_spec<T: Real>(a0: T) -> ProblemSpec<T> {
    ProblemSpec {
        orbits: vec![halfpi_model(0, T::of(0.3), T::of(-0.3))],
        exterior_terms: vec![ExteriorTerm {
            orbit_id: 0,
            angle: 0,
            side: Side::Lower,
            coeff: ScalarFn::Const(a0),
            approach: OmegaApproach::InteriorPoint,
            anchor: [T::of(0.5), T::zero()],
            direction: [T::zero(), T::of(0.3)],
        }],
        rhs: Rhs { volume: ScalarFn::Const(T::one()), boundary: vec![] },
        truncation: Truncation::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::freeze;

    #[test]
    fn all_examples_validate_and_freeze() {
        for id in EXAMPLE_IDS {
            let spec: ProblemSpec<f64> = example_spec(id).unwrap();
            spec.validate().unwrap_or_else(|e| panic!("{id}: {e}"));
            let frozen = freeze(&spec).unwrap();
            assert!(!frozen.is_empty());
        }
        assert!(example_spec::<f64>("nope").is_none());
    }

    #[test]
    fn examples_round_trip_json() {
        for id in EXAMPLE_IDS {
            let spec: ProblemSpec<f64> = example_spec(id).unwrap();
            let js = serde_json::to_string_pretty(&spec).unwrap();
            let back: ProblemSpec<f64> = serde_json::from_str(&js).unwrap();
            assert_eq!(spec, back, "{id} did not round-trip");
        }
    }
}
