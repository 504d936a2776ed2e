//! Domains with conjugation points, nonlocal transformations, and orbits.
//!
//! A problem lives on a plane domain whose boundary carries nonlocal
//! conditions; near each conjugation point the domain is a plane angle
//! `K_j = { |omega| < omega_j }` with sides `gamma_{j,sigma}` at
//! `omega = (-1)^sigma omega_j` (sigma = 1 is the lower side, sigma = 2 the
//! upper). The boundary transformations act near the vertices as rotation
//! plus homothety; [`freeze`] turns a validated spec into per-orbit model
//! problems with coefficients frozen at the vertex.

use crate::num::Real;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("transformation maps point {from} to {got:?}, which is not conjugation point {to}")]
    ImageNotConjugationPoint { from: u32, to: u32, got: [f64; 2] },
    #[error("unknown conjugation point id {0}")]
    UnknownPoint(u32),
    #[error("duplicate conjugation point id {0}")]
    DuplicateId(u32),
    #[error("transformation is not rotation+homothety near the vertex (max relative deviation {max_deviation:.3e} over sampled radii)")]
    ConditionK1Violation { max_deviation: f64 },
    #[error("half-opening {0} outside (0, pi)")]
    BadOpening(f64),
    #[error("nonlocal term ({angle},{side:?},{target},{term}): image ray at angle {image:.6} not strictly inside target angle of half-opening {opening:.6}")]
    ImageRayOutside { angle: usize, side: Side, target: usize, term: usize, image: f64, opening: f64 },
    #[error("homothety ratio must be positive, got {0}")]
    BadHomothety(f64),
    #[error("identity term must have weight 1, rotation 0, homothety 1")]
    BadIdentityTerm,
    #[error("term references angle index {0} out of range (model has {1} angles)")]
    AngleIndexOutOfRange(usize, usize),
    #[error("principal part is not properly elliptic at angle {0}: p12^2 >= p11*p22")]
    NotProperlyElliptic(usize),
    #[error("truncation radii must satisfy eps > kappa1 > kappa2 > 0")]
    BadTruncation,
    #[error("sampled table needs matching, strictly decreasing positive radii")]
    BadTable,
    #[error("scalar function spec `{0}` not recognized")]
    BadScalarFn(String),
}

/// Side index sigma of an angle: sigma = 1 is the ray at `omega = -omega_j`,
/// sigma = 2 the ray at `omega = +omega_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Lower, Side::Upper];

    /// `(-1)^sigma`: -1 on the lower side, +1 on the upper.
    pub fn sign<T: Real>(self) -> T {
        match self {
            Side::Lower => -T::one(),
            Side::Upper => T::one(),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Lower => 0,
            Side::Upper => 1,
        }
    }
}

impl From<Side> for u8 {
    fn from(s: Side) -> u8 {
        match s {
            Side::Lower => 1,
            Side::Upper => 2,
        }
    }
}

impl TryFrom<u8> for Side {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Side::Lower),
            2 => Ok(Side::Upper),
            _ => Err(format!("side must be 1 or 2, got {v}")),
        }
    }
}

/// A conjugation point of the boundary with its local angle data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ConjugationPoint<T: Real> {
    pub id: u32,
    pub position: [T; 2],
    /// Half-opening omega_j of the local angle K_j, in (0, pi).
    pub half_opening: T,
    /// Rotation fixing the change of variables Y_j to the reference angle.
    pub frame_rotation: T,
}

/// Scalar function of one variable (arclength r along a side), either a
/// closed-form builtin or a sampled table. The string forms accepted in JSON
/// are `"zero"`, `"const:<c>"`, `"linear_y2:<c>"`, `"poly:<c0,c1,...>"`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn<T: Real> {
    Zero,
    Const(T),
    /// `c * y2` along the side; on gamma_{j,sigma} this is
    /// `c * (-1)^sigma * r * sin(omega_j)`.
    LinearY2(T),
    /// Polynomial in r, low degree first.
    Poly(Vec<T>),
    Table { r: Vec<T>, value: Vec<T> },
}

impl<T: Real> ScalarFn<T> {
    /// Value as a function of arclength r on the side `(half_opening, side)`.
    pub fn eval(&self, r: T, half_opening: T, side: Side) -> T {
        match self {
            ScalarFn::Zero => T::zero(),
            ScalarFn::Const(k) => *k,
            ScalarFn::LinearY2(k) => *k * side.sign::<T>() * r * half_opening.sin(),
            ScalarFn::Poly(cs) => {
                let mut acc = T::zero();
                for c in cs.iter().rev() {
                    acc = acc * r + *c;
                }
                acc
            }
            ScalarFn::Table { r: rs, value } => interp_table(rs, value, r),
        }
    }

    /// Exact d/dr where the closed form allows it; table data falls back to a
    /// divided difference.
    pub fn eval_deriv(&self, r: T, half_opening: T, side: Side) -> T {
        match self {
            ScalarFn::Zero | ScalarFn::Const(_) => T::zero(),
            ScalarFn::LinearY2(k) => *k * side.sign::<T>() * half_opening.sin(),
            ScalarFn::Poly(cs) => {
                let mut acc = T::zero();
                for (i, c) in cs.iter().enumerate().skip(1).rev() {
                    acc = acc * r + T::of_usize(i) * *c;
                }
                acc
            }
            ScalarFn::Table { r: rs, value } => {
                let h = r * T::of(1e-4);
                (interp_table(rs, value, r + h) - interp_table(rs, value, r - h))
                    / (T::of(2.0) * h)
            }
        }
    }

    /// 2-D evaluation for volume data; `Poly`/`Table` are radial profiles.
    pub fn eval_xy(&self, y1: T, y2: T) -> T {
        match self {
            ScalarFn::Zero => T::zero(),
            ScalarFn::Const(k) => *k,
            ScalarFn::LinearY2(k) => *k * y2,
            ScalarFn::Poly(_) | ScalarFn::Table { .. } => {
                let r = (y1 * y1 + y2 * y2).sqrt();
                let mut v = T::zero();
                if let ScalarFn::Poly(cs) = self {
                    for c in cs.iter().rev() {
                        v = v * r + *c;
                    }
                } else if let ScalarFn::Table { r: rs, value } = self {
                    v = interp_table(rs, value, r);
                }
                v
            }
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if let ScalarFn::Table { r, value } = self {
            if r.len() != value.len() || r.len() < 2 {
                return Err(GeometryError::BadTable);
            }
            if !r.windows(2).all(|w| w[0] > w[1]) || *r.last().unwrap() <= T::zero() {
                return Err(GeometryError::BadTable);
            }
        }
        Ok(())
    }
}

fn interp_table<T: Real>(rs: &[T], vs: &[T], r: T) -> T {
    // rs is strictly decreasing.
    if r >= rs[0] {
        return vs[0];
    }
    if r <= *rs.last().unwrap() {
        return *vs.last().unwrap();
    }
    for w in 0..rs.len() - 1 {
        if r <= rs[w] && r >= rs[w + 1] {
            let t = (r - rs[w + 1]) / (rs[w] - rs[w + 1]);
            return vs[w + 1] + t * (vs[w] - vs[w + 1]);
        }
    }
    *vs.last().unwrap()
}

mod scalar_fn_serde {
    use super::*;
    use serde::de::Error as DeError;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Name(String),
        Table { r: Vec<f64>, value: Vec<f64> },
    }

    impl<T: Real> Serialize for ScalarFn<T> {
        fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let repr = match self {
                ScalarFn::Zero => Repr::Name("zero".into()),
                ScalarFn::Const(c) => Repr::Name(format!("const:{}", c.as_f64())),
                ScalarFn::LinearY2(c) => Repr::Name(format!("linear_y2:{}", c.as_f64())),
                ScalarFn::Poly(cs) => Repr::Name(format!(
                    "poly:{}",
                    cs.iter().map(|c| c.as_f64().to_string()).collect::<Vec<_>>().join(",")
                )),
                ScalarFn::Table { r, value } => Repr::Table {
                    r: r.iter().map(|x| x.as_f64()).collect(),
                    value: value.iter().map(|x| x.as_f64()).collect(),
                },
            };
            repr.serialize(s)
        }
    }

    impl<'de, T: Real> Deserialize<'de> for ScalarFn<T> {
        fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            match Repr::deserialize(d)? {
                Repr::Table { r, value } => Ok(ScalarFn::Table {
                    r: r.into_iter().map(T::of).collect(),
                    value: value.into_iter().map(T::of).collect(),
                }),
                Repr::Name(s) => parse_scalar_fn(&s).map_err(|e| D::Error::custom(e.to_string())),
            }
        }
    }

    pub fn parse_scalar_fn<T: Real>(s: &str) -> Result<ScalarFn<T>, GeometryError> {
        let bad = || GeometryError::BadScalarFn(s.to_string());
        if s == "zero" {
            return Ok(ScalarFn::Zero);
        }
        if let Some(rest) = s.strip_prefix("const:") {
            return rest.parse::<f64>().map(|c| ScalarFn::Const(T::of(c))).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("linear_y2:") {
            return rest.parse::<f64>().map(|c| ScalarFn::LinearY2(T::of(c))).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("poly:") {
            let cs: Result<Vec<f64>, _> = rest.split(',').map(|p| p.trim().parse::<f64>()).collect();
            return cs.map(|cs| ScalarFn::Poly(cs.into_iter().map(T::of).collect())).map_err(|_| bad());
        }
        Err(bad())
    }
}

pub use scalar_fn_serde::parse_scalar_fn;

/// One nonlocal term `b_{j sigma k s}(y) U_k(G_{j sigma k s} y)` of a model
/// problem; `G` is rotation by `rotation` composed with homothety `homothety`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct NonlocalTerm<T: Real> {
    /// Source angle index j.
    pub angle: usize,
    /// Source side sigma.
    pub side: Side,
    /// Target angle index k.
    pub target: usize,
    /// Term index s; s = 0 is reserved for the identity term.
    pub term: usize,
    /// b_{j sigma k s}(0).
    pub weight: T,
    /// Optional variable coefficient b(r) along the side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_profile: Option<ScalarFn<T>>,
    /// Rotation angle omega_{j sigma k s}.
    pub rotation: T,
    /// Homothety ratio chi_{j sigma k s} > 0.
    pub homothety: T,
}

impl<T: Real> NonlocalTerm<T> {
    pub fn identity(angle: usize, side: Side) -> Self {
        NonlocalTerm {
            angle,
            side,
            target: angle,
            term: 0,
            weight: T::one(),
            weight_profile: None,
            rotation: T::zero(),
            homothety: T::one(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.term == 0
    }

    /// Angle of the image ray `(-1)^sigma omega_j + rotation` in the target
    /// angle's coordinates.
    pub fn image_ray(&self, source_half_opening: T) -> T {
        self.side.sign::<T>() * source_half_opening + self.rotation
    }

    /// Weight at radius r: profile value when a profile is present, else the
    /// frozen vertex weight.
    pub fn weight_at(&self, r: T, half_opening: T) -> T {
        match &self.weight_profile {
            Some(f) => f.eval(r, half_opening, self.side),
            None => self.weight,
        }
    }
}

/// Principal part of the elliptic operator, frozen at the vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
#[serde(rename_all = "snake_case")]
pub enum PrincipalPart<T: Real> {
    Laplace,
    /// Coefficients `(p11, p12, p22)` per angle of
    /// `p11 u_{y1 y1} + 2 p12 u_{y1 y2} + p22 u_{y2 y2}`.
    GeneralConstantCoefficient(Vec<[T; 3]>),
}

impl<T: Real> PrincipalPart<T> {
    pub fn coefficients(&self, angle: usize) -> [T; 3] {
        match self {
            PrincipalPart::Laplace => [T::one(), T::zero(), T::one()],
            PrincipalPart::GeneralConstantCoefficient(ps) => ps[angle],
        }
    }
}

/// One orbit's frozen-coefficient model problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct OrbitModel<T: Real> {
    pub orbit_id: u32,
    /// Half-openings omega_{t,j} per angle of the orbit.
    pub angles: Vec<T>,
    pub terms: Vec<NonlocalTerm<T>>,
    pub principal_part: PrincipalPart<T>,
}

impl<T: Real> OrbitModel<T> {
    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    /// Terms of row (j, sigma), identity first, then by term index.
    pub fn row_terms(&self, angle: usize, side: Side) -> Vec<&NonlocalTerm<T>> {
        let mut ts: Vec<&NonlocalTerm<T>> =
            self.terms.iter().filter(|t| t.angle == angle && t.side == side).collect();
        ts.sort_by_key(|t| t.term);
        ts
    }

    /// Rows in lexicographic (j, sigma) order.
    pub fn rows(&self) -> Vec<(usize, Side)> {
        let mut out = Vec::with_capacity(2 * self.n_angles());
        for j in 0..self.n_angles() {
            for side in Side::BOTH {
                out.push((j, side));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.angles.is_empty() {
            return Err(GeometryError::AngleIndexOutOfRange(0, 0));
        }
        for &w in &self.angles {
            if w <= T::zero() || w >= T::PI() {
                return Err(GeometryError::BadOpening(w.as_f64()));
            }
        }
        if let PrincipalPart::GeneralConstantCoefficient(ps) = &self.principal_part {
            if ps.len() != self.angles.len() {
                return Err(GeometryError::AngleIndexOutOfRange(ps.len(), self.angles.len()));
            }
            for (j, p) in ps.iter().enumerate() {
                if p[1] * p[1] >= p[0] * p[2] {
                    return Err(GeometryError::NotProperlyElliptic(j));
                }
            }
        }
        for t in &self.terms {
            if t.angle >= self.angles.len() || t.target >= self.angles.len() {
                return Err(GeometryError::AngleIndexOutOfRange(
                    t.angle.max(t.target),
                    self.angles.len(),
                ));
            }
            if t.homothety <= T::zero() {
                return Err(GeometryError::BadHomothety(t.homothety.as_f64()));
            }
            if t.is_identity() {
                if t.target != t.angle
                    || t.weight != T::one()
                    || t.rotation != T::zero()
                    || t.homothety != T::one()
                {
                    return Err(GeometryError::BadIdentityTerm);
                }
            } else {
                let im = t.image_ray(self.angles[t.angle]);
                if im.abs() >= self.angles[t.target] {
                    return Err(GeometryError::ImageRayOutside {
                        angle: t.angle,
                        side: t.side,
                        target: t.target,
                        term: t.term,
                        image: im.as_f64(),
                        opening: self.angles[t.target].as_f64(),
                    });
                }
            }
        }
        if let Some(f) = self.terms.iter().filter_map(|t| t.weight_profile.as_ref()).next() {
            f.validate()?;
        }
        Ok(())
    }

    /// `D_chi = 2 max chi` and `d_chi = min chi / 2` over all terms.
    pub fn chi_bounds(&self) -> (T, T) {
        let mut mx = T::one();
        let mut mn = T::one();
        for t in &self.terms {
            mx = mx.max(t.homothety);
            mn = mn.min(t.homothety);
        }
        (T::of(2.0) * mx, mn / T::of(2.0))
    }
}

/// Where the image curve of the exterior transformation sits relative to the
/// domain: strictly inside with the coefficient support (case A), passing
/// through an interior point of the domain (case B), or landing back on the
/// source side of the boundary (case C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaApproach {
    InteriorSupport,
    InteriorPoint,
    LandsOnBoundary,
}

/// Concrete realization of a nonlocal term supported away from the orbit:
/// `a(y) u(Omega(y))` on one side, with the image curve
/// `Omega((r, side ray)) = anchor + r * direction` inside the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ExteriorTerm<T: Real> {
    pub orbit_id: u32,
    pub angle: usize,
    pub side: Side,
    /// Coefficient a along the side, as a function of arclength.
    pub coeff: ScalarFn<T>,
    pub approach: OmegaApproach,
    /// Image curve anchor Omega(vertex), in the model-angle coordinates.
    pub anchor: [T; 2],
    /// Image curve direction d Omega / dr at the vertex.
    pub direction: [T; 2],
}

/// Right-hand side of one nonlocal condition, on one side of one angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct BoundaryRhs<T: Real> {
    pub orbit_id: u32,
    pub angle: usize,
    pub side: Side,
    pub value: ScalarFn<T>,
}

/// Truncation radii: the nonlocal terms supported near the orbit live within
/// `epsilon` of the vertices; the exterior operators satisfy the separation
/// estimates with `kappa1 > kappa2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Truncation<T: Real> {
    pub epsilon: T,
    pub kappa1: T,
    pub kappa2: T,
}

impl<T: Real> Default for Truncation<T> {
    fn default() -> Self {
        // kappa1 = eps/2, kappa2 = kappa1/2 matches the cutoff construction
        // used by the worked examples.
        Truncation { epsilon: T::of(0.25), kappa1: T::of(0.125), kappa2: T::of(0.0625) }
    }
}

/// Right-hand sides of the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Rhs<T: Real> {
    #[serde(default = "zero_fn")]
    pub volume: ScalarFn<T>,
    #[serde(default)]
    pub boundary: Vec<BoundaryRhs<T>>,
}

impl<T: Real> Default for Rhs<T> {
    fn default() -> Self {
        Rhs { volume: ScalarFn::Zero, boundary: Vec::new() }
    }
}

fn zero_fn<T: Real>() -> ScalarFn<T> {
    ScalarFn::Zero
}

impl<T: Real> Default for ScalarFn<T> {
    fn default() -> Self {
        ScalarFn::Zero
    }
}

/// Full description of a nonlocal problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ProblemSpec<T: Real> {
    pub orbits: Vec<OrbitModel<T>>,
    #[serde(default)]
    pub exterior_terms: Vec<ExteriorTerm<T>>,
    #[serde(default)]
    pub rhs: Rhs<T>,
    #[serde(default = "Truncation::default")]
    pub truncation: Truncation<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let tr = &self.truncation;
        if !(tr.epsilon > tr.kappa1 && tr.kappa1 > tr.kappa2 && tr.kappa2 > T::zero()) {
            return Err(GeometryError::BadTruncation);
        }
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.orbits {
            o.validate()?;
            if !ids.insert(o.orbit_id) {
                return Err(GeometryError::DuplicateId(o.orbit_id));
            }
            // Images of eps-neighborhoods must stay inside the unit model
            // neighborhood: D_chi * eps < 1.
            let (d_chi, _) = o.chi_bounds();
            if d_chi * tr.epsilon >= T::one() {
                return Err(GeometryError::BadTruncation);
            }
        }
        for e in &self.exterior_terms {
            e.coeff.validate()?;
            if !self.orbits.iter().any(|o| o.orbit_id == e.orbit_id && e.angle < o.n_angles()) {
                return Err(GeometryError::UnknownPoint(e.orbit_id));
            }
        }
        for b in &self.rhs.boundary {
            b.value.validate()?;
            if !self.orbits.iter().any(|o| o.orbit_id == b.orbit_id && b.angle < o.n_angles()) {
                return Err(GeometryError::UnknownPoint(b.orbit_id));
            }
        }
        Ok(())
    }

    pub fn orbit(&self, orbit_id: u32) -> Option<&OrbitModel<T>> {
        self.orbits.iter().find(|o| o.orbit_id == orbit_id)
    }

    pub fn boundary_rhs(&self, orbit_id: u32, angle: usize, side: Side) -> ScalarFn<T> {
        self.rhs
            .boundary
            .iter()
            .find(|b| b.orbit_id == orbit_id && b.angle == angle && b.side == side)
            .map(|b| b.value.clone())
            .unwrap_or(ScalarFn::Zero)
    }

    pub fn exterior_on(&self, orbit_id: u32, angle: usize, side: Side) -> Vec<&ExteriorTerm<T>> {
        self.exterior_terms
            .iter()
            .filter(|e| e.orbit_id == orbit_id && e.angle == angle && e.side == side)
            .collect()
    }
}

/// Boundary transformation acting near two conjugation points, restricted to
/// its affine action `y -> linear y + offset` in global coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct BoundaryMap<T: Real> {
    pub from: u32,
    pub to: u32,
    pub linear: [[T; 2]; 2],
    pub offset: [T; 2],
}

impl<T: Real> BoundaryMap<T> {
    /// Rotation by `angle` and homothety `ratio` about `center`.
    pub fn rotation_homothety(from: u32, to: u32, center: [T; 2], angle: T, ratio: T) -> Self {
        let (s, c) = angle.sin_cos();
        let linear = [[ratio * c, -ratio * s], [ratio * s, ratio * c]];
        let offset = [
            center[0] - linear[0][0] * center[0] - linear[0][1] * center[1],
            center[1] - linear[1][0] * center[0] - linear[1][1] * center[1],
        ];
        BoundaryMap { from, to, linear, offset }
    }

    pub fn apply(&self, y: [T; 2]) -> [T; 2] {
        [
            self.offset[0] + self.linear[0][0] * y[0] + self.linear[0][1] * y[1],
            self.offset[1] + self.linear[1][0] * y[0] + self.linear[1][1] * y[1],
        ]
    }
}

/// Partition conjugation points into orbits: two points share an orbit iff a
/// chain of transformations (or inverses) connects them.
pub fn compute_orbits<T: Real>(
    points: &[ConjugationPoint<T>],
    maps: &[BoundaryMap<T>],
) -> Result<Vec<Vec<u32>>, GeometryError> {
    let mut index: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if index.insert(p.id, i).is_some() {
            return Err(GeometryError::DuplicateId(p.id));
        }
    }
    let find = |id: u32| index.get(&id).copied().ok_or(GeometryError::UnknownPoint(id));

    // Union-find over point indices.
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for m in maps {
        let (fi, ti) = (find(m.from)?, find(m.to)?);
        let image = m.apply(points[fi].position);
        let d = ((image[0] - points[ti].position[0]).powi(2)
            + (image[1] - points[ti].position[1]).powi(2))
        .sqrt();
        if d > T::of(1e-9) {
            return Err(GeometryError::ImageNotConjugationPoint {
                from: m.from,
                to: m.to,
                got: [image[0].as_f64(), image[1].as_f64()],
            });
        }
        let (ra, rb) = (root(&mut parent, fi), root(&mut parent, ti));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }

    let mut orbits: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for i in 0..points.len() {
        let r = root(&mut parent, i);
        orbits.entry(r).or_default().push(points[i].id);
    }
    let mut out: Vec<Vec<u32>> = orbits.into_values().collect();
    for orbit in &mut out {
        orbit.sort_unstable();
    }
    out.sort_by_key(|o| o[0]);
    Ok(out)
}

/// Localized action of a boundary map near a vertex: rotation angle,
/// homothety ratio, and the worst relative deviation from an exact
/// rotation+homothety over the sampled radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Localization<T> {
    pub rotation: T,
    pub homothety: T,
    pub max_deviation: T,
}

/// Extract the rotation angle and homothety ratio of a boundary map near a
/// vertex, verifying that `Y_k . map . Y_j^{-1}` agrees with `chi R_omega`
/// on sample points at radii `eps/8, eps/4, eps/2`.
///
/// `map` acts in global coordinates. The verdict carries the max relative
/// deviation; a deviation above `tol` (default 1e-8 via
/// [`localize_transformation`]) yields `ConditionK1Violation`.
pub fn localize_transformation_with_tol<T: Real>(
    map: &dyn Fn([T; 2]) -> [T; 2],
    vertex: &ConjugationPoint<T>,
    image_vertex: &ConjugationPoint<T>,
    eps: T,
    tol: T,
) -> Result<Localization<T>, GeometryError> {
    let to_local = |p: &ConjugationPoint<T>, y: [T; 2]| -> [T; 2] {
        let d = [y[0] - p.position[0], y[1] - p.position[1]];
        let (s, c) = p.frame_rotation.sin_cos();
        [c * d[0] - s * d[1], s * d[0] + c * d[1]]
    };
    let from_local = |p: &ConjugationPoint<T>, y: [T; 2]| -> [T; 2] {
        let (s, c) = (-p.frame_rotation).sin_cos();
        [p.position[0] + c * y[0] - s * y[1], p.position[1] + s * y[0] + c * y[1]]
    };
    let composed = |y: [T; 2]| -> [T; 2] { to_local(image_vertex, map(from_local(vertex, y))) };

    // Estimate (omega, chi) from one probe, then check all samples.
    let two = T::of(2.0);
    let probe = composed([eps / T::of(8.0), T::zero()]);
    let chi = (probe[0] * probe[0] + probe[1] * probe[1]).sqrt() / (eps / T::of(8.0));
    if chi <= T::zero() || !chi.is_finite() {
        return Err(GeometryError::ConditionK1Violation { max_deviation: f64::INFINITY });
    }
    let omega = probe[1].atan2(probe[0]);

    let (so, co) = omega.sin_cos();
    let mut max_dev = T::zero();
    let w = vertex.half_opening;
    for level in 0..3 {
        let r = eps / T::of(8.0) * two.powi(level);
        for k in 0..5 {
            let ang = -w + (w * two) * T::of_usize(k) / T::of(4.0);
            let y = [r * ang.cos(), r * ang.sin()];
            let got = composed(y);
            let want = [chi * (co * y[0] - so * y[1]), chi * (so * y[0] + co * y[1])];
            let dev = ((got[0] - want[0]).powi(2) + (got[1] - want[1]).powi(2)).sqrt() / r;
            max_dev = max_dev.max(dev);
        }
    }
    if max_dev > tol {
        return Err(GeometryError::ConditionK1Violation { max_deviation: max_dev.as_f64() });
    }
    Ok(Localization { rotation: omega, homothety: chi, max_deviation: max_dev })
}

pub fn localize_transformation<T: Real>(
    map: &dyn Fn([T; 2]) -> [T; 2],
    vertex: &ConjugationPoint<T>,
    image_vertex: &ConjugationPoint<T>,
    eps: T,
) -> Result<Localization<T>, GeometryError> {
    localize_transformation_with_tol(map, vertex, image_vertex, eps, T::of(1e-8))
}

/// Number of dyadic sampling levels used when freezing variable coefficients.
pub const DEFAULT_PROFILE_LEVELS: usize = 24;

/// Freeze a validated spec into per-orbit model problems: identity terms are
/// inserted where missing, vertex weights come from the profile limit at
/// r -> 0 (Richardson extrapolation over the two finest dyadic levels), and
/// the result is idempotent under re-freezing.
pub fn freeze<T: Real>(spec: &ProblemSpec<T>) -> Result<Vec<OrbitModel<T>>, GeometryError> {
    spec.validate()?;
    let eps = spec.truncation.epsilon;
    let mut out = Vec::with_capacity(spec.orbits.len());
    for orbit in &spec.orbits {
        let mut model = orbit.clone();
        for j in 0..model.angles.len() {
            for side in Side::BOTH {
                if !model.terms.iter().any(|t| t.angle == j && t.side == side && t.is_identity()) {
                    model.terms.push(NonlocalTerm::identity(j, side));
                }
            }
        }
        for t in &mut model.terms {
            if let Some(profile) = &t.weight_profile {
                let w = model.angles[t.angle];
                let m = DEFAULT_PROFILE_LEVELS as i32;
                let r_fine = eps * T::of(2.0).powi(-m);
                let r_coarse = r_fine * T::of(2.0);
                let (vf, vc) = (profile.eval(r_fine, w, t.side), profile.eval(r_coarse, w, t.side));
                t.weight = T::of(2.0) * vf - vc;
            }
        }
        model.terms.sort_by(|a, b| {
            (a.angle, a.side, a.target, a.term).partial_cmp(&(b.angle, b.side, b.target, b.term)).unwrap()
        });
        model.validate()?;
        out.push(model);
    }
    out.sort_by_key(|m| m.orbit_id);
    Ok(out)
}
