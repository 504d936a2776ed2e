//! Consistency machinery for the border case.
//!
//! Differentiating each nonlocal boundary functional along its side and
//! formally replacing the composed arguments by plain ones yields a system
//! of first-order constant-coefficient operators
//! `B^_{j sigma}(D_y) = sum c_1 d/dy1 + c_2 d/dy2`. When the pencil has the
//! proper eigenvalue -i this system is linearly dependent; the dependence
//! coefficients beta feed the consistency condition: boundary data enters a
//! weighted integral `int_0^eps r^{-1} | d/dr (Z - sum beta Z') |^2 dr`
//! whose finiteness decides `W^2` membership. Finiteness of an integral is
//! not decidable from samples, so the diagnostic works on dyadic annuli and
//! classifies the decay slope, with an explicit inconclusive zone.

use crate::geometry::{OrbitModel, ProblemSpec, ScalarFn, Side};
use crate::linalg::{lstsq, lstsq_real, normalize_phase, null_space, CMat};
use crate::num::{cre, Real};
use crate::pencil::{JordanStructure, Pencil};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("hat-operator matrix has full rank; no dependence relation exists")]
    NoDependence,
    #[error("null vector of the hat-operator matrix has residual {residual:.3e}; pencil and hat-operator modules disagree")]
    CrossCheckFailed { residual: f64 },
    #[error("eigenvector is not a degree-1 polynomial profile (fit residual {residual:.3e})")]
    NotDegreeOne { residual: f64 },
    #[error("traces disagree on the dyadic grid (lengths {0} vs {1})")]
    GridMismatch(usize, usize),
    #[error("boundary trace needs at least 12 dyadic levels, got {0}")]
    TooFewLevels(usize),
}

/// Coefficients of the differentiated nonlocal operators: row (j, sigma) in
/// lexicographic order, columns (k, slot) with slot 0 the `d/dy1`
/// coefficient applied to `U_k` and slot 1 the `d/dy2` coefficient.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct HatOperatorMatrix<T: Real> {
    pub orbit_id: u32,
    pub n_angles: usize,
    /// Row-major `2N x 2N`.
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> HatOperatorMatrix<T> {
    pub fn max_norm(&self) -> T {
        self.rows.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn apply(&self, q: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(q).fold(T::zero(), |s, (a, b)| s + *a * *b))
            .collect()
    }
}

/// Differentiate each nonlocal functional along its side: the term with
/// weight b, rotation w and homothety chi contributes
/// `b(0) * chi * (R_w tau_{j sigma})` to the gradient coefficients of `U_k`,
/// where `tau_{j sigma}` is the unit vector along the side.
pub fn hat_operators<T: Real>(model: &OrbitModel<T>) -> HatOperatorMatrix<T> {
    let n = model.n_angles();
    let mut rows = vec![vec![T::zero(); 2 * n]; 2 * n];
    for (row, (j, side)) in model.rows().into_iter().enumerate() {
        let tau_angle = side.sign::<T>() * model.angles[j];
        for t in model.row_terms(j, side) {
            let dir_angle = tau_angle + t.rotation;
            let f = t.weight * t.homothety;
            rows[row][2 * t.target] += f * dir_angle.cos();
            rows[row][2 * t.target + 1] += f * dir_angle.sin();
        }
    }
    HatOperatorMatrix { orbit_id: model.orbit_id, n_angles: n, rows }
}

/// Gradient components `(q_{k1}, q_{k2})` of the degree-1 polynomials
/// `Q_k = r phi_k(omega)` attached to a proper eigenvector at `lambda = -i`;
/// the result annihilates the hat-operator matrix (cross-checked here).
pub fn null_vector_from_proper_eigenvector<T: Real>(
    pencil: &Pencil<T>,
    js: &JordanStructure<T>,
    chain: usize,
) -> Result<Vec<T>, ConsistencyError> {
    let v = normalize_phase(&js.chains[chain].vectors[0]);
    let n = pencil.model.n_angles();
    let mut q = vec![T::zero(); 2 * n];
    for k in 0..n {
        let (omegas, profile) = pencil.sample_profile(&v, k, js.lambda, 64);
        let cosb: Vec<T> = omegas.iter().map(|w| w.cos()).collect();
        let sinb: Vec<T> = omegas.iter().map(|w| w.sin()).collect();
        let re: Vec<T> = profile.iter().map(|z| z.re).collect();
        let fit = lstsq_real(&[cosb.clone(), sinb.clone()], &re);
        // degree-1 check: residual of the fit plus any imaginary leftovers
        let mut res = T::zero();
        let mut scale = T::zero();
        for (i, z) in profile.iter().enumerate() {
            let f = fit[0] * cosb[i] + fit[1] * sinb[i];
            res = res + (z.re - f).powi(2) + z.im.powi(2);
            scale = scale + z.norm_sqr();
        }
        if scale > T::of(1e-20) && (res / scale).sqrt() > T::of(1e-6) {
            return Err(ConsistencyError::NotDegreeOne {
                residual: (res / scale).sqrt().as_f64(),
            });
        }
        q[2 * k] = fit[0];
        q[2 * k + 1] = fit[1];
    }
    let hat = hat_operators(pencil.model);
    let resid = hat
        .apply(&q)
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let qscale = q.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::of(1e-300));
    let hscale = hat.max_norm().max(T::one());
    if resid > T::of(1e-8) * hscale * qscale {
        return Err(ConsistencyError::CrossCheckFailed { residual: resid.as_f64() });
    }
    Ok(q)
}

/// Expansion of the dependent differentiated operators through a maximal
/// linearly independent subsystem, pivot rows taken in lexicographic
/// (j, sigma) order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct BetaTable<T: Real> {
    pub orbit_id: u32,
    pub independent: Vec<(usize, Side)>,
    pub dependent: Vec<DependentRow<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct DependentRow<T: Real> {
    pub angle: usize,
    pub side: Side,
    /// beta coefficients aligned with `independent`.
    pub betas: Vec<T>,
}

/// Row-reduce the hat-operator matrix: rows are scanned in lexicographic
/// order, each new row either joins the independent subsystem or gets its
/// beta coefficients by least squares against the rows already kept (the
/// reconstruction residual is below 1e-12 relative by construction).
pub fn dependency_betas<T: Real>(
    matrix: &HatOperatorMatrix<T>,
) -> Result<BetaTable<T>, ConsistencyError> {
    let n = matrix.n_angles;
    let scale = matrix.max_norm().max(T::of(1e-300));
    let tol = T::of(1e-10) * scale;
    let mut independent: Vec<(usize, Side)> = Vec::new();
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut dependent: Vec<DependentRow<T>> = Vec::new();
    for (row_idx, row) in matrix.rows.iter().enumerate() {
        let (j, side) = (row_idx / 2, if row_idx % 2 == 0 { Side::Lower } else { Side::Upper });
        if basis.is_empty() {
            let nz = row.iter().any(|v| v.abs() > tol);
            if nz {
                independent.push((j, side));
                basis.push(row.clone());
            } else {
                dependent.push(DependentRow { angle: j, side, betas: vec![] });
            }
            continue;
        }
        // columns of the LSQ are the basis rows
        let cols: Vec<Vec<T>> = basis.clone();
        let betas = lstsq_real(&cols, row);
        let mut res = T::zero();
        for c in 0..2 * n {
            let mut fit = T::zero();
            for (b, beta) in basis.iter().zip(&betas) {
                fit = fit + *beta * b[c];
            }
            res = res.max((row[c] - fit).abs());
        }
        if res <= tol {
            dependent.push(DependentRow { angle: j, side, betas });
        } else {
            independent.push((j, side));
            basis.push(row.clone());
        }
    }
    if dependent.is_empty() {
        return Err(ConsistencyError::NoDependence);
    }
    Ok(BetaTable { orbit_id: matrix.orbit_id, independent, dependent })
}

/// Boundary trace sampled on the dyadic grid `r_m = eps 2^{-m}`, m = 0..=M,
/// together with d/dr samples at the interval midpoints. When built from a
/// closed-form profile the derivatives are exact; table data falls back to
/// divided differences.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct BoundaryTrace<T: Real> {
    pub radii: Vec<T>,
    pub values: Vec<T>,
    pub midpoints: Vec<T>,
    pub derivs: Vec<T>,
}

/// Default number of dyadic levels for diagnostics.
pub const DEFAULT_LEVELS: usize = 24;

impl<T: Real> BoundaryTrace<T> {
    pub fn from_profile(
        f: &ScalarFn<T>,
        half_opening: T,
        side: Side,
        eps: T,
        levels: usize,
    ) -> Self {
        let radii: Vec<T> = (0..=levels).map(|m| eps * T::of(2.0).powi(-(m as i32))).collect();
        let values = radii.iter().map(|&r| f.eval(r, half_opening, side)).collect();
        let midpoints: Vec<T> =
            radii.windows(2).map(|w| (w[0] + w[1]) * T::of(0.5)).collect();
        let derivs = midpoints.iter().map(|&r| f.eval_deriv(r, half_opening, side)).collect();
        BoundaryTrace { radii, values, midpoints, derivs }
    }

    /// Build from node values alone; midpoint derivatives by divided
    /// differences (exact for traces linear in r).
    pub fn from_values(radii: Vec<T>, values: Vec<T>) -> Self {
        let midpoints: Vec<T> =
            radii.windows(2).map(|w| (w[0] + w[1]) * T::of(0.5)).collect();
        let derivs = radii
            .windows(2)
            .zip(values.windows(2))
            .map(|(r, v)| (v[0] - v[1]) / (r[0] - r[1]))
            .collect();
        BoundaryTrace { radii, values, midpoints, derivs }
    }

    pub fn levels(&self) -> usize {
        self.radii.len().saturating_sub(1)
    }

    pub fn zero_like(&self) -> Self {
        BoundaryTrace {
            radii: self.radii.clone(),
            values: vec![T::zero(); self.values.len()],
            midpoints: self.midpoints.clone(),
            derivs: vec![T::zero(); self.derivs.len()],
        }
    }

    /// Linear combination `sum c_i tr_i`; the grids must agree.
    pub fn combine(parts: &[(T, &BoundaryTrace<T>)]) -> Result<Self, ConsistencyError> {
        let first = parts.first().expect("empty combination").1;
        let mut out = first.zero_like();
        for (cf, tr) in parts {
            if tr.radii.len() != out.radii.len() {
                return Err(ConsistencyError::GridMismatch(tr.radii.len(), out.radii.len()));
            }
            for (o, v) in out.values.iter_mut().zip(&tr.values) {
                *o = *o + *cf * *v;
            }
            for (o, v) in out.derivs.iter_mut().zip(&tr.derivs) {
                *o = *o + *cf * *v;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralVerdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// Dyadic decomposition of `int r^{-1} |dZ/dr|^2 dr`: per-level midpoint-rule
/// integrals, the decay slope of `log2 I_m` over the last (up to) 8 resolved
/// levels, and the verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct DyadicDiagnostic<T: Real> {
    pub integrals: Vec<T>,
    pub slope: Option<T>,
    pub verdict: IntegralVerdict,
    pub note: Option<String>,
}

/// Levels with `I_m` below this absolute floor are treated as unresolved.
const RESOLUTION_FLOOR: f64 = 1e-30;

pub fn weighted_seminorm_diagnostic<T: Real>(combo: &BoundaryTrace<T>) -> DyadicDiagnostic<T> {
    let m_levels = combo.levels();
    if m_levels < 12 {
        return DyadicDiagnostic {
            integrals: vec![],
            slope: None,
            verdict: IntegralVerdict::Inconclusive,
            note: Some(format!("need at least 12 dyadic levels, got {m_levels}")),
        };
    }
    let mut integrals = Vec::with_capacity(m_levels);
    for m in 0..m_levels {
        let width = combo.radii[m] - combo.radii[m + 1];
        let rho = combo.midpoints[m];
        let d = combo.derivs[m];
        integrals.push(d * d / rho * width);
    }
    let floor = T::of(RESOLUTION_FLOOR);
    let resolved: Vec<(usize, T)> = integrals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= floor)
        .map(|(m, &v)| (m, v))
        .collect();
    if resolved.is_empty() {
        return DyadicDiagnostic {
            integrals,
            slope: None,
            verdict: IntegralVerdict::Finite,
            note: Some("all dyadic integrals below resolution floor".into()),
        };
    }
    if resolved.len() < 4 {
        return DyadicDiagnostic {
            integrals,
            slope: None,
            verdict: IntegralVerdict::Inconclusive,
            note: Some(format!("only {} resolvable levels", resolved.len())),
        };
    }
    let tail = &resolved[resolved.len().saturating_sub(8)..];
    let xs: Vec<T> = tail.iter().map(|(m, _)| T::of_usize(*m)).collect();
    let ys: Vec<T> = tail.iter().map(|(_, v)| v.log2()).collect();
    let ones = vec![T::one(); xs.len()];
    let fit = lstsq_real(&[xs, ones], &ys);
    let slope = fit[0];
    let verdict = if slope <= T::of(-0.5) {
        IntegralVerdict::Finite
    } else if slope >= T::of(-0.1) {
        IntegralVerdict::Divergent
    } else {
        IntegralVerdict::Inconclusive
    };
    DyadicDiagnostic { integrals, slope: Some(slope), verdict, note: None }
}

/// Per-dependent-row diagnostic of one consistency condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RowDiagnostic<T: Real> {
    pub angle: usize,
    pub side: Side,
    pub betas: Vec<T>,
    pub diagnostic: DyadicDiagnostic<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ConsistencyReport<T: Real> {
    pub orbit_id: u32,
    pub rows: Vec<RowDiagnostic<T>>,
    pub aggregate: IntegralVerdict,
}

pub fn aggregate_verdict(rows: &[IntegralVerdict]) -> IntegralVerdict {
    if rows.iter().any(|v| *v == IntegralVerdict::Divergent) {
        IntegralVerdict::Divergent
    } else if rows.iter().all(|v| *v == IntegralVerdict::Finite) {
        IntegralVerdict::Finite
    } else {
        IntegralVerdict::Inconclusive
    }
}

/// Run the consistency diagnostic on a family of side traces with the given
/// beta table: for each dependent row, form `Z - sum beta Z'` and test it.
pub fn consistency_of_traces<T: Real>(
    betas: &BetaTable<T>,
    trace_of: &dyn Fn(usize, Side) -> BoundaryTrace<T>,
) -> Result<ConsistencyReport<T>, ConsistencyError> {
    let mut rows = Vec::new();
    for dep in &betas.dependent {
        let z = trace_of(dep.angle, dep.side);
        let indep: Vec<BoundaryTrace<T>> =
            betas.independent.iter().map(|(j, s)| trace_of(*j, *s)).collect();
        let mut parts: Vec<(T, &BoundaryTrace<T>)> = vec![(T::one(), &z)];
        for (b, tr) in dep.betas.iter().zip(&indep) {
            parts.push((-*b, tr));
        }
        let combo = BoundaryTrace::combine(&parts)?;
        let diagnostic = weighted_seminorm_diagnostic(&combo);
        rows.push(RowDiagnostic {
            angle: dep.angle,
            side: dep.side,
            betas: dep.betas.clone(),
            diagnostic,
        });
    }
    let aggregate = aggregate_verdict(&rows.iter().map(|r| r.diagnostic.verdict).collect::<Vec<_>>());
    Ok(ConsistencyReport { orbit_id: betas.orbit_id, rows, aggregate })
}

/// Membership of the boundary right-hand sides in the regular class: for
/// each border orbit the beta-combinations of the side traces must pass the
/// weighted diagnostic.
pub fn check_boundary_data<T: Real>(
    spec: &ProblemSpec<T>,
    betas: &[BetaTable<T>],
) -> Result<Vec<ConsistencyReport<T>>, ConsistencyError> {
    let eps = spec.truncation.epsilon;
    let mut out = Vec::new();
    for bt in betas {
        let model = spec.orbit(bt.orbit_id).expect("beta table for unknown orbit");
        let report = consistency_of_traces(bt, &|angle, side| {
            let f = spec.boundary_rhs(bt.orbit_id, angle, side);
            BoundaryTrace::from_profile(&f, model.angles[angle], side, eps, DEFAULT_LEVELS)
        })?;
        out.push(report);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionVerdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Coefficient condition of the border case for one orbit: the exterior
/// coefficient and its tangential derivative vanish at the vertex, and the
/// weight-profile combinations pass the weighted diagnostic (checked on the
/// traces of `B_{j sigma} e_k` for each basis constant vector).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CoefficientConditionReport<T: Real> {
    pub orbit_id: u32,
    /// (a(0), da/dtau(0)) per exterior term on this orbit.
    pub exterior_vertex: Vec<(T, T)>,
    pub vertex_ok: bool,
    /// Diagnostics of the weight-profile combinations, one report per basis
    /// constant vector.
    pub profile_reports: Vec<ConsistencyReport<T>>,
    pub verdict: ConditionVerdict,
}

pub fn check_coefficient_condition<T: Real>(
    spec: &ProblemSpec<T>,
    betas: &BetaTable<T>,
) -> Result<CoefficientConditionReport<T>, ConsistencyError> {
    let model = spec.orbit(betas.orbit_id).expect("beta table for unknown orbit");
    let eps = spec.truncation.epsilon;
    let tol = T::of(1e-8);

    // vertex values of the exterior coefficients by Richardson extrapolation
    // over the two finest dyadic levels
    let mut exterior_vertex = Vec::new();
    let mut vertex_ok = true;
    for e in spec.exterior_terms.iter().filter(|e| e.orbit_id == betas.orbit_id) {
        let tr = BoundaryTrace::from_profile(
            &e.coeff,
            model.angles[e.angle],
            e.side,
            eps,
            DEFAULT_LEVELS,
        );
        let m = tr.levels();
        let a0 = T::of(2.0) * tr.values[m] - tr.values[m - 1];
        let a1 = T::of(2.0) * tr.derivs[m - 1] - tr.derivs[m - 2];
        if a0.abs() >= tol || a1.abs() >= tol {
            vertex_ok = false;
        }
        exterior_vertex.push((a0, a1));
    }

    // weight-profile combinations: traces of B_{j sigma} e_k
    let n = model.n_angles();
    let mut profile_reports = Vec::new();
    for k in 0..n {
        let report = consistency_of_traces(betas, &|angle, side| {
            let radii: Vec<T> =
                (0..=DEFAULT_LEVELS).map(|m| eps * T::of(2.0).powi(-(m as i32))).collect();
            let mut values = vec![T::zero(); radii.len()];
            let mut derivs = vec![T::zero(); radii.len() - 1];
            let mids: Vec<T> = radii.windows(2).map(|w| (w[0] + w[1]) * T::of(0.5)).collect();
            for t in model.row_terms(angle, side) {
                if t.target != k {
                    continue;
                }
                match &t.weight_profile {
                    Some(p) => {
                        for (v, &r) in values.iter_mut().zip(&radii) {
                            *v = *v + p.eval(r, model.angles[angle], side);
                        }
                        for (d, &r) in derivs.iter_mut().zip(&mids) {
                            *d = *d + p.eval_deriv(r, model.angles[angle], side);
                        }
                    }
                    None => {
                        for v in values.iter_mut() {
                            *v = *v + t.weight;
                        }
                    }
                }
            }
            BoundaryTrace { radii: radii.clone(), values, midpoints: mids, derivs }
        })?;
        profile_reports.push(report);
    }

    let profile_verdicts: Vec<IntegralVerdict> =
        profile_reports.iter().map(|r| r.aggregate).collect();
    let profiles = aggregate_verdict(&profile_verdicts);
    let verdict = if !vertex_ok || profiles == IntegralVerdict::Divergent {
        ConditionVerdict::Fails
    } else if profiles == IntegralVerdict::Finite {
        ConditionVerdict::Holds
    } else {
        ConditionVerdict::Inconclusive
    };
    Ok(CoefficientConditionReport {
        orbit_id: betas.orbit_id,
        exterior_vertex,
        vertex_ok,
        profile_reports,
        verdict,
    })
}

/// Affine solution set `{C : B C(0) = -B^v(0)}` of the admissibility system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct AffineSet<T: Real> {
    /// One admissible vector, when the system is solvable.
    pub particular: Option<Vec<T>>,
    /// Basis of `{C~ : (B C~)(0) = 0}`.
    pub basis: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct AdmissibilityReport<T: Real> {
    pub orbit_id: u32,
    /// Residuals of `B^v(0) + (B C)(0)` per row (j, sigma).
    pub residuals: Vec<T>,
    pub admissible: bool,
    pub admissible_set: AffineSet<T>,
}

/// Test the pair (v, C) for admissibility on one orbit and describe the full
/// admissible set of constant vectors for this v. `v_trace` is the sampled
/// composition of v with the exterior transformation, as a function of
/// arclength along the source side.
pub fn check_admissible<T: Real>(
    spec: &ProblemSpec<T>,
    orbit_id: u32,
    v_trace: &ScalarFn<T>,
    c_vec: &[T],
) -> Result<AdmissibilityReport<T>, ConsistencyError> {
    let model = spec.orbit(orbit_id).expect("unknown orbit");
    let n = model.n_angles();
    assert_eq!(c_vec.len(), n, "constant vector length must match angle count");

    // row values of (B C)(0) depend linearly on C through the frozen weights
    let rows = model.rows();
    let mut bmat = vec![vec![T::zero(); n]; rows.len()];
    for (ri, (j, side)) in rows.iter().enumerate() {
        for t in model.row_terms(*j, *side) {
            bmat[ri][t.target] += t.weight;
        }
    }
    // B^v(0) per row: exterior coefficient value at the vertex times v(0)
    let mut v0 = vec![T::zero(); rows.len()];
    for e in spec.exterior_terms.iter().filter(|e| e.orbit_id == orbit_id) {
        let ri = rows
            .iter()
            .position(|(j, s)| *j == e.angle && *s == e.side)
            .expect("exterior term on unknown row");
        let a0 = e.coeff.eval(T::zero(), model.angles[e.angle], e.side);
        let vv = v_trace.eval(T::zero(), model.angles[e.angle], e.side);
        v0[ri] = v0[ri] + a0 * vv;
    }

    let residuals: Vec<T> = (0..rows.len())
        .map(|ri| {
            let bc = bmat[ri].iter().zip(c_vec).fold(T::zero(), |s, (a, b)| s + *a * *b);
            v0[ri] + bc
        })
        .collect();
    let scale = residuals
        .iter()
        .map(|r| r.abs())
        .chain(v0.iter().map(|r| r.abs()))
        .fold(T::one(), T::max);
    let admissible = residuals.iter().all(|r| r.abs() < T::of(1e-8) * scale);

    // describe the admissible set: solve bmat * C = -v0
    let cm = CMat::from_rows(
        bmat.iter().map(|r| r.iter().map(|&x| cre(x)).collect()).collect(),
    );
    let rhs: Vec<_> = v0.iter().map(|&x| cre(-x)).collect();
    let (x, res) = lstsq(&cm, &rhs, T::of(1e-10));
    let rhs_norm = v0.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
    let particular = if res <= T::of(1e-8) * rhs_norm.max(T::one()) {
        Some(x.iter().map(|z| z.re).collect())
    } else {
        None
    };
    let basis = null_space(&cm, T::of(1e-10))
        .into_iter()
        .map(|v| normalize_phase(&v).iter().map(|z| z.re).collect())
        .collect();
    Ok(AdmissibilityReport {
        orbit_id,
        residuals,
        admissible,
        admissible_set: AffineSet { particular, basis },
    })
}
