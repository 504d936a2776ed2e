//! The Preserves / Border / Violates decision scheme.
//!
//! The verdict is a function of the band spectra of the per-orbit pencils:
//! no band eigenvalues anywhere means every generalized solution is `W^2`
//! (Preserves); an improper band eigenvalue at any orbit means smoothness is
//! violated by an explicit singular witness (Violates); the remaining case
//! is the border case, where every orbit's band spectrum is empty or exactly
//! the proper eigenvalue `-i` and smoothness hinges on consistency
//! obligations attached to the data and coefficients.

use crate::consistency::{
    check_admissible, check_boundary_data, check_coefficient_condition, consistency_of_traces,
    dependency_betas, hat_operators, BetaTable, BoundaryTrace,
    ConsistencyError, ConsistencyReport, IntegralVerdict, DEFAULT_LEVELS,
};
use crate::geometry::{freeze, GeometryError, OmegaApproach, OrbitModel, ProblemSpec, ScalarFn};
use crate::num::{c, cre, Real, C};
use crate::pencil::{
    AngularProfile, Band, FundJet, JordanStructure, Pencil, PencilError, Properness,
    SpectralReport,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
    #[error("orbit {orbit_id}: proper/improper decision ambiguous (poly-fit residual in the manual-review zone or ill-conditioned rank); verdict withheld")]
    AmbiguousEigenvalue { orbit_id: u32 },
    #[error("witness requested for a proper eigenvalue; no witness exists on this path")]
    WitnessForProper,
    #[error("witness construction failed: {0}")]
    WitnessConstruction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Preserves,
    Border,
    Violates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObligationStatus {
    Satisfied,
    Failed,
    Inconclusive,
    NotEvaluated,
}

impl From<IntegralVerdict> for ObligationStatus {
    fn from(v: IntegralVerdict) -> Self {
        match v {
            IntegralVerdict::Finite => ObligationStatus::Satisfied,
            IntegralVerdict::Divergent => ObligationStatus::Failed,
            IntegralVerdict::Inconclusive => ObligationStatus::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObligationKind {
    /// Boundary right-hand sides belong to the regular trace class.
    RhsConsistency,
    /// Exterior coefficient vanishes at the vertex.
    ExteriorVertexValue,
    /// Tangential derivative of the exterior coefficient vanishes.
    ExteriorTangentialDerivative,
    /// Weight-profile combinations pass the weighted integral.
    WeightProfileIntegral,
    /// Admissibility-based condition, checked on the generator family.
    AdmissibilityGenerators,
}

/// One consistency requirement attached to a border verdict, with its check
/// result where the spec supplies enough data to evaluate it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Obligation<T: Real> {
    pub orbit_id: u32,
    pub kind: ObligationKind,
    pub description: String,
    pub status: ObligationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyReport<T>>,
}

/// Classification outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Verdict<T: Real> {
    pub kind: VerdictKind,
    pub per_orbit: Vec<SpectralReport<T>>,
    pub obligations: Vec<Obligation<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SingularWitness<T>>,
    pub beta_tables: Vec<BetaTable<T>>,
}

/// Explicit singular function certifying the violation of smoothness:
/// `W = r^{i lambda0} sum_{l<=m} (1/l!) (i ln r)^l Phi^{(m-l)}(omega)`,
/// cut off at `cutoff_radius`. The induced volume forcing `P(xi W)` is
/// supported on the cutoff annulus and square integrable while `xi W`
/// itself fails `W^2` near the vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct SingularWitness<T: Real> {
    pub orbit_id: u32,
    #[serde(with = "lambda_serde")]
    pub lambda0: C<T>,
    pub log_power: usize,
    pub cutoff_radius: T,
    pub model: OrbitModel<T>,
    /// Chain coefficient vectors c^(0) .. c^(m) in the fundamental basis.
    #[serde(skip)]
    pub chain: Vec<Vec<C<T>>>,
    /// Sampled angular profiles Phi^(l), outer index l, inner per angle.
    pub angular_profiles: Vec<Vec<AngularProfile<T>>>,
    pub interior_residual: T,
    pub boundary_residual: T,
    /// Discrete W^2-seminorm of W per dyadic annulus `[2^{-m-1}, 2^{-m}]`.
    pub w2_dyadic: Vec<T>,
    /// Samples (angle, r, omega, value) of the induced forcing, real part.
    pub induced_f0: Vec<ForcingSample<T>>,
}

mod lambda_serde {
    use super::*;
    #[derive(Serialize, Deserialize)]
    struct ReIm<T> {
        re: T,
        im: T,
    }
    pub fn serialize<S: serde::Serializer, T: Real + Serialize>(
        z: &C<T>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }
    pub fn deserialize<'de, D: serde::Deserializer<'de>, T: Real + Deserialize<'de>>(
        d: D,
    ) -> Result<C<T>, D::Error> {
        let r = ReIm::<T>::deserialize(d)?;
        Ok(C::new(r.re, r.im))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ForcingSample<T: Real> {
    pub angle: usize,
    pub r: T,
    pub omega: T,
    pub value: T,
}

impl<T: Real> SingularWitness<T> {
    /// Evaluate W on angle `k` at polar `(r, omega)`.
    pub fn value(&self, k: usize, r: T, omega: T) -> C<T> {
        let pencil = Pencil::new(&self.model);
        WitnessEval::new(&pencil, self.lambda0, &self.chain, self.log_power, self.cutoff_radius)
            .value(k, r, omega)
    }

    /// `xi(r) * Re W`: the truncated witness the solver reproduces.
    pub fn truncated_value(&self, k: usize, r: T, omega: T) -> T {
        let pencil = Pencil::new(&self.model);
        let ev =
            WitnessEval::new(&pencil, self.lambda0, &self.chain, self.log_power, self.cutoff_radius);
        (ev.value(k, r, omega) * cre(ev.cutoff(r).0)).re
    }

    /// Induced forcing `P(xi W)` (real part) at polar coordinates.
    pub fn forcing(&self, k: usize, r: T, omega: T) -> T {
        let pencil = Pencil::new(&self.model);
        WitnessEval::new(&pencil, self.lambda0, &self.chain, self.log_power, self.cutoff_radius)
            .forcing(k, r, omega)
            .re
    }
}

/// Runtime evaluator for witness fields.
pub struct WitnessEval<'a, 'm, T: Real> {
    pencil: &'a Pencil<'m, T>,
    lambda: C<T>,
    chain: &'a [Vec<C<T>>],
    m: usize,
    cutoff: T,
}

impl<'a, 'm, T: Real> WitnessEval<'a, 'm, T> {
    pub fn new(
        pencil: &'a Pencil<'m, T>,
        lambda: C<T>,
        chain: &'a [Vec<C<T>>],
        m: usize,
        cutoff: T,
    ) -> Self {
        assert!(m < chain.len().max(1) + 1);
        WitnessEval { pencil, lambda, chain, m, cutoff }
    }

    /// Angular chain function Phi^(l) with its omega-jet:
    /// `Phi^(l) = sum_q (1/q!) (d/d lambda)^q basis . c^(l-q)` (q <= 1 here;
    /// chains of length > 2 cannot occur for the second-order pencil).
    fn phi_jet(&self, k: usize, l: usize, omega: T) -> FundJet<T> {
        let base = &self.pencil.fundamental_jet(k, self.lambda, &[omega])[0];
        let cl = &self.chain[l];
        let mut phi = base[0].phi * cl[2 * k] + base[1].phi * cl[2 * k + 1];
        let mut dphi = base[0].dphi * cl[2 * k] + base[1].dphi * cl[2 * k + 1];
        let mut ddphi = base[0].ddphi * cl[2 * k] + base[1].ddphi * cl[2 * k + 1];
        if l >= 1 {
            let dl = &self.pencil.fundamental_lambda_jet(k, self.lambda, &[omega])[0];
            let cp = &self.chain[l - 1];
            phi = phi + dl[0].phi * cp[2 * k] + dl[1].phi * cp[2 * k + 1];
            dphi = dphi + dl[0].dphi * cp[2 * k] + dl[1].dphi * cp[2 * k + 1];
            ddphi = ddphi + dl[0].ddphi * cp[2 * k] + dl[1].ddphi * cp[2 * k + 1];
        }
        FundJet { phi, dphi, ddphi }
    }

    /// log factors g_l(ln r) = (i ln r)^l / l! for l = 0..=m.
    fn log_factors(&self, r: T) -> Vec<C<T>> {
        let il = c(T::zero(), r.ln());
        let mut g = vec![cre(T::one())];
        for l in 1..=self.m {
            let prev = g[l - 1];
            g.push(prev * il / cre(T::of_usize(l)));
        }
        g
    }

    pub fn value(&self, k: usize, r: T, omega: T) -> C<T> {
        let g = self.log_factors(r);
        let rp = self.r_pow(r);
        let mut acc = C::new(T::zero(), T::zero());
        for l in 0..=self.m {
            acc = acc + g[l] * self.phi_jet(k, self.m - l, omega).phi;
        }
        rp * acc
    }

    fn r_pow(&self, r: T) -> C<T> {
        // r^{i lambda} = exp(i lambda ln r)
        (c(T::zero(), T::one()) * self.lambda * cre(r.ln())).exp()
    }

    /// Polar derivative data of W at (r, omega): value, W_r, W_omega, W_rr,
    /// W_r omega, W_omega omega.
    fn jets(&self, k: usize, r: T, omega: T) -> WJet<T> {
        let mu = c(T::zero(), T::one()) * self.lambda;
        let g = self.log_factors(r);
        let rp = self.r_pow(r);
        let mut gv = C::new(T::zero(), T::zero()); // G
        let mut gs = C::new(T::zero(), T::zero()); // dG/d ln r
        let mut gss = C::new(T::zero(), T::zero());
        let mut gw = C::new(T::zero(), T::zero()); // dG/d omega
        let mut gsw = C::new(T::zero(), T::zero());
        let mut gww = C::new(T::zero(), T::zero());
        let i1 = c(T::zero(), T::one());
        for l in 0..=self.m {
            let jet = self.phi_jet(k, self.m - l, omega);
            gv = gv + g[l] * jet.phi;
            gw = gw + g[l] * jet.dphi;
            gww = gww + g[l] * jet.ddphi;
            if l >= 1 {
                gs = gs + i1 * g[l - 1] * jet.phi;
                gsw = gsw + i1 * g[l - 1] * jet.dphi;
            }
            if l >= 2 {
                gss = gss - g[l - 2] * jet.phi;
            }
        }
        let rinv = cre(T::one() / r);
        let w = rp * gv;
        let wr = rp * rinv * (mu * gv + gs);
        let wrr = rp * rinv * rinv
            * (mu * (mu - cre(T::one())) * gv + (mu * cre(T::of(2.0)) - cre(T::one())) * gs + gss);
        let womega = rp * gw;
        let wromega = rp * rinv * (mu * gw + gsw);
        let womega2 = rp * gww;
        WJet { w, wr, wrr, womega, wromega, womega2 }
    }

    /// Quintic cutoff: 1 on `r <= cutoff/4`, 0 on `r >= cutoff/2`, C^2 in
    /// between. Returns (xi, xi', xi'').
    pub fn cutoff(&self, r: T) -> (T, T, T) {
        let a = self.cutoff * T::of(0.25);
        let b = self.cutoff * T::of(0.5);
        if r <= a {
            return (T::one(), T::zero(), T::zero());
        }
        if r >= b {
            return (T::zero(), T::zero(), T::zero());
        }
        let h = b - a;
        let x = (r - a) / h;
        let s = x * x * x * (T::of(10.0) - T::of(15.0) * x + T::of(6.0) * x * x);
        let ds = x * x * (T::of(30.0) - T::of(60.0) * x + T::of(30.0) * x * x) / h;
        let dds = x * (T::of(60.0) - T::of(180.0) * x + T::of(120.0) * x * x) / (h * h);
        (T::one() - s, -ds, -dds)
    }

    /// Induced forcing `P(xi W) = 2 (p grad xi) . grad W + W P(xi)` (the
    /// `xi P W` term vanishes identically).
    pub fn forcing(&self, k: usize, r: T, omega: T) -> C<T> {
        let (_, dxi, ddxi) = self.cutoff(r);
        if dxi == T::zero() && ddxi == T::zero() {
            return C::new(T::zero(), T::zero());
        }
        let p = self.pencil.model.principal_part.coefficients(k);
        let (s, cs) = omega.sin_cos();
        let e = [cs, s];
        let epe = p[0] * e[0] * e[0] + T::of(2.0) * p[1] * e[0] * e[1] + p[2] * e[1] * e[1];
        let trp = p[0] + p[2];
        let jet = self.jets(k, r, omega);
        // grad W in Cartesian components
        let et = [-s, cs];
        let wx = jet.wr * cre(e[0]) + jet.womega * cre(et[0] / r);
        let wy = jet.wr * cre(e[1]) + jet.womega * cre(et[1] / r);
        // (p e) . grad W
        let pe = [p[0] * e[0] + p[1] * e[1], p[1] * e[0] + p[2] * e[1]];
        let pegrad = wx * cre(pe[0]) + wy * cre(pe[1]);
        let term1 = pegrad * cre(T::of(2.0) * dxi);
        let term2 = jet.w * cre(ddxi * epe + dxi / r * (trp - epe));
        term1 + term2
    }

    /// Residual of the interior equation `P W = 0` at (r, omega), computed
    /// from the chain algebra (relative to the local scale of W's second
    /// derivatives).
    pub fn interior_residual(&self, k: usize, r: T, omega: T) -> T {
        let mu = c(T::zero(), T::one()) * self.lambda;
        let p = self.pencil.model.principal_part.coefficients(k);
        let g = self.log_factors(r);
        // coefficient of g_p: Ptilde(mu) Phi^{m-p} with the log cross terms;
        // for a correct chain every coefficient vanishes.
        let mut acc = C::new(T::zero(), T::zero());
        for pw in 0..=self.m {
            let jet = self.phi_jet(k, self.m - pw, omega);
            let mut coef = apply_ptilde(p, omega, mu, &jet);
            if self.m - pw >= 1 {
                // d/d lambda of Ptilde acting on the previous chain element
                let jprev = self.phi_jet(k, self.m - pw - 1, omega);
                coef = coef + dlambda_ptilde(p, omega, self.lambda, &jprev);
            }
            acc = acc + g[pw] * coef;
        }
        let scale = self.jets(k, r, omega).wrr.norm().max(T::of(1e-300));
        let rm2 = (self.r_pow(r) * cre(T::one() / (r * r))).norm();
        rm2 * acc.norm() / scale.max(rm2 * acc.norm() * T::of(1e-30))
    }

    /// Residual of the nonlocal boundary rows at radius r (max over rows),
    /// evaluated directly by summing W at the transformed points.
    pub fn boundary_residual(&self, r: T) -> T {
        let model = self.pencil.model;
        let mut worst = T::zero();
        let mut scale = T::zero();
        for (j, side) in model.rows() {
            let mut acc = C::new(T::zero(), T::zero());
            for t in model.row_terms(j, side) {
                let theta = t.image_ray(model.angles[j]);
                let val = self.value(t.target, r * t.homothety, theta);
                acc = acc + val * cre(t.weight);
                scale = scale.max(val.norm() * t.weight.abs().max(T::one()));
            }
            worst = worst.max(acc.norm());
        }
        worst / scale.max(T::of(1e-300))
    }
}

struct WJet<T: Real> {
    w: C<T>,
    wr: C<T>,
    wrr: C<T>,
    womega: C<T>,
    wromega: C<T>,
    womega2: C<T>,
}

/// `Ptilde(omega, d/d omega, mu)` applied to a jet.
fn apply_ptilde<T: Real>(p: [T; 3], omega: T, mu: C<T>, jet: &FundJet<T>) -> C<T> {
    let (a, b, cc) = crate::pencil::angular_ode_coeffs(p, omega, mu);
    cre(a) * jet.ddphi + b * jet.dphi + cc * jet.phi
}

/// d/d lambda of `Ptilde` applied to a jet (mu = i lambda).
fn dlambda_ptilde<T: Real>(p: [T; 3], omega: T, lambda: C<T>, jet: &FundJet<T>) -> C<T> {
    let h = T::of(1e-6) * T::one().max(lambda.norm());
    let i1 = c(T::zero(), T::one());
    let plus = {
        let mu = i1 * (lambda + cre(h));
        apply_ptilde(p, omega, mu, jet)
    };
    let minus = {
        let mu = i1 * (lambda - cre(h));
        apply_ptilde(p, omega, mu, jet)
    };
    (plus - minus) / cre(T::of(2.0) * h)
}

/// Construct the singular witness for an improper band eigenvalue: the
/// smallest log power making W non-polynomial (0 unless the eigenvalue is
/// -i with polynomial eigenvectors, where the Jordan chain supplies m = 1).
pub fn witness_singular_function<T: Real>(
    pencil: &Pencil<T>,
    js: &JordanStructure<T>,
    properness: Properness,
    cutoff: T,
) -> Result<SingularWitness<T>, ClassifyError> {
    if properness == Properness::Proper {
        return Err(ClassifyError::WitnessForProper);
    }
    let lambda = js.lambda;
    let tol = T::of(1e-8);
    let at_minus_i = (lambda - c(T::zero(), -T::one())).norm() <= tol;
    // choose chain and log power
    let (chain_idx, m) = if !at_minus_i {
        (0usize, 0usize)
    } else {
        // prefer a non-polynomial eigenvector; otherwise take a genuine
        // Jordan chain and use the log term
        let mut pick = None;
        for (q, chain) in js.chains.iter().enumerate() {
            let v = &chain.vectors[0];
            let mut poly = true;
            for k in 0..pencil.model.n_angles() {
                let (omegas, profile) = pencil.sample_profile(v, k, lambda, 64);
                let res = crate::pencil::homogeneous_fit_residual(&omegas, &profile, 1);
                if res > T::of(1e-6) {
                    poly = false;
                    break;
                }
            }
            if !poly {
                pick = Some((q, 0));
                break;
            }
        }
        match pick {
            Some(p) => p,
            None => {
                let q = js
                    .has_associated
                    .iter()
                    .position(|&a| a)
                    .ok_or_else(|| {
                        ClassifyError::WitnessConstruction(
                            "eigenvalue flagged improper but all eigenvectors are polynomial and \
                             no associated vector exists"
                                .into(),
                        )
                    })?;
                (q, 1)
            }
        }
    };
    let chain: Vec<Vec<C<T>>> = js.chains[chain_idx].vectors[..=m].to_vec();
    let ev = WitnessEval::new(pencil, lambda, &chain, m, cutoff);
    let model = pencil.model;
    let n = model.n_angles();

    // residuals at 200 sample points: 20 radii x 10 angular stations spread
    // over the angles (interior), plus 200 boundary radii
    let mut interior_residual = T::zero();
    for k in 0..n {
        let w = model.angles[k];
        for ir in 0..20 {
            let r = cutoff * T::of(0.9) * T::of(2.0).powi(-(ir as i32));
            for ia in 0..10 {
                let om = -w * T::of(0.9)
                    + T::of(1.8) * w * T::of_usize(ia) / T::of(9.0);
                interior_residual = interior_residual.max(ev.interior_residual(k, r, om));
            }
        }
    }
    let mut boundary_residual = T::zero();
    for ir in 0..200 {
        let r = cutoff * T::of(0.95) * T::of(0.97).powi(ir as i32);
        boundary_residual = boundary_residual.max(ev.boundary_residual(r));
    }

    // dyadic W^2-seminorm levels of W (quadrature on each annulus)
    let mut w2_dyadic = Vec::new();
    for level in 1..=20 {
        let r1 = T::of(2.0).powi(-(level as i32));
        let r0 = r1 * T::of(0.5);
        let mut acc = T::zero();
        let (nr, nw) = (8, 48);
        for k in 0..n {
            let wk = model.angles[k];
            for ir in 0..nr {
                let r = r0 + (r1 - r0) * (T::of_usize(ir) + T::of(0.5)) / T::of_usize(nr);
                for iw in 0..nw {
                    let om = -wk + T::of(2.0) * wk * (T::of_usize(iw) + T::of(0.5))
                        / T::of_usize(nw);
                    let jet = ev.jets(k, r, om);
                    acc = acc
                        + hessian_frobenius_sq(&jet, r, om)
                            * r
                            * (r1 - r0)
                            / T::of_usize(nr)
                            * (T::of(2.0) * wk / T::of_usize(nw));
                }
            }
        }
        w2_dyadic.push(acc);
    }

    // induced forcing samples on the cutoff annulus
    let mut induced_f0 = Vec::new();
    for k in 0..n {
        let wk = model.angles[k];
        for ir in 0..24 {
            let r = cutoff * T::of(0.2)
                + cutoff * T::of(0.35) * T::of_usize(ir) / T::of(23.0);
            for iw in 0..32 {
                let om = -wk + T::of(2.0) * wk * T::of_usize(iw) / T::of(31.0);
                induced_f0.push(ForcingSample {
                    angle: k,
                    r,
                    omega: om,
                    value: ev.forcing(k, r, om).re,
                });
            }
        }
    }

    // sampled profiles Phi^(l)
    let mut angular_profiles = Vec::new();
    for l in 0..=m {
        let mut per_angle = Vec::new();
        for k in 0..n {
            let wk = model.angles[k];
            let omegas: Vec<T> = (0..64)
                .map(|i| -wk + T::of(2.0) * wk * T::of_usize(i) / T::of(63.0))
                .collect();
            let vals: Vec<C<T>> = omegas.iter().map(|&om| ev.phi_jet(k, l, om).phi).collect();
            per_angle.push(AngularProfile {
                angle: k,
                omega: omegas,
                re: vals.iter().map(|z| z.re).collect(),
                im: vals.iter().map(|z| z.im).collect(),
            });
        }
        angular_profiles.push(per_angle);
    }

    Ok(SingularWitness {
        orbit_id: model.orbit_id,
        lambda0: lambda,
        log_power: m,
        cutoff_radius: cutoff,
        model: model.clone(),
        chain,
        angular_profiles,
        interior_residual,
        boundary_residual,
        w2_dyadic,
        induced_f0,
    })
}

/// Frobenius norm squared of the Cartesian Hessian from polar jets.
fn hessian_frobenius_sq<T: Real>(jet: &WJet<T>, r: T, omega: T) -> T {
    let (s, cs) = omega.sin_cos();
    let urr = jet.wrr;
    let ur_r = jet.wr * cre(T::one() / r);
    let uww_rr = jet.womega2 * cre(T::one() / (r * r));
    let mixed = (jet.wromega - jet.womega * cre(T::one() / r)) * cre(T::one() / r);
    let u11 = urr * cre(cs * cs) - mixed * cre(T::of(2.0) * cs * s)
        + (ur_r + uww_rr) * cre(s * s);
    let u22 = urr * cre(s * s) + mixed * cre(T::of(2.0) * cs * s)
        + (ur_r + uww_rr) * cre(cs * cs);
    let u12 = (urr - ur_r - uww_rr) * cre(cs * s) + mixed * cre(cs * cs - s * s);
    u11.norm_sqr() + T::of(2.0) * u12.norm_sqr() + u22.norm_sqr()
}

/// Enumerate the border-case obligations of one orbit, evaluating each
/// check the spec's data allows.
pub fn border_requirements<T: Real>(
    spec: &ProblemSpec<T>,
    betas: &BetaTable<T>,
) -> Result<Vec<Obligation<T>>, ClassifyError> {
    let orbit_id = betas.orbit_id;
    let model = spec.orbit(orbit_id).expect("orbit");
    let mut out = Vec::new();

    // right-hand side consistency
    let rhs_reports = check_boundary_data(spec, std::slice::from_ref(betas))?;
    let rhs_report = rhs_reports.into_iter().next().unwrap();
    out.push(Obligation {
        orbit_id,
        kind: ObligationKind::RhsConsistency,
        description: beta_combination_text(betas),
        status: rhs_report.aggregate.into(),
        consistency: Some(rhs_report),
    });

    // coefficient conditions
    let coef = check_coefficient_condition(spec, betas)?;
    let has_exterior = !coef.exterior_vertex.is_empty();
    if has_exterior {
        let v0_ok = coef.exterior_vertex.iter().all(|(a0, _)| a0.abs() < T::of(1e-8));
        let d0_ok = coef.exterior_vertex.iter().all(|(_, a1)| a1.abs() < T::of(1e-8));
        out.push(Obligation {
            orbit_id,
            kind: ObligationKind::ExteriorVertexValue,
            description: "a(0) = 0 for every exterior coefficient".into(),
            status: if v0_ok { ObligationStatus::Satisfied } else { ObligationStatus::Failed },
            consistency: None,
        });
        out.push(Obligation {
            orbit_id,
            kind: ObligationKind::ExteriorTangentialDerivative,
            description: "da/dtau(0) = 0 for every exterior coefficient".into(),
            status: if d0_ok { ObligationStatus::Satisfied } else { ObligationStatus::Failed },
            consistency: None,
        });
    }
    let profile_status: ObligationStatus = {
        let verdicts: Vec<IntegralVerdict> =
            coef.profile_reports.iter().map(|r| r.aggregate).collect();
        crate::consistency::aggregate_verdict(&verdicts).into()
    };
    out.push(Obligation {
        orbit_id,
        kind: ObligationKind::WeightProfileIntegral,
        description:
            "weighted r^-1 integral of the weight-profile derivative combinations is finite"
                .into(),
        status: profile_status,
        consistency: coef.profile_reports.into_iter().next(),
    });

    // admissibility generators (the homogeneous-data condition); for
    // exterior terms supported strictly inside the domain this is the only
    // obligation beyond the rhs class
    if has_exterior {
        let status = generator_condition(spec, betas, model)?;
        let interior_only = spec
            .exterior_terms
            .iter()
            .filter(|e| e.orbit_id == orbit_id)
            .all(|e| e.approach == OmegaApproach::InteriorSupport);
        let mut description = String::from(
            "generator-based admissibility check (v composed with the exterior map frozen to 1 \
             and to y2 near the vertex)",
        );
        if interior_only {
            description.push_str(
                "; exterior support lies strictly inside the domain, so this condition alone \
                 governs homogeneous data",
            );
        }
        out.push(Obligation {
            orbit_id,
            kind: ObligationKind::AdmissibilityGenerators,
            description,
            status,
            consistency: None,
        });
    }
    Ok(out)
}

fn beta_combination_text<T: Real>(betas: &BetaTable<T>) -> String {
    let mut parts = Vec::new();
    for dep in &betas.dependent {
        let mut s = format!("Z[{},{}]", dep.angle, u8::from(dep.side));
        for ((j, side), b) in betas.independent.iter().zip(&dep.betas) {
            s.push_str(&format!(" - ({:.6}) Z[{},{}]", b.as_f64(), j, u8::from(*side)));
        }
        parts.push(s);
    }
    format!(
        "weighted r^-1 integral of d/dr of {} must be finite for the boundary data",
        parts.join("; ")
    )
}

/// Check the admissibility-based condition on the two generators the
/// half-plane analysis uses: v with `v(Omega(y)) = 1` and `= y2` near the
/// vertex.
fn generator_condition<T: Real>(
    spec: &ProblemSpec<T>,
    betas: &BetaTable<T>,
    model: &OrbitModel<T>,
) -> Result<ObligationStatus, ClassifyError> {
    let eps = spec.truncation.epsilon;
    let n = model.n_angles();
    let mut statuses = Vec::new();
    for gen in [ScalarFn::Const(T::one()), ScalarFn::LinearY2(T::one())] {
        // admissible set for this generator
        let rep = check_admissible(spec, betas.orbit_id, &gen, &vec![T::zero(); n])?;
        let c_vec = match rep.admissible_set.particular {
            Some(c) => c,
            None => {
                statuses.push(ObligationStatus::Failed);
                continue;
            }
        };
        // consistency of B^v + B C traces
        let report = consistency_of_traces(betas, &|angle, side| {
            let radii: Vec<T> =
                (0..=DEFAULT_LEVELS).map(|m| eps * T::of(2.0).powi(-(m as i32))).collect();
            let mids: Vec<T> = radii.windows(2).map(|w| (w[0] + w[1]) * T::of(0.5)).collect();
            let half = model.angles[angle];
            let eval = |r: T| -> T {
                let mut v = T::zero();
                for e in spec.exterior_on(betas.orbit_id, angle, side) {
                    v = v + e.coeff.eval(r, half, side) * gen.eval(r, half, side);
                }
                for t in model.row_terms(angle, side) {
                    v = v + t.weight_at(r, half) * c_vec[t.target];
                }
                v
            };
            let values: Vec<T> = radii.iter().map(|&r| eval(r)).collect();
            let derivs: Vec<T> = mids
                .iter()
                .map(|&r| {
                    let mut d = T::zero();
                    for e in spec.exterior_on(betas.orbit_id, angle, side) {
                        d = d
                            + e.coeff.eval_deriv(r, half, side) * gen.eval(r, half, side)
                            + e.coeff.eval(r, half, side) * gen.eval_deriv(r, half, side);
                    }
                    for t in model.row_terms(angle, side) {
                        if let Some(p) = &t.weight_profile {
                            d = d + p.eval_deriv(r, half, side) * c_vec[t.target];
                        }
                    }
                    d
                })
                .collect();
            BoundaryTrace { radii: radii.clone(), values, midpoints: mids, derivs }
        })?;
        statuses.push(report.aggregate.into());
    }
    Ok(if statuses.iter().any(|s| *s == ObligationStatus::Failed) {
        ObligationStatus::Failed
    } else if statuses.iter().all(|s| *s == ObligationStatus::Satisfied) {
        ObligationStatus::Satisfied
    } else {
        ObligationStatus::Inconclusive
    })
}

/// Classify a problem spec: freeze, analyze every orbit's band spectrum,
/// and map the spectral picture to a verdict with obligations or a witness.
pub fn classify<T: Real>(spec: &ProblemSpec<T>) -> Result<Verdict<T>, ClassifyError> {
    classify_with_window(spec, (T::of(-8.0), T::of(8.0)))
}

pub fn classify_with_window<T: Real>(
    spec: &ProblemSpec<T>,
    window: (T, T),
) -> Result<Verdict<T>, ClassifyError> {
    let models = freeze(spec)?;
    let mut reports = Vec::new();
    for model in &models {
        let pencil = Pencil::new(model);
        let report = pencil.analyze(Band::regularity(), window)?;
        if report.any_ambiguous() {
            return Err(ClassifyError::AmbiguousEigenvalue { orbit_id: model.orbit_id });
        }
        reports.push(report);
    }

    let frozen_spec = ProblemSpec { orbits: models.clone(), ..spec.clone() };

    // Violates: any orbit with an improper band eigenvalue.
    if let Some((idx, report)) =
        reports.iter().enumerate().find(|(_, r)| r.first_improper().is_some())
    {
        let model = &models[idx];
        let pencil = Pencil::new(model);
        let eig = report.first_improper().unwrap();
        let js = pencil.jordan_structure(eig.lambda)?;
        let (_, d_chi_min) = model.chi_bounds();
        let cutoff =
            d_chi_min * spec.truncation.epsilon.min(spec.truncation.kappa2);
        let witness = witness_singular_function(&pencil, &js, Properness::Improper, cutoff)?;
        return Ok(Verdict {
            kind: VerdictKind::Violates,
            per_orbit: reports,
            obligations: vec![],
            witness: Some(witness),
            beta_tables: vec![],
        });
    }

    // Border: at least one orbit with the proper -i spectrum.
    let border_orbits: Vec<&SpectralReport<T>> =
        reports.iter().filter(|r| r.is_border_spectrum()).collect();
    if !border_orbits.is_empty() {
        let mut obligations = Vec::new();
        let mut beta_tables = Vec::new();
        for rep in border_orbits {
            let model = models.iter().find(|m| m.orbit_id == rep.orbit_id).unwrap();
            let betas = dependency_betas(&hat_operators(model))?;
            obligations.extend(border_requirements(&frozen_spec, &betas)?);
            beta_tables.push(betas);
        }
        return Ok(Verdict {
            kind: VerdictKind::Border,
            per_orbit: reports,
            obligations,
            witness: None,
            beta_tables,
        });
    }

    Ok(Verdict {
        kind: VerdictKind::Preserves,
        per_orbit: reports,
        obligations: vec![],
        witness: None,
        beta_tables: vec![],
    })
}
