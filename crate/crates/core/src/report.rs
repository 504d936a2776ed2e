//! Serialization of reports: CSV builders and the JSON shapes emitted by
//! the command-line tool. All floating-point CSV output is printed with 17
//! significant digits so files round-trip bit-for-bit.

use crate::classifier::{SingularWitness, Verdict, VerdictKind};
use crate::consistency::ConsistencyReport;
use crate::num::Real;
use crate::pencil::{Properness, SpectralReport};
use crate::solver::DiscreteSolution;

/// 17-significant-digit float formatting (round-trip safe for f64).
pub fn fmt_float<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Compact JSON form of the spectral reports:
/// `[{orbit_id, ..., eigenvalues: [{re, im, mult, proper}]}]`.
pub fn spectral_json<T: Real>(reports: &[SpectralReport<T>]) -> serde_json::Value {
    let arr: Vec<serde_json::Value> = reports
        .iter()
        .map(|rep| {
            serde_json::json!({
                "orbit_id": rep.orbit_id,
                "band": { "bottom": rep.band.bottom.as_f64(), "top": rep.band.top.as_f64() },
                "search_window": [rep.search_window.0.as_f64(), rep.search_window.1.as_f64()],
                "argument_principle_count": rep.argument_principle_count,
                "window_warning": rep.window_warning,
                "eigenvalues": rep.eigenvalues.iter().map(|e| serde_json::json!({
                    "re": e.lambda.re.as_f64(),
                    "im": e.lambda.im.as_f64(),
                    "mult": e.algebraic_multiplicity,
                    "proper": e.proper == Properness::Proper,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::Value::Array(arr)
}

/// One row per eigenvalue: `orbit_id,re,im,mult,proper`.
pub fn spectral_csv<T: Real>(reports: &[SpectralReport<T>]) -> String {
    let mut out = String::from("orbit_id,re,im,mult,proper\n");
    for rep in reports {
        for e in &rep.eigenvalues {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                rep.orbit_id,
                fmt_float(e.lambda.re),
                fmt_float(e.lambda.im),
                e.algebraic_multiplicity,
                e.proper == Properness::Proper,
            ));
        }
    }
    out
}

/// Sweep output: `s,n_eigenvalues,im_lambda_min,case_label`.
pub fn sweep_csv<T: Real>(rows: &[(T, usize, Option<T>, String)]) -> String {
    let mut out = String::from("s,n_eigenvalues,im_lambda_min,case_label\n");
    for (s, n, im, label) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(*s),
            n,
            im.map(fmt_float).unwrap_or_default(),
            label,
        ));
    }
    out
}

/// Per-dependent-row dyadic integrals: `row_angle,row_side,m,r_m,i_m`.
pub fn consistency_csv<T: Real>(report: &ConsistencyReport<T>, eps: T) -> String {
    let mut out = String::from("angle,side,m,r_m,i_m\n");
    for row in &report.rows {
        for (m, i_m) in row.diagnostic.integrals.iter().enumerate() {
            let r_m = eps * T::of(2.0).powi(-(m as i32));
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.angle,
                u8::from(row.side),
                m,
                fmt_float(r_m),
                fmt_float(*i_m),
            ));
        }
    }
    out
}

/// Witness angular profiles: `l,angle,omega,re,im`.
pub fn witness_profiles_csv<T: Real>(w: &SingularWitness<T>) -> String {
    let mut out = String::from("l,angle,omega,re,im\n");
    for (l, per_angle) in w.angular_profiles.iter().enumerate() {
        for prof in per_angle {
            for i in 0..prof.omega.len() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    l,
                    prof.angle,
                    fmt_float(prof.omega[i]),
                    fmt_float(prof.re[i]),
                    fmt_float(prof.im[i]),
                ));
            }
        }
    }
    out
}

/// Witness induced forcing on the cutoff annulus: `angle,r,omega,f0`.
pub fn witness_forcing_csv<T: Real>(w: &SingularWitness<T>) -> String {
    let mut out = String::from("angle,r,omega,f0\n");
    for s in &w.induced_f0 {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.angle,
            fmt_float(s.r),
            fmt_float(s.omega),
            fmt_float(s.value),
        ));
    }
    out
}

/// Solution field as CSV: `angle,t,omega,value`.
pub fn solution_csv<T: Real>(sol: &DiscreteSolution<T>) -> String {
    let grid = &sol.grid;
    let mut out = String::from("angle,t,omega,value\n");
    for k in 0..grid.angles.len() {
        for it in 0..=grid.n_t {
            for iw in 0..=grid.n_omega {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    k,
                    fmt_float(grid.t_of(it)),
                    fmt_float(grid.omega_of(k, iw)),
                    fmt_float(sol.at(k, it, iw)),
                ));
            }
        }
    }
    out
}

/// Little-endian f64 row-major dump of the solution values.
pub fn solution_binary<T: Real>(sol: &DiscreteSolution<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(sol.values.len() * 8);
    for v in &sol.values {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

/// JSON sidecar describing the binary dump layout.
pub fn solution_sidecar<T: Real>(sol: &DiscreteSolution<T>, bin_name: &str) -> serde_json::Value {
    serde_json::json!({
        "binary": bin_name,
        "dtype": "float64-le",
        "layout": "row-major (angle, t, omega)",
        "n_angles": sol.grid.angles.len(),
        "n_t_points": sol.grid.n_t + 1,
        "n_omega_points": sol.grid.n_omega + 1,
        "t_min": sol.grid.t_min.as_f64(),
        "angles": sol.grid.angles.iter().map(|a| a.as_f64()).collect::<Vec<_>>(),
    })
}

pub fn verdict_kind_str(kind: VerdictKind) -> &'static str {
    match kind {
        VerdictKind::Preserves => "Preserves",
        VerdictKind::Border => "Border",
        VerdictKind::Violates => "Violates",
    }
}

/// Machine-readable verdict: kind, per-orbit spectra, obligations, witness
/// summary with pointers to the exported CSV files.
pub fn verdict_json<T: Real + serde::Serialize>(
    verdict: &Verdict<T>,
    witness_profiles_path: Option<&str>,
) -> serde_json::Value {
    let orbits: Vec<serde_json::Value> = verdict
        .per_orbit
        .iter()
        .map(|rep| {
            serde_json::json!({
                "orbit_id": rep.orbit_id,
                "argument_principle_count": rep.argument_principle_count,
                "window_warning": rep.window_warning,
                "eigenvalues": rep.eigenvalues.iter().map(|e| {
                    serde_json::json!({
                        "re": e.lambda.re.as_f64(),
                        "im": e.lambda.im.as_f64(),
                        "mult": e.algebraic_multiplicity,
                        "proper": e.proper == Properness::Proper,
                    })
                }).collect::<Vec<_>>(),
            })
        })
        .collect();
    let obligations: Vec<serde_json::Value> = verdict
        .obligations
        .iter()
        .map(|o| {
            serde_json::json!({
                "orbit_id": o.orbit_id,
                "kind": serde_json::to_value(o.kind).unwrap(),
                "description": o.description,
                "status": serde_json::to_value(o.status).unwrap(),
            })
        })
        .collect();
    let witness = verdict.witness.as_ref().map(|w| {
        serde_json::json!({
            "orbit_id": w.orbit_id,
            "lambda0": { "re": w.lambda0.re.as_f64(), "im": w.lambda0.im.as_f64() },
            "log_power": w.log_power,
            "cutoff_radius": w.cutoff_radius.as_f64(),
            "interior_residual": w.interior_residual.as_f64(),
            "boundary_residual": w.boundary_residual.as_f64(),
            "profiles_csv_path": witness_profiles_path,
        })
    });
    serde_json::json!({
        "kind": verdict_kind_str(verdict.kind),
        "orbits": orbits,
        "obligations": obligations,
        "witness": witness,
    })
}
