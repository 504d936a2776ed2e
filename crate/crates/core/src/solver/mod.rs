//! Finite-difference solver for the model nonlocal problem on a truncated
//! angle, in log-polar coordinates.
//!
//! With `t = ln r` the Laplacian becomes `e^{-2t} (u_tt + u_ww)` and the
//! grid covers `[-T, 0] x [-w_j, w_j]` per angle. Rotation and homothety
//! act as exact index shifts (the grid builder enforces divisibility), so
//! the nonlocal boundary rows `u + sum b u(G .) = Psi` need no
//! interpolation. Exterior couplings `a(y) u(Omega(y))` reference interior
//! points away from the vertex and enter through bilinear interpolation.
//! The outer edge `t = 0` carries Dirichlet data; the inner edge `t = -T`
//! is an artificial truncation closed with a homogeneous Neumann condition.

mod assemble;
mod experiments;
mod fit;
mod linsys;

pub use assemble::{assemble, ModelData};
pub use experiments::{run_experiment, ExperimentConfig, ExperimentReport};
pub use fit::{
    discrete_w2_seminorm, fit_singularity_exponent, l2_error, w2_blowup_diagnostic,
    w2_dyadic_levels, ExponentFit, W2Trend,
};
pub use linsys::{Csr, SolveStats};

use crate::geometry::Side;
use crate::num::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("grid divisibility failure: {0}")]
    GridDivisibility(String),
    #[error("{count} of {total} nonlocal rows reference nodes below the inner edge (> 2%); increase the truncation depth T")]
    TooManyZeroExtended { count: usize, total: usize },
    #[error("iterative solver stagnated at relative residual {residual:.3e} and no direct fallback applies to this coupling structure")]
    Stagnation { residual: f64 },
    #[error("linear system is numerically singular (the discrete problem may sit on an eigenvalue of the nonlocal operator)")]
    Singular,
    #[error("truncation too shallow for the fit window: T = {t_depth} < 12; rerun with T >= 12")]
    TruncationTooShallow { t_depth: f64 },
    #[error("solutions are not on nested grids")]
    NotNested,
    #[error("probe ray or point outside the grid: {0}")]
    OutsideGrid(String),
    #[error("exterior image point ({y1}, {y2}) leaves the model angle")]
    ExteriorImageOutside { y1: f64, y2: f64 },
    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),
}

/// Tensor grid in `(t, omega)` per angle of the orbit, `t = ln r` in
/// `[-T, 0]`, `n_t` cells in t and `n_omega` cells in omega.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct LogPolarGrid<T: Real> {
    pub t_min: T,
    pub n_t: usize,
    pub n_omega: usize,
    pub angles: Vec<T>,
    pub dt: T,
    pub dw: Vec<T>,
}

impl<T: Real> LogPolarGrid<T> {
    /// Build the grid and verify that every nonlocal term lands on grid
    /// nodes: image rays must be integer multiples of the target angular
    /// spacing, `ln chi` an integer multiple of `dt`.
    pub fn new(
        model: &crate::geometry::OrbitModel<T>,
        n_omega: usize,
        n_t: usize,
        t_depth: T,
    ) -> Result<Self, SolverError> {
        let dt = t_depth / T::of_usize(n_t);
        let dw: Vec<T> =
            model.angles.iter().map(|&w| T::of(2.0) * w / T::of_usize(n_omega)).collect();
        for t in model.terms.iter().filter(|t| !t.is_identity()) {
            let theta = t.image_ray(model.angles[t.angle]);
            let idx = (theta + model.angles[t.target]) / dw[t.target];
            if (idx - idx.round()).abs() > T::of(1e-9) {
                return Err(SolverError::GridDivisibility(format!(
                    "image ray of term ({}, {:?}, {}, {}) falls between angular nodes; \
                     choose n_omega so that ({:.12} + {:.12}) / (2*{:.12}/n_omega) is an integer",
                    t.angle,
                    t.side,
                    t.target,
                    t.term,
                    theta.as_f64(),
                    model.angles[t.target].as_f64(),
                    model.angles[t.target].as_f64(),
                )));
            }
            if t.homothety != T::one() {
                let shift = t.homothety.ln() / dt;
                if (shift - shift.round()).abs() > T::of(1e-9) {
                    return Err(SolverError::GridDivisibility(format!(
                        "ln(chi) = {:.12} is not an integer multiple of dt = {:.12}; \
                         adjust n_t or T",
                        t.homothety.ln().as_f64(),
                        dt.as_f64(),
                    )));
                }
            }
        }
        Ok(LogPolarGrid { t_min: -t_depth, n_t, n_omega, angles: model.angles.clone(), dt, dw })
    }

    pub fn points_per_angle(&self) -> usize {
        (self.n_t + 1) * (self.n_omega + 1)
    }

    pub fn n_points(&self) -> usize {
        self.points_per_angle() * self.angles.len()
    }

    #[inline]
    pub fn index(&self, angle: usize, it: usize, iw: usize) -> usize {
        angle * self.points_per_angle() + it * (self.n_omega + 1) + iw
    }

    #[inline]
    pub fn t_of(&self, it: usize) -> T {
        self.t_min + self.dt * T::of_usize(it)
    }

    #[inline]
    pub fn omega_of(&self, angle: usize, iw: usize) -> T {
        -self.angles[angle] + self.dw[angle] * T::of_usize(iw)
    }

    pub fn side_iw(&self, side: Side) -> usize {
        match side {
            Side::Lower => 0,
            Side::Upper => self.n_omega,
        }
    }

    /// Omega index of the ray at angle `theta` within `angle`'s sector.
    pub fn iw_of_ray(&self, angle: usize, theta: T) -> usize {
        let idx = (theta + self.angles[angle]) / self.dw[angle];
        idx.round().as_f64() as usize
    }

    /// Locate `t` between nodes: `(it, frac)` with `t = t(it) + frac * dt`.
    pub fn locate_t(&self, t: T) -> Option<(usize, T)> {
        let x = (t - self.t_min) / self.dt;
        if x < -T::of(1e-9) || x > T::of_usize(self.n_t) + T::of(1e-9) {
            return None;
        }
        let it = x.floor().as_f64().max(0.0) as usize;
        let it = it.min(self.n_t - 1);
        Some((it, x - T::of_usize(it)))
    }

    pub fn locate_omega(&self, angle: usize, w: T) -> Option<(usize, T)> {
        let x = (w + self.angles[angle]) / self.dw[angle];
        if x < -T::of(1e-9) || x > T::of_usize(self.n_omega) + T::of(1e-9) {
            return None;
        }
        let iw = x.floor().as_f64().max(0.0) as usize;
        let iw = iw.min(self.n_omega - 1);
        Some((iw, x - T::of_usize(iw)))
    }

    /// True when `other` is this grid refined by a factor of two.
    pub fn refines(&self, coarser: &Self) -> bool {
        self.n_t == 2 * coarser.n_t
            && self.n_omega == 2 * coarser.n_omega
            && (self.t_min - coarser.t_min).abs() < T::of(1e-12)
            && self.angles == coarser.angles
    }
}

/// Assembled sparse system for one orbit's model problem.
#[derive(Debug, Clone)]
pub struct DiscreteProblem<T: Real> {
    pub grid: LogPolarGrid<T>,
    pub matrix: Csr<T>,
    pub rhs: Vec<T>,
    /// Nonlocal rows whose image node fell below the inner edge and was
    /// zero-extended.
    pub zero_extended_rows: usize,
    /// Whether the coupling structure is block-tridiagonal in t (single
    /// angle, unit homothety, no exterior couplings): enables the direct
    /// fallback.
    pub block_tridiagonal: bool,
}

/// Exponent fit of the vertex asymptotics `u ~ C + A r^alpha` on a ray.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ExponentFitData<T: Real> {
    pub constant: T,
    pub alpha: T,
    pub amplitude: T,
    pub residual: T,
}

/// Solution field plus the fitted asymptotic data, when computed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct DiscreteSolution<T: Real> {
    pub grid: LogPolarGrid<T>,
    pub values: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<ExponentFitData<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2_dyadic: Option<Vec<T>>,
}

impl<T: Real> DiscreteSolution<T> {
    pub fn at(&self, angle: usize, it: usize, iw: usize) -> T {
        self.values[self.grid.index(angle, it, iw)]
    }
}

/// Solve the assembled system: restarted GMRES with an ILU(0)
/// preconditioner to relative residual 1e-10, with a block-tridiagonal
/// direct fallback on stagnation (when the structure allows one).
pub fn solve<T: Real>(problem: &DiscreteProblem<T>) -> Result<DiscreteSolution<T>, SolverError> {
    let bnorm = problem.rhs.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
    if bnorm == T::zero() {
        return Ok(DiscreteSolution {
            grid: problem.grid.clone(),
            values: vec![T::zero(); problem.matrix.n],
            fit: None,
            w2_dyadic: None,
        });
    }
    match linsys::gmres_ilu(&problem.matrix, &problem.rhs, T::of(1e-10), 80, 8000) {
        Ok((x, _stats)) => Ok(DiscreteSolution {
            grid: problem.grid.clone(),
            values: x,
            fit: None,
            w2_dyadic: None,
        }),
        Err(stats) => {
            if problem.block_tridiagonal {
                let x = linsys::block_tridiagonal_solve(
                    &problem.matrix,
                    &problem.rhs,
                    problem.grid.n_omega + 1,
                )
                .ok_or(SolverError::Singular)?;
                Ok(DiscreteSolution {
                    grid: problem.grid.clone(),
                    values: x,
                    fit: None,
                    w2_dyadic: None,
                })
            } else {
                Err(SolverError::Stagnation { residual: stats.relative_residual.as_f64() })
            }
        }
    }
}
