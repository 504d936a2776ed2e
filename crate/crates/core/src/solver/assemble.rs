//! Assembly of the discrete model problem.

use super::{Csr, DiscreteProblem, LogPolarGrid, SolverError};
use crate::geometry::{ExteriorTerm, OrbitModel, Side};
use crate::num::Real;

/// Data of one model-problem instance. All fields are in model-angle
/// coordinates; `psi` is the nonlocal-row right-hand side as a function of
/// arclength, `outer` the Dirichlet trace on the unit radius.
pub struct ModelData<'a, T: Real> {
    pub f0: &'a dyn Fn(usize, T, T) -> T,
    pub psi: &'a dyn Fn(usize, Side, T) -> T,
    pub outer: &'a dyn Fn(usize, T) -> T,
    pub exterior: &'a [ExteriorTerm<T>],
}

/// Build the sparse system: 5-point interior stencil for
/// `u_tt + u_ww = e^{2t} f0`, exact-shift nonlocal rows on the sides,
/// Dirichlet at `t = 0`, homogeneous Neumann in t at `t = -T`.
pub fn assemble<T: Real>(
    model: &OrbitModel<T>,
    grid: &LogPolarGrid<T>,
    data: &ModelData<T>,
) -> Result<DiscreteProblem<T>, SolverError> {
    let n = grid.n_points();
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    let mut rhs = vec![T::zero(); n];
    let (dt, n_t, n_w) = (grid.dt, grid.n_t, grid.n_omega);
    let idt2 = T::one() / (dt * dt);

    let mut zero_extended = 0usize;
    let mut side_rows = 0usize;
    let mut block_tridiagonal = model.angles.len() == 1 && data.exterior.is_empty();

    for k in 0..model.angles.len() {
        let dw = grid.dw[k];
        let idw2 = T::one() / (dw * dw);
        for it in 0..=n_t {
            let t = grid.t_of(it);
            for iw in 0..=n_w {
                let row = grid.index(k, it, iw);
                if it == n_t {
                    // outer Dirichlet
                    rows[row].push((row, T::one()));
                    rhs[row] = (data.outer)(k, grid.omega_of(k, iw));
                    continue;
                }
                if it == 0 {
                    // inner Neumann in t
                    rows[row].push((row, T::one()));
                    rows[row].push((grid.index(k, 1, iw), -T::one()));
                    rhs[row] = T::zero();
                    continue;
                }
                if iw == 0 || iw == n_w {
                    // nonlocal boundary row
                    side_rows += 1;
                    let side = if iw == 0 { Side::Lower } else { Side::Upper };
                    let r = t.exp();
                    rows[row].push((row, T::one()));
                    for term in model.row_terms(k, side) {
                        if term.is_identity() {
                            continue;
                        }
                        let b = term.weight_at(r, model.angles[k]);
                        let theta = term.image_ray(model.angles[k]);
                        let iw_img = grid.iw_of_ray(term.target, theta);
                        let shift =
                            (term.homothety.ln() / dt).round().as_f64() as i64;
                        if shift != 0 {
                            block_tridiagonal = false;
                        }
                        let it_img = it as i64 + shift;
                        if it_img < 0 || it_img > n_t as i64 {
                            zero_extended += 1;
                            continue;
                        }
                        rows[row].push((grid.index(term.target, it_img as usize, iw_img), b));
                    }
                    for e in data.exterior.iter().filter(|e| e.angle == k && e.side == side) {
                        let a = e.coeff.eval(r, model.angles[k], side);
                        if a == T::zero() {
                            continue;
                        }
                        let img = [
                            e.anchor[0] + r * e.direction[0],
                            e.anchor[1] + r * e.direction[1],
                        ];
                        let rq = (img[0] * img[0] + img[1] * img[1]).sqrt();
                        let wq = img[1].atan2(img[0]);
                        let (itq, ft) = grid.locate_t(rq.ln()).ok_or({
                            SolverError::ExteriorImageOutside {
                                y1: img[0].as_f64(),
                                y2: img[1].as_f64(),
                            }
                        })?;
                        let (iwq, fw) = grid.locate_omega(e.angle, wq).ok_or({
                            SolverError::ExteriorImageOutside {
                                y1: img[0].as_f64(),
                                y2: img[1].as_f64(),
                            }
                        })?;
                        let weights = [
                            (itq, iwq, (T::one() - ft) * (T::one() - fw)),
                            (itq + 1, iwq, ft * (T::one() - fw)),
                            (itq, iwq + 1, (T::one() - ft) * fw),
                            (itq + 1, iwq + 1, ft * fw),
                        ];
                        for (ti, wi, wgt) in weights {
                            if wgt != T::zero() {
                                rows[row].push((grid.index(e.angle, ti, wi), a * wgt));
                            }
                        }
                    }
                    rhs[row] = (data.psi)(k, side, r);
                    continue;
                }
                // interior 5-point stencil
                rows[row].push((row, -T::of(2.0) * (idt2 + idw2)));
                rows[row].push((grid.index(k, it + 1, iw), idt2));
                rows[row].push((grid.index(k, it - 1, iw), idt2));
                rows[row].push((grid.index(k, it, iw + 1), idw2));
                rows[row].push((grid.index(k, it, iw - 1), idw2));
                let omega = grid.omega_of(k, iw);
                let r = t.exp();
                rhs[row] = (t + t).exp() * (data.f0)(k, r * omega.cos(), r * omega.sin());
            }
        }
    }

    if side_rows > 0 && zero_extended * 50 > side_rows {
        return Err(SolverError::TooManyZeroExtended { count: zero_extended, total: side_rows });
    }

    let matrix = Csr::from_rows(n, rows);
    Ok(DiscreteProblem {
        grid: grid.clone(),
        matrix,
        rhs,
        zero_extended_rows: zero_extended,
        block_tridiagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{dirichlet_model, halfpi_model};
    use crate::solver::solve;

    #[test]
    fn dirichlet_harmonic_polynomial_is_recovered() {
        // u = y1 = r cos(omega) with exact boundary data. Pointwise accuracy
        // near the inner edge is limited by the artificial Neumann
        // truncation (O(e^{-T}) there), so measure the weighted L2 error
        // and check it shrinks under refinement.
        let model = dirichlet_model::<f64>(0);
        let u_ex = |y1: f64, _y2: f64| y1;
        let run = |n: usize| -> f64 {
            // T = 8: the truncation floor sits far below the h^2 error
            let grid = LogPolarGrid::new(&model, n, 2 * n, 8.0).unwrap();
            let data = ModelData {
                f0: &|_, _, _| 0.0,
                psi: &|_, _, _| 0.0,
                outer: &|_, w: f64| w.cos(),
                exterior: &[],
            };
            let problem = assemble(&model, &grid, &data).unwrap();
            let sol = solve(&problem).unwrap();
            crate::solver::l2_error(&sol, &|_, y1, y2| u_ex(y1, y2))
        };
        let (e1, e2) = (run(32), run(64));
        assert!(e1 < 2e-3, "coarse error {e1}");
        assert!(e2 < 0.4 * e1, "no decay: {e1} -> {e2}");
    }

    #[test]
    fn nonlocal_rows_shift_half_period() {
        // rows at omega = +- pi/2 reference omega = 0 at the same t
        let model = halfpi_model::<f64>(0, -0.5, -0.5);
        let grid = LogPolarGrid::new(&model, 16, 16, 2.0).unwrap();
        assert_eq!(grid.iw_of_ray(0, 0.0), 8);
        let data = ModelData {
            f0: &|_, _, _| 0.0,
            psi: &|_, _, _| 1.0,
            outer: &|_, _| 0.0,
            exterior: &[],
        };
        let problem = assemble(&model, &grid, &data).unwrap();
        assert!(problem.block_tridiagonal);
        // check one side row's sparsity: diagonal plus the image at iw = 8
        let row = grid.index(0, 5, 0);
        let cols = problem.matrix.row_cols(row);
        assert!(cols.contains(&row));
        assert!(cols.contains(&grid.index(0, 5, 8)));
        assert_eq!(cols.len(), 2);
    }

    #[test]
    fn grid_divisibility_errors() {
        let model = halfpi_model::<f64>(0, -0.5, -0.5);
        // n_omega = 10 does not place the image ray omega = 0 on a node:
        // (0 + pi/2) / (pi/10) = 5 exactly -- actually divisible; use 7.
        assert!(LogPolarGrid::new(&model, 7, 16, 2.0).is_err());
        let mut chi_model = model.clone();
        for t in chi_model.terms.iter_mut().filter(|t| !t.is_identity()) {
            t.homothety = 0.7;
        }
        // ln(0.7) is not a multiple of dt = 2/16
        assert!(LogPolarGrid::new(&chi_model, 16, 16, 2.0).is_err());
        // but dt = ln(0.7)/(-2) divides it exactly
        let depth = -2.0 * 0.7f64.ln();
        assert!(LogPolarGrid::new(&chi_model, 16, 2, depth).is_ok());
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let model = halfpi_model::<f64>(0, 0.5, 0.5);
        let grid = LogPolarGrid::new(&model, 32, 32, 4.0).unwrap();
        let data = ModelData {
            f0: &|_, _, _| 0.0,
            psi: &|_, _, _| 0.0,
            outer: &|_, _| 0.0,
            exterior: &[],
        };
        let problem = assemble(&model, &grid, &data).unwrap();
        let sol = solve(&problem).unwrap();
        assert!(sol.values.iter().all(|v| *v == 0.0));
    }
}
