//! Small dense complex linear algebra.
//!
//! The characteristic matrices of the pencil are tiny (2N x 2N with N the
//! number of angles in an orbit), so everything here is hand-rolled: LU with
//! partial pivoting for determinants, a one-sided Jacobi SVD for rank / null
//! space decisions, and an SVD-based least-squares solve.

use crate::num::{cre, Real, C};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T: Real> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<C<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Max absolute value of the entries; a cheap scale for tolerances.
    pub fn max_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> C<T> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = cre(T::one());
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].norm();
            for i in k + 1..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == T::zero() {
                return C::new(T::zero(), T::zero());
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            det = det * a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                for j in k + 1..n {
                    let sub = f * a[k * n + j];
                    a[i * n + j] = a[i * n + j] - sub;
                }
            }
        }
        det
    }
}

/// Singular value decomposition A = U diag(s) V^H (thin, for rows >= cols).
#[derive(Debug, Clone)]
pub struct Svd<T: Real> {
    /// Columns of U (length = rows), one per singular value.
    pub u: Vec<Vec<C<T>>>,
    /// Singular values, descending.
    pub s: Vec<T>,
    /// Columns of V (length = cols), one per singular value.
    pub v: Vec<Vec<C<T>>>,
}

/// One-sided Jacobi SVD. Adequate and robust for the tiny matrices used here.
pub fn svd<T: Real>(m: &CMat<T>) -> Svd<T> {
    assert!(m.rows >= m.cols, "svd expects rows >= cols; transpose first");
    let (nr, nc) = (m.rows, m.cols);
    // Work on columns of A; accumulate V as the product of Jacobi rotations.
    let mut a: Vec<Vec<C<T>>> = (0..nc).map(|j| (0..nr).map(|i| m.at(i, j)).collect()).collect();
    let mut v: Vec<Vec<C<T>>> = (0..nc)
        .map(|j| (0..nc).map(|i| if i == j { cre(T::one()) } else { cre(T::zero()) }).collect())
        .collect();

    let eps = T::of(1e-30);
    for _sweep in 0..60 {
        let mut off = T::zero();
        for p in 0..nc {
            for q in p + 1..nc {
                let (mut app, mut aqq) = (T::zero(), T::zero());
                let mut apq = C::new(T::zero(), T::zero());
                for i in 0..nr {
                    app = app + a[p][i].norm_sqr();
                    aqq = aqq + a[q][i].norm_sqr();
                    apq = apq + a[p][i].conj() * a[q][i];
                }
                let apq_n = apq.norm();
                off = off.max(apq_n);
                if apq_n <= eps * (app * aqq).sqrt().max(eps) {
                    continue;
                }
                // 2x2 Hermitian eigenproblem for [[app, apq],[conj(apq), aqq]].
                let tau = (aqq - app) / (T::of(2.0) * apq_n);
                let t = {
                    let sign = if tau >= T::zero() { T::one() } else { -T::one() };
                    sign / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let cos = T::one() / (T::one() + t * t).sqrt();
                let sin = cos * t;
                let phase = apq / cre(apq_n);
                for i in 0..nr {
                    let (xp, xq) = (a[p][i], a[q][i]);
                    a[p][i] = xp * cre(cos) - xq * phase.conj() * cre(sin);
                    a[q][i] = xp * phase * cre(sin) + xq * cre(cos);
                }
                for i in 0..nc {
                    let (xp, xq) = (v[p][i], v[q][i]);
                    v[p][i] = xp * cre(cos) - xq * phase.conj() * cre(sin);
                    v[q][i] = xp * phase * cre(sin) + xq * cre(cos);
                }
            }
        }
        if off <= eps {
            break;
        }
    }

    let mut cols: Vec<(T, Vec<C<T>>, Vec<C<T>>)> = (0..nc)
        .map(|j| {
            let norm = a[j].iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
            let u = if norm > T::zero() {
                a[j].iter().map(|z| z / cre(norm)).collect()
            } else {
                vec![C::new(T::zero(), T::zero()); nr]
            };
            (norm, u, v[j].clone())
        })
        .collect();
    cols.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    Svd {
        s: cols.iter().map(|c| c.0).collect(),
        u: cols.iter().map(|c| c.1.clone()).collect(),
        v: cols.into_iter().map(|c| c.2).collect(),
    }
}

/// Null-space basis of a square matrix: right singular vectors whose singular
/// value falls below `rel_tol * s_max`.
pub fn null_space<T: Real>(m: &CMat<T>, rel_tol: T) -> Vec<Vec<C<T>>> {
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(T::zero());
    if smax == T::zero() {
        return d.v;
    }
    d.s.iter()
        .zip(d.v.iter())
        .filter(|(s, _)| **s < rel_tol * smax)
        .map(|(_, v)| v.clone())
        .collect()
}

/// Minimum-norm least squares solve via the SVD, together with the residual
/// norm of `A x - b`. Singular values below `rel_tol * s_max` are dropped,
/// which is what makes the solvability test for associated vectors reliable.
pub fn lstsq<T: Real>(m: &CMat<T>, b: &[C<T>], rel_tol: T) -> (Vec<C<T>>, T) {
    assert_eq!(b.len(), m.rows);
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(T::zero());
    let mut x = vec![C::new(T::zero(), T::zero()); m.cols];
    for ((s, u), v) in d.s.iter().zip(d.u.iter()).zip(d.v.iter()) {
        if *s <= rel_tol * smax || *s == T::zero() {
            continue;
        }
        let coef = u
            .iter()
            .zip(b)
            .fold(C::new(T::zero(), T::zero()), |acc, (ui, bi)| acc + ui.conj() * bi)
            / cre(*s);
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi = *xi + coef * vi;
        }
    }
    let r = m.matvec(&x);
    let res = r
        .iter()
        .zip(b)
        .fold(T::zero(), |acc, (ri, bi)| acc + (ri - bi).norm_sqr())
        .sqrt();
    (x, res)
}

/// Real least squares fit of `y ~ X beta` by normal equations with partial
/// pivoting; fine for the handful of columns used by the diagnostics.
pub fn lstsq_real<T: Real>(xs: &[Vec<T>], y: &[T]) -> Vec<T> {
    let k = xs.len();
    assert!(xs.iter().all(|c| c.len() == y.len()));
    let mut g = vec![T::zero(); k * k];
    let mut rhs = vec![T::zero(); k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = xs[i].iter().zip(&xs[j]).fold(T::zero(), |s, (a, b)| s + *a * *b);
        }
        rhs[i] = xs[i].iter().zip(y).fold(T::zero(), |s, (a, b)| s + *a * *b);
    }
    solve_real(&mut g, &mut rhs, k);
    rhs
}

fn solve_real<T: Real>(a: &mut [T], b: &mut [T], n: usize) {
    for kcol in 0..n {
        let mut piv = kcol;
        for i in kcol + 1..n {
            if a[i * n + kcol].abs() > a[piv * n + kcol].abs() {
                piv = i;
            }
        }
        if piv != kcol {
            for j in 0..n {
                a.swap(kcol * n + j, piv * n + j);
            }
            b.swap(kcol, piv);
        }
        let d = a[kcol * n + kcol];
        if d == T::zero() {
            continue;
        }
        for i in kcol + 1..n {
            let f = a[i * n + kcol] / d;
            for j in kcol..n {
                let sub = f * a[kcol * n + j];
                a[i * n + j] = a[i * n + j] - sub;
            }
            let sub = f * b[kcol];
            b[i] = b[i] - sub;
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s = s - a[i * n + j] * b[j];
        }
        b[i] = if a[i * n + i] != T::zero() { s / a[i * n + i] } else { T::zero() };
    }
}

pub fn complex_scale<T: Real>(v: &[C<T>], f: C<T>) -> Vec<C<T>> {
    v.iter().map(|z| z * f).collect()
}

/// Rotate the phase of an eigenvector so its largest entry is real positive.
pub fn normalize_phase<T: Real>(v: &[C<T>]) -> Vec<C<T>> {
    let mut best = C::new(T::zero(), T::zero());
    for z in v {
        if z.norm() > best.norm() {
            best = *z;
        }
    }
    if best.norm() == T::zero() {
        return v.to_vec();
    }
    let phase = best / cre(best.norm());
    complex_scale(v, phase.conj())
}
