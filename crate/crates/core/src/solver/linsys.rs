//! Sparse linear algebra for the discrete solver: CSR storage, ILU(0),
//! restarted GMRES, and a block-tridiagonal direct solve used as fallback
//! when the coupling structure allows it.

use crate::num::Real;

/// Compressed sparse row matrix with sorted, deduplicated columns per row.
#[derive(Debug, Clone)]
pub struct Csr<T: Real> {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Real> Csr<T> {
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (col, val) in row {
                if last == Some(col) {
                    let l = data.len() - 1;
                    data[l] = data[l] + val;
                } else {
                    indices.push(col);
                    data.push(val);
                    last = Some(col);
                }
            }
            indptr.push(indices.len());
        }
        Csr { n, indptr, indices, data }
    }

    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn row_vals(&self, i: usize) -> &[T] {
        &self.data[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let mut acc = T::zero();
            for (c, v) in self.row_cols(i).iter().zip(self.row_vals(i)) {
                acc = acc + *v * x[*c];
            }
            y[i] = acc;
        }
    }

    /// Row-equilibrated copy: each row divided by its max magnitude, the
    /// same scaling applied to `b`. Keeps GMRES/ILU well scaled across the
    /// mixed stencil/boundary rows.
    pub fn equilibrated(&self, b: &[T]) -> (Csr<T>, Vec<T>) {
        let mut m = self.clone();
        let mut bs = b.to_vec();
        for i in 0..self.n {
            let (s, e) = (self.indptr[i], self.indptr[i + 1]);
            let mx = self.data[s..e].iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if mx > T::zero() {
                let inv = T::one() / mx;
                for v in &mut m.data[s..e] {
                    *v = *v * inv;
                }
                bs[i] = bs[i] * inv;
            }
        }
        (m, bs)
    }
}

/// ILU(0) factors stored on the sparsity pattern of A.
pub struct Ilu0<T: Real> {
    lu: Csr<T>,
    diag_pos: Vec<usize>,
}

pub fn ilu0<T: Real>(a: &Csr<T>) -> Ilu0<T> {
    let mut lu = a.clone();
    let n = lu.n;
    let mut diag_pos = vec![usize::MAX; n];
    for i in 0..n {
        for p in lu.indptr[i]..lu.indptr[i + 1] {
            if lu.indices[p] == i {
                diag_pos[i] = p;
            }
        }
    }
    let mut pos_of_col = vec![usize::MAX; n];
    for i in 0..n {
        let (row_s, row_e) = (lu.indptr[i], lu.indptr[i + 1]);
        for p in row_s..row_e {
            pos_of_col[lu.indices[p]] = p;
        }
        for p in row_s..row_e {
            let k = lu.indices[p];
            if k >= i {
                break;
            }
            let dk = diag_pos[k];
            if dk == usize::MAX || lu.data[dk] == T::zero() {
                continue;
            }
            let f = lu.data[p] / lu.data[dk];
            lu.data[p] = f;
            for q in dk + 1..lu.indptr[k + 1] {
                let j = lu.indices[q];
                let target = pos_of_col[j];
                if target != usize::MAX {
                    let sub = f * lu.data[q];
                    lu.data[target] = lu.data[target] - sub;
                }
            }
        }
        for p in row_s..row_e {
            pos_of_col[lu.indices[p]] = usize::MAX;
        }
    }
    Ilu0 { lu, diag_pos }
}

impl<T: Real> Ilu0<T> {
    /// Solve `L U x = b` (L unit-diagonal).
    pub fn solve(&self, b: &[T], x: &mut [T]) {
        let n = self.lu.n;
        x.copy_from_slice(b);
        for i in 0..n {
            let mut acc = x[i];
            for p in self.lu.indptr[i]..self.lu.indptr[i + 1] {
                let j = self.lu.indices[p];
                if j >= i {
                    break;
                }
                acc = acc - self.lu.data[p] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            let dp = self.diag_pos[i];
            for p in dp + 1..self.lu.indptr[i + 1] {
                acc = acc - self.lu.data[p] * x[self.lu.indices[p]];
            }
            x[i] = if dp != usize::MAX && self.lu.data[dp] != T::zero() {
                acc / self.lu.data[dp]
            } else {
                acc
            };
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats<T> {
    pub iterations: usize,
    pub relative_residual: T,
}

/// Right-preconditioned restarted GMRES(m) with ILU(0). Returns the
/// solution and stats, or the stats at stagnation.
pub fn gmres_ilu<T: Real>(
    a: &Csr<T>,
    b: &[T],
    rel_tol: T,
    restart: usize,
    max_iters: usize,
) -> Result<(Vec<T>, SolveStats<T>), SolveStats<T>> {
    let (a, b) = a.equilibrated(b);
    let n = a.n;
    let pc = ilu0(&a);
    let bnorm = norm(&b);
    let mut x = vec![T::zero(); n];
    let mut total_iters = 0usize;
    let mut last_restart_res = T::infinity();
    let mut stagnant_cycles = 0usize;

    let mut r = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    while total_iters < max_iters {
        // true residual
        a.matvec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= rel_tol {
            return Ok((x, SolveStats { iterations: total_iters, relative_residual: rel }));
        }
        if rel > last_restart_res * T::of(0.999) {
            stagnant_cycles += 1;
            if stagnant_cycles >= 3 {
                return Err(SolveStats { iterations: total_iters, relative_residual: rel });
            }
        } else {
            stagnant_cycles = 0;
        }
        last_restart_res = rel;

        let m = restart.min(max_iters - total_iters);
        let mut v: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|&ri| ri / beta).collect());
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut j_used = 0;
        for j in 0..m {
            total_iters += 1;
            j_used = j + 1;
            pc.solve(&v[j], &mut z);
            a.matvec(&z, &mut w);
            // modified Gram-Schmidt
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk = *wk - hij * *vk;
                }
            }
            let hj1 = norm(&w);
            h[j + 1][j] = hj1;
            // Givens rotations
            for i in 0..j {
                let t0 = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                let t1 = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t0;
                h[i + 1][j] = t1;
            }
            let denom = (h[j][j] * h[j][j] + hj1 * hj1).sqrt();
            if denom == T::zero() {
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = hj1 / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            let approx_rel = g[j + 1].abs() / bnorm;
            if hj1 == T::zero() || approx_rel <= rel_tol * T::of(0.5) {
                break;
            }
            v.push(w.iter().map(|&wk| wk / hj1).collect());
        }
        // back substitution for y and the update x += M^{-1} (V y)
        let mut y = vec![T::zero(); j_used];
        for i in (0..j_used).rev() {
            let mut acc = g[i];
            for k in i + 1..j_used {
                acc = acc - h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        let mut upd = vec![T::zero(); n];
        for (i, yi) in y.iter().enumerate() {
            for (u, vk) in upd.iter_mut().zip(&v[i]) {
                *u = *u + *yi * *vk;
            }
        }
        pc.solve(&upd, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = *xi + *zi;
        }
    }
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let rel = norm(&r) / bnorm;
    if rel <= rel_tol {
        Ok((x, SolveStats { iterations: total_iters, relative_residual: rel }))
    } else {
        Err(SolveStats { iterations: total_iters, relative_residual: rel })
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y)
}

/// Direct solve for systems whose coupling is confined to a t-line and its
/// two neighbors (single angle, unit homothety): block LU with dense
/// partially pivoted blocks of size `block` = points per t-line.
pub fn block_tridiagonal_solve<T: Real>(a: &Csr<T>, b: &[T], block: usize) -> Option<Vec<T>> {
    let n = a.n;
    if n % block != 0 {
        return None;
    }
    let nb = n / block;
    // extract D_i (dense), and the diagonals of L_i (sub) and U_i (super)
    let mut d: Vec<Vec<T>> = vec![vec![T::zero(); block * block]; nb];
    let mut lo: Vec<Vec<T>> = vec![vec![T::zero(); block]; nb];
    let mut up: Vec<Vec<T>> = vec![vec![T::zero(); block]; nb];
    for i in 0..n {
        let (bi, ri) = (i / block, i % block);
        for (c, v) in a.row_cols(i).iter().zip(a.row_vals(i)) {
            let (bj, rj) = (*c / block, *c % block);
            if bj == bi {
                d[bi][ri * block + rj] = *v;
            } else if bj + 1 == bi && rj == ri {
                lo[bi][ri] = *v;
            } else if bj == bi + 1 && rj == ri {
                up[bi][ri] = *v;
            } else {
                return None; // not block-tridiagonal with diagonal couplers
            }
        }
    }
    // forward elimination: D_i' = D_i - L_i D_{i-1}'^{-1} U_{i-1}
    // and rhs_i' = rhs_i - L_i D_{i-1}'^{-1} rhs_{i-1}'
    let mut rhs: Vec<Vec<T>> = b.chunks(block).map(|c| c.to_vec()).collect();
    let mut factors: Vec<DenseLu<T>> = Vec::with_capacity(nb);
    let mut col = vec![T::zero(); block];
    for i in 0..nb {
        if i > 0 {
            let prev = &factors[i - 1];
            // G = D_{i-1}'^{-1} U_{i-1}: U diagonal, so solve per column;
            // then D_i -= L_i G with L_i diagonal scaling rows of G.
            for j in 0..block {
                if up[i - 1][j] == T::zero() {
                    continue;
                }
                col.iter_mut().for_each(|x| *x = T::zero());
                col[j] = up[i - 1][j];
                let sol = prev.solve(&col);
                for r in 0..block {
                    let sub = lo[i][r] * sol[r];
                    d[i][r * block + j] = d[i][r * block + j] - sub;
                }
            }
            // rhs_i -= L_i D_{i-1}'^{-1} rhs_{i-1}
            let prev_sol = prev.solve(&rhs[i - 1]);
            for r in 0..block {
                let sub = lo[i][r] * prev_sol[r];
                rhs[i][r] = rhs[i][r] - sub;
            }
        }
        factors.push(DenseLu::new(std::mem::take(&mut d[i]), block)?);
    }
    // back substitution: x_i = D_i'^{-1} (rhs_i) - G_{i+1}... careful:
    // x_i = D_i'^{-1} rhs_i' - D_i'^{-1} U_i x_{i+1}
    let mut x: Vec<Vec<T>> = vec![vec![T::zero(); block]; nb];
    for i in (0..nb).rev() {
        let mut rh = rhs[i].clone();
        if i + 1 < nb {
            for r in 0..block {
                let sub = up[i][r] * x[i + 1][r];
                rh[r] = rh[r] - sub;
            }
        }
        x[i] = factors[i].solve(&rh);
    }
    Some(x.into_iter().flatten().collect())
}

/// Dense LU with partial pivoting.
struct DenseLu<T: Real> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    fn new(mut a: Vec<T>, n: usize) -> Option<Self> {
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                if a[i * n + k].abs() > best {
                    best = a[i * n + k].abs();
                    p = i;
                }
            }
            if best == T::zero() {
                return None;
            }
            piv.push(p);
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                for j in k + 1..n {
                    let sub = f * a[k * n + j];
                    a[i * n + j] = a[i * n + j] - sub;
                }
            }
        }
        Some(DenseLu { n, lu: a, piv })
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            for i in k + 1..n {
                let sub = self.lu[i * n + k] * x[k];
                x[i] = x[i] - sub;
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc = acc - self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> (Csr<f64>, Vec<f64>) {
        // -u'' = 1 on (0,1), u(0) = u(1) = 0, exact u = x(1-x)/2
        let h = 1.0 / (n + 1) as f64;
        let mut rows = Vec::new();
        let mut b = vec![h * h; n];
        for i in 0..n {
            let mut row = vec![(i, 2.0)];
            if i > 0 {
                row.push((i - 1, -1.0));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0));
            }
            rows.push(row);
        }
        b.iter_mut().for_each(|x| *x *= 1.0);
        (Csr::from_rows(n, rows), b)
    }

    #[test]
    fn gmres_solves_poisson_1d() {
        let (a, b) = laplace_1d(200);
        let (x, stats) = gmres_ilu(&a, &b, 1e-12, 40, 4000).unwrap();
        assert!(stats.relative_residual < 1e-12);
        let h = 1.0 / 201.0;
        for (i, xi) in x.iter().enumerate() {
            let s = (i + 1) as f64 * h;
            assert!((xi - 0.5 * s * (1.0 - s)).abs() < 1e-10);
        }
    }

    #[test]
    fn block_tridiagonal_matches_gmres() {
        // 2-D 5-point Laplacian on a 12x12 grid with Dirichlet rows mixed in
        let (nt, nw) = (12usize, 12usize);
        let n = nt * nw;
        let idx = |i: usize, j: usize| i * nw + j;
        let mut rows = vec![Vec::new(); n];
        let mut b = vec![0.0; n];
        for i in 0..nt {
            for j in 0..nw {
                let r = idx(i, j);
                if i == 0 || i + 1 == nt || j == 0 || j + 1 == nw {
                    rows[r].push((r, 1.0));
                    b[r] = (i + j) as f64 / 10.0;
                } else {
                    rows[r] = vec![
                        (r, -4.0),
                        (idx(i - 1, j), 1.0),
                        (idx(i + 1, j), 1.0),
                        (idx(i, j - 1), 1.0),
                        (idx(i, j + 1), 1.0),
                    ];
                    b[r] = 1.0;
                }
            }
        }
        let a = Csr::from_rows(n, rows);
        let xb = block_tridiagonal_solve(&a, &b, nw).unwrap();
        let (xg, _) = gmres_ilu(&a, &b, 1e-12, 30, 2000).unwrap();
        for (u, v) in xb.iter().zip(&xg) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn csr_dedupes_and_sorts() {
        let a = Csr::from_rows(2, vec![vec![(1, 1.0), (0, 2.0), (1, 3.0)], vec![(1, 1.0)]]);
        assert_eq!(a.row_cols(0), &[0, 1]);
        assert_eq!(a.row_vals(0), &[2.0, 4.0]);
    }
}
