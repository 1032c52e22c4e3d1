//! Reduced SVD by one-sided (Hestenes) Jacobi rotations.

use super::{dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Relative threshold on `|w_p·w_q| / (‖w_p‖‖w_q‖)` below which a column pair counts as orthogonal.
pub const SVD_ORTHOGONALITY_TOL: f64 = 1e-15;
/// Maximum number of cyclic sweeps before giving up.
pub const SVD_MAX_SWEEPS: usize = 100;

// Columns whose norm falls below this fraction of ‖M‖_F are treated as numerically zero.
const NEGLIGIBLE_COLUMN: f64 = 1e-15;

/// `input = U diag(singular_values) V^T` with `p = min(rows, cols)`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
    pub sweeps: usize,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let us = DenseMatrix::from_fn(self.u.rows(), self.u.cols(), |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        us.matmul_t(&self.v).expect("consistent factor shapes")
    }

    /// The `k`-th largest singular value (1-based), zero when out of range.
    pub fn sigma(&self, k: usize) -> f64 {
        k.checked_sub(1)
            .and_then(|i| self.singular_values.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Reduced singular value decomposition.
///
/// Singular values come out non-increasing. Each column of `V` is signed so
/// that its largest-magnitude entry is positive (first such entry on ties),
/// which makes the factorization reproducible bit for bit.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument("svd input must be finite".into()));
    }
    let (rows, cols) = m.shape();
    if rows >= cols {
        let (u, s, v, sweeps) = jacobi_tall(m)?;
        Ok(canonicalize(u, s, v, sweeps))
    } else {
        let (u, s, v, sweeps) = jacobi_tall(&m.transpose())?;
        Ok(canonicalize(v, s, u, sweeps))
    }
}

/// One-sided Jacobi on a matrix with at least as many rows as columns.
/// Returns `(U, sigma, V)` unsorted.
fn jacobi_tall(m: &DenseMatrix) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>, usize)> {
    let (rows, n) = m.shape();
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let scale = m.frobenius_norm();
    let floor = (NEGLIGIBLE_COLUMN * scale).powi(2);

    let mut sweeps = 0;
    let mut converged = n < 2 || scale == 0.0;
    let mut worst = 0.0f64;
    while !converged {
        if sweeps == SVD_MAX_SWEEPS {
            return Err(Error::SolverFailure {
                iterations: sweeps,
                residual: worst,
            });
        }
        sweeps += 1;
        converged = true;
        worst = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                let rel = gamma.abs() / (alpha * beta).sqrt();
                if rel <= SVD_ORTHOGONALITY_TOL {
                    continue;
                }
                worst = worst.max(rel);
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
    }

    let sigma: Vec<f64> = w.iter().map(|col| norm2(col)).collect();
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let mut u: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for (col, &s) in w.iter().zip(&sigma) {
        if s > 0.0 && s > 1e3 * NEGLIGIBLE_COLUMN * sigma_max {
            u.push(Some(col.iter().map(|x| x / s).collect()));
        } else {
            u.push(None);
        }
    }
    let u = complete_orthonormal(u, rows);
    Ok((u, sigma, v, sweeps))
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (a, b) = (&mut head[p], &mut tail[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the missing columns (numerically zero singular values) with unit
/// vectors orthogonal to everything already present.
fn complete_orthonormal(cols: Vec<Option<Vec<f64>>>, dim: usize) -> Vec<Vec<f64>> {
    let present: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    let mut basis = present;
    let mut candidate = 0usize;
    let mut out = Vec::with_capacity(cols.len());
    let mut filled = Vec::new();
    for col in cols {
        match col {
            Some(c) => out.push(c),
            None => loop {
                assert!(candidate < dim, "cannot complete an orthonormal basis");
                let mut e = vec![0.0; dim];
                e[candidate] = 1.0;
                candidate += 1;
                for _ in 0..2 {
                    for b in basis.iter().chain(filled.iter()) {
                        let proj = dot(b, &e);
                        for (x, y) in e.iter_mut().zip(b) {
                            *x -= proj * y;
                        }
                    }
                }
                let nrm = norm2(&e);
                if nrm > 1e-3 {
                    e.iter_mut().for_each(|x| *x /= nrm);
                    filled.push(e.clone());
                    out.push(e);
                    break;
                }
            },
        }
    }
    basis.clear();
    out
}

fn canonicalize(
    mut u: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    mut v: Vec<Vec<f64>>,
    sweeps: usize,
) -> SvdResult {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    // Stable sort keeps the original column order among equal values.
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    for j in 0..v.len() {
        let mut best = 0usize;
        for (i, x) in v[j].iter().enumerate() {
            if x.abs() > v[j][best].abs() {
                best = i;
            }
        }
        if v[j][best] < 0.0 {
            v[j].iter_mut().for_each(|x| *x = -*x);
            u[j].iter_mut().for_each(|x| *x = -*x);
        }
    }

    let p = sigma.len();
    let urows = u.first().map_or(0, Vec::len);
    let vrows = v.first().map_or(0, Vec::len);
    let u_mat = DenseMatrix::from_fn(urows, p, |i, j| u[order[j]][i]);
    let v_mat = DenseMatrix::from_fn(vrows, p, |i, j| v[order[j]][i]);
    let s: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    SvdResult {
        u: u_mat,
        singular_values: s,
        v: v_mat,
        sweeps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &DenseMatrix) -> SvdResult {
        let r = svd(m).unwrap();
        let p = m.rows().min(m.cols());
        assert_eq!(r.singular_values.len(), p);
        assert!(r.u.column_orthonormality_defect() <= 1e-10 * p as f64);
        assert!(r.v.column_orthonormality_defect() <= 1e-10 * p as f64);
        let err = r.reconstruct().sub(m).unwrap().frobenius_norm();
        assert!(err <= 1e-10 * m.frobenius_norm().max(1.0), "reconstruction {err}");
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.singular_values.iter().all(|s| *s >= 0.0));
        r
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let r = check(&DenseMatrix::identity(3));
        assert_eq!(r.singular_values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_matrix() {
        let r = check(&DenseMatrix::diagonal(&[1.0, 3.0, 2.0]));
        assert_eq!(r.singular_values, vec![3.0, 2.0, 1.0]);
        for j in 0..3 {
            assert_eq!(r.v.column(j).iter().filter(|x| x.abs() == 1.0).count(), 1);
            assert_eq!(r.u.column(j).iter().filter(|x| x.abs() == 1.0).count(), 1);
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let a: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64) - 4.5).collect();
        let g: Vec<f64> = (0..15).map(|i| ((i * 5 % 7) as f64) - 2.5).collect();
        let (na, ng) = (norm2(&a), norm2(&g));
        let m = DenseMatrix::from_fn(20, 15, |i, j| a[i] / na * g[j] / ng);
        let r = check(&m);
        assert!((r.singular_values[0] - 1.0).abs() < 1e-12);
        assert!(r.singular_values[1] <= 1e-10);
    }

    #[test]
    fn wide_and_zero_matrices() {
        let m = DenseMatrix::from_fn(3, 7, |i, j| ((i + 2 * j) % 5) as f64 - 1.0);
        check(&m);
        let z = check(&DenseMatrix::zeros(4, 3));
        assert!(z.singular_values.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn sign_convention_makes_largest_v_entry_positive() {
        let m = DenseMatrix::from_fn(6, 4, |i, j| ((i * 3 + j * j) % 7) as f64 - 3.0);
        let r = check(&m);
        for j in 0..4 {
            let col = r.v.column(j);
            let big = col.iter().cloned().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            assert!(big > 0.0);
        }
    }
}
