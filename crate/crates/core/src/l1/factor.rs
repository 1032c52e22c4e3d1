//! Cholesky factor of a growing and shrinking Gram matrix `Φ_Sᵀ Φ_S`.

use crate::linalg::dot;

#[derive(Clone, Debug, Default)]
pub(super) struct GramFactor {
    // row r holds L[r][0..=r]
    rows: Vec<Vec<f64>>,
}

impl GramFactor {
    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Appends a column with cross products `g` against the current set and
    /// squared norm `diag`. Returns `false` (leaving the factor untouched) when
    /// the new column is numerically dependent on the current ones.
    pub fn push(&mut self, g: &[f64], diag: f64) -> bool {
        let n = self.rows.len();
        debug_assert_eq!(g.len(), n);
        let mut w = g.to_vec();
        for i in 0..n {
            let r = &self.rows[i];
            w[i] = (w[i] - dot(&r[..i], &w[..i])) / r[i];
        }
        let pivot = diag - dot(&w, &w);
        if !(pivot > 1e-10 * diag) {
            return false;
        }
        w.push(pivot.sqrt());
        self.rows.push(w);
        true
    }

    /// Drops the `p`-th column and restores triangular form with Givens rotations.
    pub fn remove(&mut self, p: usize) {
        self.rows.remove(p);
        let n = self.rows.len();
        for r in p..n {
            let (a, b) = (self.rows[r][r], self.rows[r][r + 1]);
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for row in &mut self.rows[r..] {
                let (x, y) = (row[r], row[r + 1]);
                row[r] = c * x + s * y;
                row[r + 1] = -s * x + c * y;
            }
            self.rows[r].pop();
        }
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.rows.len();
        for i in 0..n {
            let r = &self.rows[i];
            b[i] = (b[i] - dot(&r[..i], &b[..i])) / r[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.rows[k][i] * b[k];
            }
            b[i] = s / self.rows[i][i];
        }
    }
}
