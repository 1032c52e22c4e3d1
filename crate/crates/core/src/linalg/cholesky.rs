use super::DenseMatrix;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    // row-major lower triangle, full n*n storage
    l: Vec<f64>,
}

impl Cholesky {
    /// Returns `None` when a pivot is not safely positive, i.e. the matrix is
    /// not numerically positive definite.
    pub fn factor(a: &DenseMatrix) -> Option<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut l = vec![0.0; n * n];
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[(i, j)];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                s -= super::dot(ri, rj);
                if i == j {
                    if s <= 1e-12 * max_diag || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let s = b[i] - super::dot(&self.l[i * n..i * n + i], &b[..i]);
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}
