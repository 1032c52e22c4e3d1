//! Dense real linear algebra used throughout the crate.
//!
//! Matrices are stored row-major. Products go through `matrixmultiply`;
//! the SVD is a one-sided Jacobi implementation so that results are
//! bit-reproducible for identical inputs.

mod cholesky;
mod svd;
mod vector;

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use cholesky::Cholesky;
pub use svd::{svd, SvdResult, SVD_MAX_SWEEPS, SVD_ORTHOGONALITY_TOL};
pub use vector::{best_k_term, dot, lp_norm, norm2};

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting bad lengths and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("rows have differing lengths");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Places equally long vectors side by side as columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return invalid("columns have differing lengths");
        }
        let n = columns.len();
        let m = Self::from_fn(rows, n, |i, j| columns[j][i]);
        if m.data.iter().any(|v| !v.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        Ok(m)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = *v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return invalid(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        gemm(
            (self.rows, self.cols, other.cols),
            (&self.data, self.cols as isize, 1),
            (&other.data, other.cols as isize, 1),
            &mut out,
        );
        Ok(out)
    }

    /// `self^T * other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return invalid(format!(
                "cannot multiply transpose of {:?} by {:?}",
                self.shape(),
                other.shape()
            ));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        gemm(
            (self.cols, self.rows, other.cols),
            (&self.data, 1, self.cols as isize),
            (&other.data, other.cols as isize, 1),
            &mut out,
        );
        Ok(out)
    }

    /// `self * other^T` without materializing the transpose.
    pub fn matmul_t(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return invalid(format!(
                "cannot multiply {:?} by transpose of {:?}",
                self.shape(),
                other.shape()
            ));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        gemm(
            (self.rows, self.cols, other.rows),
            (&self.data, self.cols as isize, 1),
            (&other.data, 1, other.cols as isize),
            &mut out,
        );
        Ok(out)
    }

    /// `out = self * x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            *o = dot(row, x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    /// `out = self^T * x`.
    pub fn t_matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (xi, row) in x.iter().zip(self.data.chunks_exact(self.cols.max(1))) {
            if *xi != 0.0 {
                for (o, r) in out.iter_mut().zip(row) {
                    *o += xi * r;
                }
            }
        }
    }

    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.t_matvec_into(x, &mut out);
        out
    }

    /// Sub-matrix made of the leading `n` columns.
    pub fn leading_columns(&self, n: usize) -> Self {
        assert!(n <= self.cols);
        Self::from_fn(self.rows, n, |i, j| self[(i, j)])
    }

    /// `‖self^T self − I‖_F`.
    pub fn column_orthonormality_defect(&self) -> f64 {
        let gram = self.t_matmul(self).expect("square product");
        gram.sub(&Self::identity(self.cols))
            .expect("same shape")
            .frobenius_norm()
    }

    /// `‖self self^T − I‖_F`.
    pub fn row_orthonormality_defect(&self) -> f64 {
        self.transpose().column_orthonormality_defect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

fn gemm(
    (m, k, n): (usize, usize, usize),
    (a, rsa, csa): (&[f64], isize, isize),
    (b, rsb, csb): (&[f64], isize, isize),
    out: &mut DenseMatrix,
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    let ldc = out.cols as isize;
    // SAFETY: the strides describe in-bounds views of `a`, `b` and `out`,
    // whose lengths were validated by the callers' shape checks.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            out.data.as_mut_ptr(),
            ldc,
            1,
        );
    }
}

/// Distance between the column spans of two matrices with `k` orthonormal
/// columns: `‖V1 V1^T − V2 V2^T‖_F`.
///
/// Evaluated as `sqrt(‖(I − P1) V2‖² + ‖(I − P2) V1‖²)`, which equals the
/// projector difference for orthonormal inputs but avoids squaring away
/// small distances.
pub fn projection_distance(v1: &DenseMatrix, v2: &DenseMatrix) -> Result<f64> {
    if v1.shape() != v2.shape() {
        return invalid(format!(
            "projection_distance needs equal shapes, got {:?} and {:?}",
            v1.shape(),
            v2.shape()
        ));
    }
    let residual = |p: &DenseMatrix, q: &DenseMatrix| -> f64 {
        let coeff = p.t_matmul(q).expect("shapes checked");
        let proj = p.matmul(&coeff).expect("shapes checked");
        let r = q.sub(&proj).expect("shapes checked").frobenius_norm();
        r * r
    };
    Ok((residual(v1, v2) + residual(v2, v1)).sqrt())
}
