//! Dense row-major matrices and the symmetric positive-definite factorization
//! used for every likelihood evaluation and kriging solve.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawMatrix", into = "RawMatrix"))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_vec(raw.rows, raw.cols, raw.data)
    }
}

#[cfg(feature = "serde")]
impl From<Matrix> for RawMatrix {
    fn from(m: Matrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl Matrix {
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must share a length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
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
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(alloc::format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Selects a subset of rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (c, &j) in idx.iter().enumerate() {
                out[(i, c)] = self[(i, j)];
            }
        }
        out
    }

    /// Copies the lower triangle onto the upper one.
    pub fn symmetrize_from_lower(&mut self) {
        debug_assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..i {
                let v = self[(i, j)];
                self[(j, i)] = v;
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with four independent accumulators. The summation order is
/// fixed, so results do not depend on the caller.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

/// Cholesky factor `L` (lower, row-major) of a symmetric positive-definite
/// matrix, together with the diagonal jitter that had to be added, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    lower: Matrix,
    jitter: f64,
}

impl SpdFactor {
    /// Factorizes `a`, reading only its lower triangle. On failure a single
    /// retry is made with `1e-8 * mean(diag)` added to the diagonal.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(alloc::format!(
                "cannot factorize a {}x{} matrix",
                n,
                a.cols()
            )));
        }
        if let Some(lower) = cholesky(a, 0.0) {
            return Ok(Self { lower, jitter: 0.0 });
        }
        let mean_diag = if n == 0 { 0.0 } else { a.trace() / n as f64 };
        let jitter = 1e-8 * mean_diag.abs();
        if jitter > 0.0 {
            if let Some(lower) = cholesky(a, jitter) {
                return Ok(Self { lower, jitter });
            }
        }
        Err(Error::NotPositiveDefinite { dim: n })
    }

    /// Factorizes without the jitter fallback.
    pub fn strict(a: &Matrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        cholesky(a, 0.0)
            .map(|lower| Self { lower, jitter: 0.0 })
            .ok_or(Error::NotPositiveDefinite { dim: a.rows() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// `log |A|`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim())
            .map(|i| self.lower[(i, i)].ln())
            .sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length must match");
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = self.lower.row(i);
            y[i] = (b[i] - dot(&row[..i], &y[..i])) / row[i];
        }
        y
    }

    /// Solves `L^T x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(y.len(), n, "right-hand side length must match");
        let mut v = y.to_vec();
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let row = self.lower.row(k);
            let xk = v[k] / row[k];
            x[k] = xk;
            for (vi, lki) in v[..k].iter_mut().zip(&row[..k]) {
                *vi -= lki * xk;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// `L^{-1} M` applied column by column, returned as one vector per column.
    pub fn forward_columns(&self, m: &Matrix) -> Vec<Vec<f64>> {
        (0..m.cols()).map(|j| self.forward(&m.column(j))).collect()
    }

    /// Dense inverse. Only meant for small matrices.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

fn cholesky(a: &Matrix, jitter: f64) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = {
                let (ri, rj) = (l.row(i), l.row(j));
                a[(i, j)] - dot(&ri[..j], &rj[..j])
            };
            if i == j {
                let d = s + jitter;
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                l[(i, i)] = d.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd3() -> Matrix {
        Matrix::from_rows(&[[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]]).unwrap()
    }

    #[test]
    fn factor_reconstructs_input() {
        let a = spd3();
        let f = SpdFactor::new(&a).unwrap();
        let l = f.lower();
        let llt = l.matmul(&l.transpose()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(llt[(i, j)], a[(i, j)], epsilon = 1e-12);
            }
        }
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn solve_and_log_det() {
        let a = spd3();
        let f = SpdFactor::new(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.solve(&b);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(b) {
            assert_relative_eq!(*u, v, epsilon = 1e-12);
        }
        // det by cofactor expansion
        let det = 4.0 * (5.0 * 3.0 - 1.0) - 2.0 * (2.0 * 3.0 - 0.6) + 0.6 * (2.0 - 5.0 * 0.6);
        assert_relative_eq!(f.log_det(), libm::log(det), epsilon = 1e-12);
    }

    #[test]
    fn indefinite_matrix_fails_after_jitter() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert_eq!(
            SpdFactor::new(&a).unwrap_err(),
            Error::NotPositiveDefinite { dim: 2 }
        );
    }

    #[test]
    fn jitter_rescues_semidefinite_matrix() {
        // rank one: [[1,1],[1,1]]
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(SpdFactor::strict(&a).is_err());
        let f = SpdFactor::new(&a).unwrap();
        assert_relative_eq!(f.jitter(), 1e-8);
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (1..=7).map(|v| v as f64).collect();
        assert_eq!(dot(&a, &a), 140.0);
    }
}
