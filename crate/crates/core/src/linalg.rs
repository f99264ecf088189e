//! Small dense and banded linear algebra used across the crate.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use num_traits::Float;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "dense matrix entries",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi != 0.0 {
                axpy(*yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Cholesky factor `L` of a dense symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    l: DMatrix<f64>,
}

impl DenseCholesky {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::invalid("Cholesky needs a square matrix"));
        }
        let n = m.rows;
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if (a - b).abs() > 1e-10 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::invalid("matrix is not symmetric"));
                }
            }
        }
        let chol = m
            .to_nalgebra()
            .cholesky()
            .ok_or_else(|| Error::invalid("matrix is not positive definite"))?;
        Ok(Self { l: chol.unpack() })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `L z`
    pub fn mul_l(&self, z: &[f64]) -> Vec<f64> {
        let v = &self.l * DVector::from_column_slice(z);
        v.iter().copied().collect()
    }

    /// `L^{-1} b`
    pub fn solve_l(&self, b: &[f64]) -> Vec<f64> {
        let mut v = DVector::from_column_slice(b);
        self.l.solve_lower_triangular_mut(&mut v);
        v.iter().copied().collect()
    }

    /// `L^{-T} b`
    pub fn solve_lt(&self, b: &[f64]) -> Vec<f64> {
        let mut v = DVector::from_column_slice(b);
        self.l.tr_solve_lower_triangular_mut(&mut v);
        v.iter().copied().collect()
    }

    /// `(L L^T)^{-1} b`
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lt(&self.solve_l(b))
    }
}

/// Symmetric positive definite band matrix with half-bandwidth `p`, factored
/// in place by a banded Cholesky decomposition.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    p: usize,
    // band[i * (p + 1) + (i - j)] = A[i][j] for j <= i
    band: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            n,
            p,
            band: vec![0.0; n * (p + 1)],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.p, "entry outside band");
        self.band[i * (self.p + 1) + (i - j)] += v;
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * (self.p + 1) + (i - j)]
    }

    pub fn factor(mut self) -> Result<Self> {
        let (n, p) = (self.n, self.p);
        let w = p + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                let mut s = self.at(i, j);
                let k0 = j0.max(j.saturating_sub(p));
                for k in k0..j {
                    s -= self.band[i * w + (i - k)] * self.band[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::numerical("banded Cholesky: matrix not positive definite", s));
                    }
                    self.band[i * w] = s.sqrt();
                } else {
                    self.band[i * w + (i - j)] = s / self.band[j * w];
                }
            }
        }
        self.factored = true;
        Ok(self)
    }

    /// Solves `A x = b` with the factored matrix.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "BandedSpd::solve before factor");
        let (n, p) = (self.n, self.p);
        let w = p + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in i.saturating_sub(p)..i {
                s -= self.band[i * w + (i - j)] * y[j];
            }
            y[i] = s / self.band[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..(i + w).min(n) {
                s -= self.band[j * w + (j - i)] * y[j];
            }
            y[i] = s / self.band[i * w];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_matches_dense_solve() {
        // 1-D Laplacian plus a second off-diagonal
        let n = 7;
        let mut b = BandedSpd::zeros(n, 2);
        let mut dense = DenseMatrix::zeros(n, n);
        for i in 0..n {
            b.add(i, i, 6.0);
            dense.set(i, i, 6.0);
            if i >= 1 {
                b.add(i, i - 1, -1.0);
                dense.set(i, i - 1, -1.0);
                dense.set(i - 1, i, -1.0);
            }
            if i >= 2 {
                b.add(i, i - 2, -0.5);
                dense.set(i, i - 2, -0.5);
                dense.set(i - 2, i, -0.5);
            }
        }
        let b = b.factor().unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = b.solve(&rhs);
        let back = dense.matvec(&x);
        assert!(max_abs_diff(&back, &rhs) < 1e-12);
        let c = DenseCholesky::factor(&dense).unwrap();
        assert!(max_abs_diff(&c.solve(&rhs), &x) < 1e-12);
    }

    #[test]
    fn banded_rejects_indefinite() {
        let mut b = BandedSpd::zeros(2, 1);
        b.add(0, 0, 1.0);
        b.add(1, 1, 1.0);
        b.add(1, 0, 2.0);
        assert!(b.factor().is_err());
    }

    #[test]
    fn dense_rejects_non_finite() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
    }
}
