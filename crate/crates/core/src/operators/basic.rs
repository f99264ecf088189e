use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{LinearOperator, OperatorKind, SharedOperator};
use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{DenseCholesky, DenseMatrix};

/// Explicit matrix operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: DenseMatrix,
    kind: OperatorKind,
}

impl DenseOperator {
    pub fn new(matrix: DenseMatrix) -> Self {
        Self {
            matrix,
            kind: OperatorKind::Dense,
        }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn domain_dim(&self) -> usize {
        self.matrix.cols()
    }
    fn range_dim(&self) -> usize {
        self.matrix.rows()
    }
    fn kind(&self) -> OperatorKind {
        self.kind
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        self.matrix.matvec_transpose(y)
    }
}

/// Builds a dense operator from `rows x cols` row-major entries.
pub fn dense_from_matrix(rows: usize, cols: usize, entries: Vec<f64>) -> Result<DenseOperator> {
    Ok(DenseOperator::new(DenseMatrix::new(rows, cols, entries)?))
}

/// Discrete Gaussian blur on `n` equidistant nodes with zero padding.
///
/// The midpoint-rule kernel `exp(-k^2 / (2 s^2))` (with `s` in grid
/// spacings) is truncated at `4 s` and normalized to unit mass, so interior
/// rows sum to 1, boundary rows to less, and `s -> 0` gives the identity.
pub fn gaussian_convolution_1d(n: usize, sigma_pixels: f64) -> Result<DenseOperator> {
    if n < 2 {
        return Err(Error::invalid("convolution needs n >= 2"));
    }
    if !(sigma_pixels > 0.0 && sigma_pixels.is_finite()) {
        return Err(Error::invalid("blur width must be positive"));
    }
    let radius = (4.0 * sigma_pixels).ceil() as usize;
    let weights: Vec<f64> = (0..=radius)
        .map(|k| {
            let t = k as f64 / sigma_pixels;
            (-0.5 * t * t).exp()
        })
        .collect();
    let mass = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(n - 1);
        for j in lo..=hi {
            m.set(i, j, weights[i.abs_diff(j)] / mass);
        }
    }
    Ok(DenseOperator {
        matrix: m,
        kind: OperatorKind::Convolution1d,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator {
    pub dim: usize,
}

impl LinearOperator for IdentityOperator {
    fn domain_dim(&self) -> usize {
        self.dim
    }
    fn range_dim(&self) -> usize {
        self.dim
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Identity
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn is_identity(&self) -> bool {
        true
    }
}

/// `c A`
#[derive(Clone)]
pub struct ScaledOperator {
    pub inner: SharedOperator,
    pub scale: f64,
}

impl LinearOperator for ScaledOperator {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.inner.range_dim()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Scaled
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.inner.apply_unchecked(x);
        v.iter_mut().for_each(|e| *e *= self.scale);
        v
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        let mut v = self.inner.adjoint_unchecked(y);
        v.iter_mut().for_each(|e| *e *= self.scale);
        v
    }
}

/// `outer * inner`
#[derive(Clone)]
pub struct Composition {
    outer: SharedOperator,
    inner: SharedOperator,
}

impl Composition {
    pub fn new(outer: SharedOperator, inner: SharedOperator) -> Result<Self> {
        check_dim("composition", outer.domain_dim(), inner.range_dim())?;
        Ok(Self { outer, inner })
    }
}

impl LinearOperator for Composition {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.outer.range_dim()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Composition
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.outer.apply_unchecked(&self.inner.apply_unchecked(x))
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        self.inner.adjoint_unchecked(&self.outer.adjoint_unchecked(y))
    }
}

/// Selects the kept entries of a vector; the adjoint scatters back with
/// zeros elsewhere.
#[derive(Debug, Clone)]
pub struct MaskOperator {
    n: usize,
    keep: Vec<usize>,
}

impl MaskOperator {
    pub fn keep(&self) -> &[usize] {
        &self.keep
    }
}

pub fn mask_operator(n: usize, keep_indices: Vec<usize>) -> Result<MaskOperator> {
    if n == 0 {
        return Err(Error::invalid("mask over an empty space"));
    }
    let mut seen = vec![false; n];
    for &k in &keep_indices {
        if k >= n {
            return Err(Error::invalid(format!("mask index {k} out of range 0..{n}")));
        }
        if seen[k] {
            return Err(Error::invalid(format!("duplicate mask index {k}")));
        }
        seen[k] = true;
    }
    Ok(MaskOperator {
        n,
        keep: keep_indices,
    })
}

impl LinearOperator for MaskOperator {
    fn domain_dim(&self) -> usize {
        self.n
    }
    fn range_dim(&self) -> usize {
        self.keep.len()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Mask
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.keep.iter().map(|&k| x[k]).collect()
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&k, v) in self.keep.iter().zip(y) {
            out[k] = *v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Differences between neighbours only; constants are in the nullspace.
    Neumann,
    /// The node before the first one is pinned to zero, making the
    /// operator injective.
    Zero,
}

/// First-order differences on a 1-D signal or a 2-D image. For images the
/// output stacks the differences along rows followed by those along columns.
#[derive(Debug, Clone)]
pub struct FiniteDifference {
    shape: Vec<usize>,
    boundary: Boundary,
}

pub fn finite_difference(shape: &[usize], boundary: Boundary) -> Result<FiniteDifference> {
    match shape {
        [n] if *n >= 1 => {}
        [r, c] if *r >= 1 && *c >= 1 => {}
        _ => {
            return Err(Error::invalid(format!(
                "finite differences need a 1-D or 2-D shape, got {shape:?}"
            )))
        }
    }
    if boundary == Boundary::Neumann && shape.iter().product::<usize>() < 2 {
        return Err(Error::invalid("Neumann differences need at least two nodes"));
    }
    Ok(FiniteDifference {
        shape: shape.to_vec(),
        boundary,
    })
}

impl FiniteDifference {
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn line_out_len(&self, len: usize) -> usize {
        match self.boundary {
            Boundary::Neumann => len - 1,
            Boundary::Zero => len,
        }
    }

    // differences along a strided line of `len` nodes
    fn diff_line(&self, x: &[f64], start: usize, stride: usize, len: usize, out: &mut Vec<f64>) {
        let at = |k: usize| x[start + k * stride];
        if self.boundary == Boundary::Zero {
            out.push(at(0));
        }
        for k in 1..len {
            out.push(at(k) - at(k - 1));
        }
    }

    fn diff_line_adjoint(&self, y: &[f64], out: &mut [f64], start: usize, stride: usize, len: usize) {
        match self.boundary {
            Boundary::Neumann => {
                for k in 0..len - 1 {
                    out[start + (k + 1) * stride] += y[k];
                    out[start + k * stride] -= y[k];
                }
            }
            Boundary::Zero => {
                out[start] += y[0];
                for k in 1..len {
                    out[start + k * stride] += y[k];
                    out[start + (k - 1) * stride] -= y[k];
                }
            }
        }
    }
}

impl LinearOperator for FiniteDifference {
    fn domain_dim(&self) -> usize {
        self.shape.iter().product()
    }
    fn range_dim(&self) -> usize {
        match self.shape[..] {
            [n] => self.line_out_len(n),
            [r, c] => r * self.line_out_len(c) + c * self.line_out_len(r),
            _ => unreachable!(),
        }
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::FiniteDifference
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.range_dim());
        match self.shape[..] {
            [n] => self.diff_line(x, 0, 1, n, &mut out),
            [r, c] => {
                for i in 0..r {
                    self.diff_line(x, i * c, 1, c, &mut out);
                }
                for j in 0..c {
                    self.diff_line(x, j, c, r, &mut out);
                }
            }
            _ => unreachable!(),
        }
        out
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain_dim()];
        match self.shape[..] {
            [n] => self.diff_line_adjoint(y, &mut out, 0, 1, n),
            [r, c] => {
                let lc = self.line_out_len(c);
                let lr = self.line_out_len(r);
                for i in 0..r {
                    self.diff_line_adjoint(&y[i * lc..(i + 1) * lc], &mut out, i * c, 1, c);
                }
                let off = r * lc;
                for j in 0..c {
                    self.diff_line_adjoint(&y[off + j * lr..off + (j + 1) * lr], &mut out, j, c, r);
                }
            }
            _ => unreachable!(),
        }
        out
    }
}

/// `L^{-1}` for a Cholesky factor `L` of a covariance `Sigma = L L^T`, so
/// that `|L^{-1} r|^2 = r^T Sigma^{-1} r`.
#[derive(Debug, Clone)]
pub struct CholeskyWhitening {
    chol: Arc<DenseCholesky>,
}

impl CholeskyWhitening {
    pub fn new(chol: Arc<DenseCholesky>) -> Self {
        Self { chol }
    }
}

impl LinearOperator for CholeskyWhitening {
    fn domain_dim(&self) -> usize {
        self.chol.dim()
    }
    fn range_dim(&self) -> usize {
        self.chol.dim()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Whitening
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.chol.solve_l(x)
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        self.chol.solve_lt(y)
    }
}
