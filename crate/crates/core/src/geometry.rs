//! Parameter spaces and differentiable maps between latent and physical
//! variables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Discrete,
    Continuous1d,
    Continuous2d,
    Image2d,
}

/// Shape and interpretation of a parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    kind: SpaceKind,
    shape: Vec<usize>,
    grid_spacing: Option<f64>,
}

impl Space {
    pub fn new(kind: SpaceKind, shape: Vec<usize>, grid_spacing: Option<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::invalid("space shape entries must be positive"));
        }
        let rank_ok = match kind {
            SpaceKind::Discrete | SpaceKind::Continuous1d => shape.len() == 1,
            SpaceKind::Continuous2d | SpaceKind::Image2d => shape.len() == 2,
        };
        if !rank_ok {
            return Err(Error::invalid(format!("shape {shape:?} does not fit {kind:?}")));
        }
        match (kind, grid_spacing) {
            (SpaceKind::Continuous1d | SpaceKind::Continuous2d, Some(h)) if h > 0.0 && h.is_finite() => {}
            (SpaceKind::Continuous1d | SpaceKind::Continuous2d, _) => {
                return Err(Error::invalid("continuous spaces need a positive grid spacing"))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            shape,
            grid_spacing,
        })
    }

    pub fn discrete(n: usize) -> Self {
        Self::new(SpaceKind::Discrete, alloc::vec![n], None).expect("n must be positive")
    }

    /// `n` equidistant nodes with the given spacing.
    pub fn continuous_1d(n: usize, h: f64) -> Result<Self> {
        Self::new(SpaceKind::Continuous1d, alloc::vec![n], Some(h))
    }

    pub fn continuous_2d(rows: usize, cols: usize, h: f64) -> Result<Self> {
        Self::new(SpaceKind::Continuous2d, alloc::vec![rows, cols], Some(h))
    }

    pub fn image(rows: usize, cols: usize) -> Result<Self> {
        Self::new(SpaceKind::Image2d, alloc::vec![rows, cols], None)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn grid_spacing(&self) -> Option<f64> {
        self.grid_spacing
    }

    pub fn dim(&self) -> usize {
        self.shape.iter().product()
    }

    /// `(rows, cols)` for two-dimensional spaces.
    pub fn grid_2d(&self) -> Option<(usize, usize)> {
        match self.kind {
            SpaceKind::Continuous2d | SpaceKind::Image2d => Some((self.shape[0], self.shape[1])),
            _ => None,
        }
    }

    /// Whether the space carries neighbour structure (needed by TV).
    pub fn has_grid(&self) -> bool {
        !matches!(self.kind, SpaceKind::Discrete)
    }
}

/// A map `x = G(z)` with adjoint Jacobian products.
///
/// Implementations are immutable and shared read-only across chains.
pub trait Transform: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn codomain_dim(&self) -> usize;

    /// `G(z)`; `z` has the domain dimension.
    fn forward_unchecked(&self, z: &[f64]) -> Vec<f64>;

    /// `J_G(z)^T v`.
    fn vjp_unchecked(&self, z: &[f64], v: &[f64]) -> Vec<f64>;

    fn name(&self) -> String;

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("transform input", self.domain_dim(), z.len())?;
        Ok(self.forward_unchecked(z))
    }

    fn vjp(&self, z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim("transform input", self.domain_dim(), z.len())?;
        check_dim("transform cotangent", self.codomain_dim(), v.len())?;
        Ok(self.vjp_unchecked(z, v))
    }
}

impl fmt::Debug for dyn Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({} -> {})", self.name(), self.domain_dim(), self.codomain_dim())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityTransform {
    pub dim: usize,
}

impl Transform for IdentityTransform {
    fn domain_dim(&self) -> usize {
        self.dim
    }
    fn codomain_dim(&self) -> usize {
        self.dim
    }
    fn forward_unchecked(&self, z: &[f64]) -> Vec<f64> {
        z.to_vec()
    }
    fn vjp_unchecked(&self, _z: &[f64], v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }
    fn name(&self) -> String {
        "identity".into()
    }
}

/// Componentwise `exp`, giving log-normal priors from Gaussian latents.
#[derive(Debug, Clone, Copy)]
pub struct ExpTransform {
    pub dim: usize,
}

impl Transform for ExpTransform {
    fn domain_dim(&self) -> usize {
        self.dim
    }
    fn codomain_dim(&self) -> usize {
        self.dim
    }
    fn forward_unchecked(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|v| v.exp()).collect()
    }
    fn vjp_unchecked(&self, z: &[f64], v: &[f64]) -> Vec<f64> {
        z.iter().zip(v).map(|(zi, vi)| zi.exp() * vi).collect()
    }
    fn name(&self) -> String {
        "exp".into()
    }
}

/// Componentwise `max(z, 0)`. Not differentiable at 0; the vjp uses the
/// almost-everywhere derivative, which is taken as 0 at the kink.
#[derive(Debug, Clone, Copy)]
pub struct PositivePartTransform {
    pub dim: usize,
}

impl Transform for PositivePartTransform {
    fn domain_dim(&self) -> usize {
        self.dim
    }
    fn codomain_dim(&self) -> usize {
        self.dim
    }
    fn forward_unchecked(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|v| v.max(0.0)).collect()
    }
    fn vjp_unchecked(&self, z: &[f64], v: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(v)
            .map(|(zi, vi)| if *zi > 0.0 { *vi } else { 0.0 })
            .collect()
    }
    fn name(&self) -> String {
        "positive-part".into()
    }
}

/// Piecewise-constant expansion of `k` block values onto `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StepExpansion {
    n: usize,
    // starts[j] is the first node of block j; starts[0] == 0
    starts: Vec<usize>,
}

impl StepExpansion {
    /// `breakpoints` are the first node indices of blocks `1..k`, strictly
    /// increasing inside `(0, n)`.
    pub fn new(n: usize, breakpoints: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("step expansion needs n >= 1"));
        }
        let mut starts = alloc::vec![0];
        for &b in breakpoints {
            if b == 0 || b >= n || b <= *starts.last().unwrap() {
                return Err(Error::invalid(format!(
                    "breakpoints must be strictly increasing inside (0, {n}); got {breakpoints:?}"
                )));
            }
            starts.push(b);
        }
        Ok(Self { n, starts })
    }

    /// `k` near-equal blocks; block `j` starts at `floor(j n / k)`.
    pub fn equal_blocks(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("cannot split {n} nodes into {k} blocks")));
        }
        let bps: Vec<usize> = (1..k).map(|j| j * n / k).collect();
        Self::new(n, &bps)
    }

    pub fn blocks(&self) -> usize {
        self.starts.len()
    }

    fn block_range(&self, j: usize) -> core::ops::Range<usize> {
        let end = self.starts.get(j + 1).copied().unwrap_or(self.n);
        self.starts[j]..end
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        (0..self.blocks()).map(|j| self.block_range(j).len()).collect()
    }
}

impl Transform for StepExpansion {
    fn domain_dim(&self) -> usize {
        self.blocks()
    }
    fn codomain_dim(&self) -> usize {
        self.n
    }
    fn forward_unchecked(&self, z: &[f64]) -> Vec<f64> {
        let mut x = alloc::vec![0.0; self.n];
        for (j, zj) in z.iter().enumerate() {
            for xi in &mut x[self.block_range(j)] {
                *xi = *zj;
            }
        }
        x
    }
    fn vjp_unchecked(&self, _z: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.blocks())
            .map(|j| v[self.block_range(j)].iter().sum())
            .collect()
    }
    fn name(&self) -> String {
        format!("step-expansion(k={}, n={})", self.blocks(), self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exp_forward() {
        let t = ExpTransform { dim: 2 };
        assert_eq!(t.apply(&[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        let x = t.apply(&[0.0, core::f64::consts::LN_2]).unwrap();
        assert!((x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exp_vjp_matches_central_differences() {
        let t = ExpTransform { dim: 2 };
        let z = [0.0, core::f64::consts::LN_2];
        let h = 1e-6;
        // column sums of the finite-difference Jacobian = J^T (1, 1)
        let mut fd = [0.0; 2];
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let (fp, fm) = (t.apply(&zp).unwrap(), t.apply(&zm).unwrap());
            fd[j] = (0..2).map(|i| (fp[i] - fm[i]) / (2.0 * h)).sum();
        }
        assert!((fd[0] - 1.0).abs() < 1e-8 && (fd[1] - 2.0).abs() < 1e-8);
        let v = t.vjp(&z, &[1.0, 1.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn step_expansion_replicates_and_sums() {
        let t = StepExpansion::equal_blocks(2, 4).unwrap();
        assert_eq!(t.apply(&[3.0, -1.0]).unwrap(), vec![3.0, 3.0, -1.0, -1.0]);
        assert_eq!(t.vjp(&[3.0, -1.0], &[1.0; 4]).unwrap(), vec![2.0, 2.0]);
        // adjoint of replication applied to a replicated vector scales by block size
        let t = StepExpansion::new(5, &[1, 4]).unwrap();
        let zp = [2.0, -3.0, 0.5];
        let back = t.vjp(&[0.0; 3], &t.apply(&zp).unwrap()).unwrap();
        assert_eq!(back, vec![2.0, -9.0, 0.5]);
    }

    #[test]
    fn identity_vjp_passthrough() {
        let t = IdentityTransform { dim: 3 };
        assert_eq!(t.vjp(&[9.0, 9.0, 9.0], &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn dimension_errors() {
        let t = ExpTransform { dim: 2 };
        assert!(matches!(t.apply(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(t.vjp(&[1.0, 1.0], &[1.0]).is_err());
        assert!(StepExpansion::new(4, &[2, 2]).is_err());
        assert!(StepExpansion::equal_blocks(5, 4).is_err());
    }

    #[test]
    fn equal_blocks_for_deconvolution_default() {
        let t = StepExpansion::equal_blocks(9, 128).unwrap();
        let sizes = t.block_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), 128);
        assert!(sizes.iter().all(|&s| s == 14 || s == 15));
    }

    #[test]
    fn positive_part_kink_derivative_is_zero() {
        let t = PositivePartTransform { dim: 3 };
        assert_eq!(t.apply(&[-1.0, 0.0, 2.0]).unwrap(), vec![0.0, 0.0, 2.0]);
        assert_eq!(t.vjp(&[-1.0, 0.0, 2.0], &[1.0; 3]).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn space_invariants() {
        assert!(Space::continuous_1d(4, 0.0).is_err());
        assert!(Space::new(SpaceKind::Image2d, vec![4], None).is_err());
        assert_eq!(Space::image(3, 4).unwrap().dim(), 12);
    }
}
