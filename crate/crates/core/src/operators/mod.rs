//! Forward models: linear operators with adjoints and differentiable
//! nonlinear models with adjoint Jacobian products.

mod basic;
mod pde;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Result};
use crate::linalg::dot;

pub use basic::{
    dense_from_matrix, finite_difference, gaussian_convolution_1d, mask_operator, Boundary,
    CholeskyWhitening, Composition, DenseOperator, FiniteDifference, IdentityOperator, MaskOperator,
    ScaledOperator,
};
pub use pde::{
    poisson_1d_source_operator, poisson_2d_boundary_operator, poisson_2d_conductivity_model,
    ConductivityModel, Poisson1dSource, Poisson2dBoundary, Poisson2dSolver,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Dense,
    Convolution1d,
    FiniteDifference,
    Mask,
    Composition,
    PdeSolve,
    Identity,
    Scaled,
    Whitening,
}

/// A linear map `x -> A x` between finite-dimensional spaces together with
/// its adjoint `y -> A^T y`.
pub trait LinearOperator: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    fn kind(&self) -> OperatorKind;

    /// `A x`. `x` must have the domain dimension.
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64>;

    /// `A^T y`. `y` must have the range dimension.
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64>;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("operator apply", self.domain_dim(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("operator adjoint", self.range_dim(), y.len())?;
        Ok(self.adjoint_unchecked(y))
    }

    /// True if the operator is the identity on its domain.
    fn is_identity(&self) -> bool {
        false
    }
}

impl fmt::Debug for dyn LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({} -> {})", self.kind(), self.domain_dim(), self.range_dim())
    }
}

pub type SharedOperator = Arc<dyn LinearOperator>;

/// Relative mismatch `|<Ax, y> - <x, A^T y>| / (|Ax||y| + |x||A^T y|)` of
/// the dot test.
pub fn adjoint_mismatch(op: &dyn LinearOperator, x: &[f64], y: &[f64]) -> Result<f64> {
    let ax = op.apply(x)?;
    let aty = op.adjoint(y)?;
    let lhs = dot(&ax, y);
    let rhs = dot(x, &aty);
    let scale = crate::linalg::norm2(&ax) * crate::linalg::norm2(y)
        + crate::linalg::norm2(x) * crate::linalg::norm2(&aty);
    if scale == 0.0 {
        return Ok((lhs - rhs).abs());
    }
    Ok((lhs - rhs).abs() / scale)
}

/// Materializes an operator as a dense matrix by applying it to unit vectors.
pub fn to_dense(op: &dyn LinearOperator) -> crate::linalg::DenseMatrix {
    let (m, n) = (op.range_dim(), op.domain_dim());
    let mut out = crate::linalg::DenseMatrix::zeros(m, n);
    let mut e = alloc::vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op.apply_unchecked(&e);
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, *v);
        }
        e[j] = 0.0;
    }
    out
}

/// A differentiable, possibly nonlinear forward map `x -> F(x)`.
pub trait NonlinearModel: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;

    fn forward_unchecked(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `J_F(x)^T v`.
    fn vjp_unchecked(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>>;

    fn name(&self) -> String;

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("model forward", self.domain_dim(), x.len())?;
        self.forward_unchecked(x)
    }

    fn jvp_adjoint(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim("model input", self.domain_dim(), x.len())?;
        check_dim("model cotangent", self.range_dim(), v.len())?;
        self.vjp_unchecked(x, v)
    }
}

/// Forward model of a likelihood.
#[derive(Clone)]
pub enum ForwardModel {
    Linear(SharedOperator),
    Nonlinear(Arc<dyn NonlinearModel>),
}

impl fmt::Debug for ForwardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForwardModel::Linear(op) => write!(f, "Linear({:?})", &**op),
            ForwardModel::Nonlinear(m) => write!(f, "Nonlinear({})", m.name()),
        }
    }
}

impl ForwardModel {
    pub fn domain_dim(&self) -> usize {
        match self {
            ForwardModel::Linear(op) => op.domain_dim(),
            ForwardModel::Nonlinear(m) => m.domain_dim(),
        }
    }

    pub fn range_dim(&self) -> usize {
        match self {
            ForwardModel::Linear(op) => op.range_dim(),
            ForwardModel::Nonlinear(m) => m.range_dim(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            ForwardModel::Linear(op) => op.apply(x),
            ForwardModel::Nonlinear(m) => m.forward(x),
        }
    }

    pub fn vjp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        match self {
            ForwardModel::Linear(op) => {
                check_dim("model input", op.domain_dim(), x.len())?;
                op.adjoint(v)
            }
            ForwardModel::Nonlinear(m) => m.jvp_adjoint(x, v),
        }
    }

    pub fn as_linear(&self) -> Option<&SharedOperator> {
        match self {
            ForwardModel::Linear(op) => Some(op),
            ForwardModel::Nonlinear(_) => None,
        }
    }
}

/// Nonlinear model from user closures.
pub struct ClosureModel<F, G> {
    pub domain: usize,
    pub range: usize,
    pub forward: F,
    pub vjp: G,
    pub label: String,
}

impl<F, G> NonlinearModel for ClosureModel<F, G>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    G: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync,
{
    fn domain_dim(&self) -> usize {
        self.domain
    }
    fn range_dim(&self) -> usize {
        self.range
    }
    fn forward_unchecked(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.forward)(x))
    }
    fn vjp_unchecked(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok((self.vjp)(x, v))
    }
    fn name(&self) -> String {
        self.label.clone()
    }
}
