//! Discretized Poisson problems on the unit interval and the unit square.
//!
//! Sign convention: `-div(kappa grad u) = f`, so nonnegative sources give
//! nonnegative potentials.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{LinearOperator, NonlinearModel, OperatorKind};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::BandedSpd;

/// Source-to-potential map of the 1-D problem `-u'' = f`, `u(0) = u(1) = 0`,
/// discretized with piecewise-linear finite elements: `u = K^{-1} M f` on the
/// interior nodes.
#[derive(Debug, Clone)]
pub struct Poisson1dSource {
    n_elements: usize,
    stiffness: BandedSpd,
}

pub fn poisson_1d_source_operator(n_elements: usize) -> Result<Poisson1dSource> {
    if n_elements < 2 {
        return Err(Error::invalid("the 1-D Poisson mesh needs at least 2 elements"));
    }
    let n = n_elements - 1;
    let h = 1.0 / n_elements as f64;
    let mut k = BandedSpd::zeros(n, 1);
    for i in 0..n {
        k.add(i, i, 2.0 / h);
        if i > 0 {
            k.add(i, i - 1, -1.0 / h);
        }
    }
    Ok(Poisson1dSource {
        n_elements,
        stiffness: k.factor()?,
    })
}

impl Poisson1dSource {
    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_elements as f64
    }

    /// Coordinates of the interior nodes, where `f` and `u` live.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (1..self.n_elements).map(|i| i as f64 * h).collect()
    }

    fn mass(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let c = self.h() / 6.0;
        (0..n)
            .map(|i| {
                let left = if i > 0 { f[i - 1] } else { 0.0 };
                let right = if i + 1 < n { f[i + 1] } else { 0.0 };
                c * (left + 4.0 * f[i] + right)
            })
            .collect()
    }
}

impl LinearOperator for Poisson1dSource {
    fn domain_dim(&self) -> usize {
        self.n_elements - 1
    }
    fn range_dim(&self) -> usize {
        self.n_elements - 1
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::PdeSolve
    }
    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.stiffness.solve(&self.mass(x))
    }
    fn adjoint_unchecked(&self, y: &[f64]) -> Vec<f64> {
        self.mass(&self.stiffness.solve(y))
    }
}

/// Constant-coefficient 5-point Laplacian on the `(n-2)^2` interior nodes of
/// an `n x n` grid over the unit square, zero Dirichlet data unless given.
///
/// Interior node `(i, j)` (row `i`, column `j`, both in `1..n-1`) has index
/// `(i - 1) * (n - 2) + (j - 1)`; column 0 is the left edge.
#[derive(Debug, Clone)]
pub struct Poisson2dSolver {
    grid_n: usize,
    laplacian: BandedSpd,
}

impl Poisson2dSolver {
    pub fn new(grid_n: usize) -> Result<Self> {
        if grid_n < 4 {
            return Err(Error::invalid("2-D Poisson grids need grid_n >= 4"));
        }
        let kappa = vec![1.0; grid_n * grid_n];
        Ok(Self {
            grid_n,
            laplacian: assemble_flux_form(grid_n, &kappa).factor()?,
        })
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn interior_dim(&self) -> usize {
        (self.grid_n - 2) * (self.grid_n - 2)
    }

    /// Solves `-Laplace u = f` for interior values of `f` and `u`.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim("poisson source", self.interior_dim(), f.len())?;
        Ok(self.laplacian.solve(f))
    }
}

fn h_of(grid_n: usize) -> f64 {
    1.0 / (grid_n - 1) as f64
}

// Flux-form stiffness matrix for nodal conductivities `kappa` (length n^2),
// edge conductance = mean of the endpoint values.
fn assemble_flux_form(grid_n: usize, kappa: &[f64]) -> BandedSpd {
    let m = grid_n - 2;
    let inv_h2 = 1.0 / (h_of(grid_n) * h_of(grid_n));
    let mut k = BandedSpd::zeros(m * m, m);
    for_each_edge(grid_n, |a, b| {
        let c = 0.5 * (kappa[a] + kappa[b]) * inv_h2;
        let (ia, ib) = (interior_index(grid_n, a), interior_index(grid_n, b));
        if let Some(p) = ia {
            k.add(p, p, c);
        }
        if let Some(q) = ib {
            k.add(q, q, c);
        }
        if let (Some(p), Some(q)) = (ia, ib) {
            k.add(p, q, -c);
        }
    });
    k
}

fn interior_index(grid_n: usize, node: usize) -> Option<usize> {
    let (i, j) = (node / grid_n, node % grid_n);
    if i == 0 || j == 0 || i == grid_n - 1 || j == grid_n - 1 {
        None
    } else {
        Some((i - 1) * (grid_n - 2) + (j - 1))
    }
}

// Calls `f(a, b)` for every grid edge with at least one interior endpoint.
fn for_each_edge(grid_n: usize, mut f: impl FnMut(usize, usize)) {
    let n = grid_n;
    for i in 0..n {
        for j in 0..n {
            let a = i * n + j;
            if j + 1 < n && (1..n - 1).contains(&i) {
                f(a, a + 1);
            }
            if i + 1 < n && (1..n - 1).contains(&j) {
                f(a, a + n);
            }
        }
    }
}

/// Left-boundary-data-to-potential map: `g` on the left-edge nodes
/// `(i, 0)`, `i in 1..n-1`, zero Dirichlet data on the rest of the boundary,
/// `f = 0`; output is `u` on the interior nodes.
#[derive(Debug, Clone)]
pub struct Poisson2dBoundary {
    solver: Poisson2dSolver,
}

pub fn poisson_2d_boundary_operator(grid_n: usize) -> Result<Poisson2dBoundary> {
    Ok(Poisson2dBoundary {
        solver: Poisson2dSolver::new(grid_n)?,
    })
}

impl Poisson2dBoundary {
    pub fn grid_n(&self) -> usize {
        self.solver.grid_n
    }

    /// Vertical coordinates of the unknown boundary values.
    pub fn boundary_nodes(&self) -> Vec<f64> {
        let h = h_of(self.grid_n());
        (1..self.grid_n() - 1).map(|i| i as f64 * h).collect()
    }
}

impl LinearOperator for Poisson2dBoundary {
    fn domain_dim(&self) -> usize {
        self.grid_n() - 2
    }
    fn range_dim(&self) -> usize {
        self.solver.interior_dim()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::PdeSolve
    }
    fn apply_unchecked(&self, g: &[f64]) -> Vec<f64> {
        let m = self.grid_n() - 2;
        let h = h_of(self.grid_n());
        let mut b = vec![0.0; m * m];
        for (i, gi) in g.iter().enumerate() {
            b[i * m] = gi / (h * h);
        }
        self.solver.laplacian.solve(&b)
    }
    fn adjoint_unchecked(&self, w: &[f64]) -> Vec<f64> {
        let m = self.grid_n() - 2;
        let h = h_of(self.grid_n());
        let v = self.solver.laplacian.solve(w);
        (0..m).map(|i| v[i * m] / (h * h)).collect()
    }
}

/// Log-conductivity-to-potential map `m -> u` for `-div(e^m grad u) = f` with
/// constant `f` and zero Dirichlet data. `m` lives on all `n^2` nodes, `u` on
/// the interior nodes. The stiffness matrix is refactored on every call.
#[derive(Debug, Clone)]
pub struct ConductivityModel {
    grid_n: usize,
    source: f64,
}

pub fn poisson_2d_conductivity_model(grid_n: usize, source_const: f64) -> Result<ConductivityModel> {
    if grid_n < 4 {
        return Err(Error::invalid("2-D Poisson grids need grid_n >= 4"));
    }
    if !source_const.is_finite() {
        return Err(Error::invalid("source must be finite"));
    }
    Ok(ConductivityModel {
        grid_n,
        source: source_const,
    })
}

impl ConductivityModel {
    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    fn factor(&self, m: &[f64]) -> Result<BandedSpd> {
        let kappa: Vec<f64> = m.iter().map(|v| v.exp()).collect();
        if kappa.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::numerical("conductivity overflow", f64::INFINITY));
        }
        assemble_flux_form(self.grid_n, &kappa)
            .factor()
            .map_err(|e| Error::numerical(format!("conductivity solve failed: {e}"), f64::NAN))
    }

    fn rhs(&self) -> Vec<f64> {
        vec![self.source; (self.grid_n - 2) * (self.grid_n - 2)]
    }
}

impl NonlinearModel for ConductivityModel {
    fn domain_dim(&self) -> usize {
        self.grid_n * self.grid_n
    }
    fn range_dim(&self) -> usize {
        (self.grid_n - 2) * (self.grid_n - 2)
    }
    fn forward_unchecked(&self, m: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factor(m)?.solve(&self.rhs()))
    }

    // Adjoint state: K(m) u = f, K(m) lambda = v, then
    // d<v, u>/dm_a = -sum over edges e at a of dK_e/dm_a (lambda_p - lambda_q)(u_p - u_q).
    fn vjp_unchecked(&self, m: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let k = self.factor(m)?;
        let u = k.solve(&self.rhs());
        let lambda = k.solve(v);
        let n = self.grid_n;
        let inv_h2 = 1.0 / (h_of(n) * h_of(n));
        let at = |vec: &[f64], node: usize| interior_index(n, node).map_or(0.0, |p| vec[p]);
        let mut grad = vec![0.0; n * n];
        for_each_edge(n, |a, b| {
            let c = (at(&lambda, a) - at(&lambda, b)) * (at(&u, a) - at(&u, b)) * inv_h2;
            grad[a] -= 0.5 * m[a].exp() * c;
            grad[b] -= 0.5 * m[b].exp() * c;
        });
        Ok(grad)
    }

    fn name(&self) -> String {
        format!("poisson-2d-conductivity(n={})", self.grid_n)
    }
}
