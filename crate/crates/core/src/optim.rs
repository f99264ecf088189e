//! Deterministic solvers for the randomize-then-optimize samplers: CGLS,
//! FISTA and consensus ADMM over stacked weighted least squares.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, max_abs_diff, norm2, DenseCholesky, DenseMatrix};
use crate::operators::SharedOperator;
use crate::proximal::{prox, ProxFn, ProxTerm};

/// One block `w |A x - b|^2 / 2` of a stacked least-squares objective.
#[derive(Clone, Debug)]
pub struct LsBlock {
    pub op: SharedOperator,
    pub rhs: Vec<f64>,
    pub weight: f64,
}

impl LsBlock {
    pub fn new(op: SharedOperator, rhs: Vec<f64>, weight: f64) -> Self {
        LsBlock { op, rhs, weight }
    }
}

/// `min_x 1/2 sum_i w_i |A_i x - b_i|^2`.
#[derive(Clone, Debug)]
pub struct StackedLeastSquares {
    blocks: Vec<LsBlock>,
    dim: usize,
}

impl StackedLeastSquares {
    pub fn new(blocks: Vec<LsBlock>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::invalid("least squares needs at least one block"))?;
        let dim = first.op.domain_dim();
        for b in &blocks {
            check_dim("least-squares block domain", dim, b.op.domain_dim())?;
            check_dim("least-squares block rhs", b.op.range_dim(), b.rhs.len())?;
            if !(b.weight >= 0.0) || !b.weight.is_finite() {
                return Err(Error::invalid(format!("block weight {} is not a nonnegative number", b.weight)));
            }
        }
        Ok(StackedLeastSquares { blocks, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[LsBlock] {
        &self.blocks
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.weight > 0.0)
            .map(|b| {
                let r = crate::linalg::sub(&b.op.apply_unchecked(x), &b.rhs);
                0.5 * b.weight * dot(&r, &r)
            })
            .sum()
    }

    /// `sum_i w_i A_i^T (A_i x - b_i)`
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for b in self.blocks.iter().filter(|b| b.weight > 0.0) {
            let r = crate::linalg::sub(&b.op.apply_unchecked(x), &b.rhs);
            crate::linalg::axpy(b.weight, &b.op.adjoint_unchecked(&r), &mut g);
        }
        g
    }

    /// `sum_i w_i A_i^T A_i x`
    pub fn normal_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for b in self.blocks.iter().filter(|b| b.weight > 0.0) {
            crate::linalg::axpy(b.weight, &b.op.adjoint_unchecked(&b.op.apply_unchecked(x)), &mut g);
        }
        g
    }

    /// `sum_i w_i A_i^T b_i`
    pub fn normal_rhs(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for b in self.blocks.iter().filter(|b| b.weight > 0.0) {
            crate::linalg::axpy(b.weight, &b.op.adjoint_unchecked(&b.rhs), &mut g);
        }
        g
    }

    fn with_extra(&self, extra: &[LsBlock]) -> StackedLeastSquares {
        let mut blocks = self.blocks.clone();
        blocks.extend_from_slice(extra);
        StackedLeastSquares { blocks, dim: self.dim }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub objective: f64,
}

/// Conjugate gradient least squares. Stops when the normal-equation residual
/// drops below `tol * (1 + |sum w A^T b|)`.
pub fn cgls(ls: &StackedLeastSquares, x0: &[f64], tol: f64, max_iters: usize) -> Result<(Vec<f64>, SolveReport)> {
    check_dim("cgls initial point", ls.dim, x0.len())?;
    if !(tol > 0.0) {
        return Err(Error::invalid("cgls tolerance must be positive"));
    }
    let active: Vec<&LsBlock> = ls.blocks.iter().filter(|b| b.weight > 0.0).collect();
    let threshold = tol * (1.0 + norm2(&ls.normal_rhs()));
    let mut x = x0.to_vec();
    // residuals are stored unweighted; weights enter every inner product
    let mut r: Vec<Vec<f64>> = active
        .iter()
        .map(|b| crate::linalg::sub(&b.rhs, &b.op.apply_unchecked(&x)))
        .collect();
    let adjoint_sum = |r: &[Vec<f64>]| {
        let mut s = vec![0.0; ls.dim];
        for (b, rb) in active.iter().zip(r) {
            crate::linalg::axpy(b.weight, &b.op.adjoint_unchecked(rb), &mut s);
        }
        s
    };
    let mut s = adjoint_sum(&r);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let mut iterations = 0;
    while gamma.sqrt() > threshold && iterations < max_iters {
        let q: Vec<Vec<f64>> = active.iter().map(|b| b.op.apply_unchecked(&p)).collect();
        let qq: f64 = active.iter().zip(&q).map(|(b, qb)| b.weight * dot(qb, qb)).sum();
        if !(qq > 0.0) || !qq.is_finite() {
            return Err(Error::numerical("cgls breakdown: zero curvature direction", gamma.sqrt()));
        }
        let alpha = gamma / qq;
        crate::linalg::axpy(alpha, &p, &mut x);
        for (rb, qb) in r.iter_mut().zip(&q) {
            crate::linalg::axpy(-alpha, qb, rb);
        }
        s = adjoint_sum(&r);
        let gamma_new = dot(&s, &s);
        let beta = gamma_new / gamma;
        for (pk, sk) in p.iter_mut().zip(&s) {
            *pk = sk + beta * *pk;
        }
        gamma = gamma_new;
        iterations += 1;
    }
    let residual = gamma.sqrt();
    if !residual.is_finite() {
        return Err(Error::numerical("cgls produced non-finite iterates", residual));
    }
    let objective = ls.objective(&x);
    Ok((
        x,
        SolveReport {
            iterations,
            residual,
            converged: residual <= threshold,
            objective,
        },
    ))
}

/// Cholesky factor of the normal matrix `sum_i w_i A_i^T A_i`, assembled by
/// probing with unit vectors. Only sensible for small dimensions.
#[derive(Clone, Debug)]
pub struct NormalFactor {
    chol: DenseCholesky,
}

impl NormalFactor {
    pub fn build(ls: &StackedLeastSquares) -> Result<Self> {
        let n = ls.dim;
        let mut h = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = ls.normal_apply(&e);
            e[j] = 0.0;
            for (i, v) in col.iter().enumerate() {
                h.set(i, j, *v);
            }
        }
        // symmetrize away rounding from the probe order
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (h.get(i, j) + h.get(j, i));
                h.set(i, j, v);
                h.set(j, i, v);
            }
        }
        let chol = DenseCholesky::factor(&h).map_err(|_| {
            Error::numerical("normal matrix is singular: the posterior is likely improper", 0.0)
        })?;
        Ok(NormalFactor { chol })
    }

    pub fn dim(&self) -> usize {
        self.chol.dim()
    }

    pub fn solve(&self, ls: &StackedLeastSquares) -> Result<(Vec<f64>, SolveReport)> {
        check_dim("normal factor", self.dim(), ls.dim)?;
        let q = ls.normal_rhs();
        let x = self.chol.solve(&q);
        let residual = norm2(&ls.gradient(&x));
        if !residual.is_finite() {
            return Err(Error::numerical("dense least squares produced non-finite values", residual));
        }
        let objective = ls.objective(&x);
        Ok((
            x,
            SolveReport {
                iterations: 1,
                residual,
                converged: true,
                objective,
            },
        ))
    }
}

/// How a quadratic subproblem is solved.
#[derive(Clone, Debug)]
pub enum LsSolver {
    Cgls { tol: f64, max_iters: usize },
    /// Pre-factored normal matrix; only the right-hand sides may change.
    Dense(Arc<NormalFactor>),
}

impl Default for LsSolver {
    fn default() -> Self {
        LsSolver::Cgls {
            tol: CGLS_TOL,
            max_iters: CGLS_MAX_ITERS,
        }
    }
}

pub const CGLS_TOL: f64 = 1e-6;
pub const CGLS_MAX_ITERS: usize = 200;
pub const FISTA_TOL: f64 = 1e-8;
pub const FISTA_MAX_ITERS: usize = 500;
pub const ADMM_RHO: f64 = 1.0;
pub const ADMM_TOL: f64 = 1e-6;
pub const ADMM_MAX_ITERS: usize = 500;

/// Problems up to this dimension use a cached dense factorization when the
/// backend is left on automatic.
pub const DENSE_AUTO_MAX_DIM: usize = 256;

pub fn solve_ls(ls: &StackedLeastSquares, x0: &[f64], solver: &LsSolver) -> Result<(Vec<f64>, SolveReport)> {
    match solver {
        LsSolver::Cgls { tol, max_iters } => cgls(ls, x0, *tol, *max_iters),
        LsSolver::Dense(f) => f.solve(ls),
    }
}

/// Largest eigenvalue of the normal operator by power iteration.
pub fn normal_lipschitz(ls: &StackedLeastSquares, iters: usize) -> f64 {
    let n = ls.dim;
    // deterministic start with components on every eigenvector in general position
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 1.618_033_988_75).sin()).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|a| *a /= nv);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = ls.normal_apply(&v);
        lambda = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|a| a / nw).collect();
    }
    lambda.max(norm2(&ls.normal_apply(&v)))
}

#[derive(Clone, Copy, Debug)]
pub struct FistaOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Overrides the power-iteration bound on the gradient's Lipschitz constant.
    pub lipschitz: Option<f64>,
}

impl Default for FistaOptions {
    fn default() -> Self {
        FistaOptions {
            max_iters: FISTA_MAX_ITERS,
            tol: FISTA_TOL,
            lipschitz: None,
        }
    }
}

/// FISTA with function-value restarts for
/// `1/2 sum w |A x - b|^2 + strength f(x)`.
pub fn fista(
    ls: &StackedLeastSquares,
    f: &ProxFn,
    strength: f64,
    x0: &[f64],
    opts: &FistaOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    check_dim("fista initial point", ls.dim, x0.len())?;
    let scale = if f.is_indicator() { 1.0 } else { strength };
    let mut lip = opts.lipschitz.unwrap_or_else(|| normal_lipschitz(ls, 20));
    if !(lip > 0.0) {
        lip = 1.0;
    }
    let has_eval = f.has_eval();
    let objective = |x: &[f64]| -> Result<f64> {
        let r = if scale == 0.0 { 0.0 } else { scale * f.eval(x)? };
        Ok(ls.objective(x) + if f.is_indicator() { 0.0 } else { r })
    };
    let step_from = |y: &[f64], tau: f64| -> Result<Vec<f64>> {
        let g = ls.gradient(y);
        let z: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - tau * b).collect();
        if scale == 0.0 && !f.is_indicator() {
            Ok(z)
        } else {
            prox(f, &z, if f.is_indicator() { 1.0 } else { tau * scale })
        }
    };
    let mut tau = 0.9 / lip;
    // start from a feasible point so objectives are finite
    let mut x = if f.is_indicator() { prox(f, x0, 1.0)? } else { x0.to_vec() };
    let mut fx = if has_eval { objective(&x)? } else { f64::NAN };
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let mut x_new = step_from(&y, tau)?;
        if has_eval {
            let mut f_new = objective(&x_new)?;
            if f_new > fx {
                // restart from x with a plain proximal gradient step, shrinking
                // the step until it descends
                t = 1.0;
                loop {
                    x_new = step_from(&x, tau)?;
                    f_new = objective(&x_new)?;
                    if f_new <= fx + 1e-14 * (1.0 + fx.abs()) || tau < 1e-12 / lip {
                        break;
                    }
                    tau *= 0.5;
                }
            }
            fx = f_new.min(fx);
        }
        change = max_abs_diff(&x_new, &x);
        if !change.is_finite() {
            return Err(Error::numerical("fista diverged", change));
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        y = x_new.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = x_new;
        t = t_new;
        if change <= opts.tol {
            break;
        }
    }
    let objective_value = if has_eval { objective(&x)? } else { ls.objective(&x) };
    Ok((
        x,
        SolveReport {
            iterations,
            residual: change,
            converged: change <= opts.tol,
            objective: objective_value,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerBackend {
    /// Dense factorization when the dimension is at most [`DENSE_AUTO_MAX_DIM`].
    Auto,
    Cgls,
    Dense,
}

#[derive(Clone, Copy, Debug)]
pub struct AdmmOptions {
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub inner: InnerBackend,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Residual balancing: rescale `rho` when one residual dominates.
    pub adaptive_rho: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            rho: ADMM_RHO,
            max_iters: ADMM_MAX_ITERS,
            tol: ADMM_TOL,
            inner: InnerBackend::Auto,
            inner_tol: 1e-10,
            inner_max_iters: 1000,
            adaptive_rho: true,
        }
    }
}

/// Consensus ADMM for `1/2 sum w |A x - b|^2 + sum_i s_i f_i(L_i x)` with
/// splits `z_i = L_i x`. Stops when primal and dual residuals (max norm) are
/// below `tol`.
pub fn admm(ls: &StackedLeastSquares, terms: &[ProxTerm], x0: &[f64], opts: &AdmmOptions) -> Result<(Vec<f64>, SolveReport)> {
    check_dim("admm initial point", ls.dim, x0.len())?;
    let cgls_solver = LsSolver::Cgls {
        tol: opts.inner_tol,
        max_iters: opts.inner_max_iters,
    };
    if terms.is_empty() {
        let solver = match opts.inner {
            InnerBackend::Dense => LsSolver::Dense(Arc::new(NormalFactor::build(ls)?)),
            InnerBackend::Auto if ls.dim <= DENSE_AUTO_MAX_DIM => LsSolver::Dense(Arc::new(NormalFactor::build(ls)?)),
            _ => cgls_solver,
        };
        return solve_ls(ls, x0, &solver);
    }
    for t in terms {
        check_dim("admm regularizer operator", ls.dim, t.op.domain_dim())?;
    }
    if !(opts.rho > 0.0) {
        return Err(Error::invalid("admm penalty must be positive"));
    }
    let dense = match opts.inner {
        InnerBackend::Dense => true,
        InnerBackend::Auto => ls.dim <= DENSE_AUTO_MAX_DIM,
        InnerBackend::Cgls => false,
    };
    let mut rho = opts.rho;
    let mut x = x0.to_vec();
    let mut z: Vec<Vec<f64>> = terms.iter().map(|t| t.op.apply_unchecked(&x)).collect();
    let mut u: Vec<Vec<f64>> = z.iter().map(|zi| vec![0.0; zi.len()]).collect();
    let build_ls = |z: &[Vec<f64>], u: &[Vec<f64>], rho: f64| {
        let extra: Vec<LsBlock> = terms
            .iter()
            .zip(z.iter().zip(u))
            .map(|(t, (zi, ui))| LsBlock::new(t.op.clone(), crate::linalg::sub(zi, ui), rho))
            .collect();
        ls.with_extra(&extra)
    };
    let mut factor: Option<Arc<NormalFactor>> = None;
    let mut iterations = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    while iterations < opts.max_iters {
        iterations += 1;
        let sub = build_ls(&z, &u, rho);
        let solver = if dense {
            if factor.is_none() {
                factor = Some(Arc::new(NormalFactor::build(&sub)?));
            }
            LsSolver::Dense(factor.clone().unwrap())
        } else {
            cgls_solver.clone()
        };
        x = solve_ls(&sub, &x, &solver)?.0;
        primal = 0.0;
        dual = 0.0;
        let mut dual_vec = vec![0.0; ls.dim];
        for (k, t) in terms.iter().enumerate() {
            let lx = t.op.apply_unchecked(&x);
            let v: Vec<f64> = lx.iter().zip(&u[k]).map(|(a, b)| a + b).collect();
            let alpha = if t.f.is_indicator() { 1.0 } else { t.strength / rho };
            let z_new = if alpha == 0.0 { v } else { prox(&t.f, &v, alpha)? };
            let dz = crate::linalg::sub(&z_new, &z[k]);
            crate::linalg::axpy(rho, &t.op.adjoint_unchecked(&dz), &mut dual_vec);
            for i in 0..lx.len() {
                u[k][i] += lx[i] - z_new[i];
                primal = primal.max((lx[i] - z_new[i]).abs());
            }
            z[k] = z_new;
        }
        dual = dual.max(crate::linalg::norm_inf(&dual_vec));
        if !(primal.is_finite() && dual.is_finite()) {
            return Err(Error::numerical("admm diverged", primal));
        }
        if primal <= opts.tol && dual <= opts.tol {
            break;
        }
        if opts.adaptive_rho && iterations % 10 == 0 {
            let scale = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                u.iter_mut().flatten().for_each(|v| *v /= scale);
                factor = None;
            }
        }
    }
    let objective = ls.objective(&x)
        + terms
            .iter()
            .map(|t| t.value(&x).unwrap_or(f64::INFINITY))
            .filter(|v| v.is_finite())
            .sum::<f64>();
    Ok((
        x,
        SolveReport {
            iterations,
            residual: primal.max(dual),
            converged: primal <= opts.tol && dual <= opts.tol,
            objective,
        },
    ))
}

/// The split variables of an ADMM solution are the projections/proxes of
/// `L_i x`; for indicator terms the caller usually wants the exactly feasible
/// point, which this returns when every term uses the identity operator.
pub fn polish_feasible(terms: &[ProxTerm], x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    for t in terms {
        if t.f.is_indicator() && t.op.is_identity() {
            out = prox(&t.f, &out, 1.0)?;
        }
    }
    Ok(out)
}
