//! Proximal operators, projections and Moreau-Yoshida smoothing.
//!
//! `prox(f, x, alpha)` returns `argmin_z 1/2 |x - z|^2 + alpha f(z)`.
//! Indicator functions ignore `alpha`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm1};
use crate::operators::SharedOperator;

pub type ProxClosure = Arc<dyn Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync>;
pub type EvalClosure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ProjectClosure = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Default stopping rule for the iterative proxes.
pub const PROX_TOL: f64 = 1e-8;
pub const PROX_MAX_ITERS: usize = 1000;

#[derive(Clone)]
pub enum ProxFn {
    /// `|x|_1`
    L1,
    /// Anisotropic total variation of a signal.
    Tv1d,
    /// Anisotropic total variation of a row-major image.
    Tv2d { rows: usize, cols: usize },
    NonNeg,
    Box { lower: f64, upper: f64 },
    Increasing,
    Decreasing,
    Convex,
    Concave,
    /// `1/2 |x|^2`
    SquaredNorm,
    /// Indicator of a set given by its Euclidean projection.
    Indicator { name: String, project: ProjectClosure },
    User {
        name: String,
        prox: ProxClosure,
        eval: Option<EvalClosure>,
    },
}

impl fmt::Debug for ProxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Kind tag of a [`ProxFn`], without payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxKind {
    L1,
    Tv1d,
    Tv2d,
    NonNeg,
    Box,
    Increasing,
    Decreasing,
    Convex,
    Concave,
    SquaredNorm,
    IndicatorCustom,
    UserSupplied,
}

impl ProxFn {
    pub fn kind(&self) -> ProxKind {
        match self {
            ProxFn::L1 => ProxKind::L1,
            ProxFn::Tv1d => ProxKind::Tv1d,
            ProxFn::Tv2d { .. } => ProxKind::Tv2d,
            ProxFn::NonNeg => ProxKind::NonNeg,
            ProxFn::Box { .. } => ProxKind::Box,
            ProxFn::Increasing => ProxKind::Increasing,
            ProxFn::Decreasing => ProxKind::Decreasing,
            ProxFn::Convex => ProxKind::Convex,
            ProxFn::Concave => ProxKind::Concave,
            ProxFn::SquaredNorm => ProxKind::SquaredNorm,
            ProxFn::Indicator { .. } => ProxKind::IndicatorCustom,
            ProxFn::User { .. } => ProxKind::UserSupplied,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ProxFn::L1 => "l1".into(),
            ProxFn::Tv1d => "tv-1d".into(),
            ProxFn::Tv2d { rows, cols } => format!("tv-2d({rows}x{cols})"),
            ProxFn::NonNeg => "nonneg".into(),
            ProxFn::Box { lower, upper } => format!("box[{lower}, {upper}]"),
            ProxFn::Increasing => "increasing".into(),
            ProxFn::Decreasing => "decreasing".into(),
            ProxFn::Convex => "convex".into(),
            ProxFn::Concave => "concave".into(),
            ProxFn::SquaredNorm => "squared-norm".into(),
            ProxFn::Indicator { name, .. } | ProxFn::User { name, .. } => name.clone(),
        }
    }

    /// True for indicator functions of closed convex sets.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            ProxFn::NonNeg
                | ProxFn::Box { .. }
                | ProxFn::Increasing
                | ProxFn::Decreasing
                | ProxFn::Convex
                | ProxFn::Concave
                | ProxFn::Indicator { .. }
        )
    }

    pub fn has_eval(&self) -> bool {
        !matches!(self, ProxFn::User { eval: None, .. })
    }

    /// `R(x)`; indicators give 0 on the set (up to rounding) and `+inf` off it.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let tol = 1e-10 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let iter_tol = tol.max(10.0 * PROX_TOL * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        let indicator = |inside: bool| if inside { 0.0 } else { f64::INFINITY };
        Ok(match self {
            ProxFn::L1 => norm1(x),
            ProxFn::Tv1d => x.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
            ProxFn::Tv2d { rows, cols } => {
                check_dim("TV image", rows * cols, x.len())?;
                tv2d_value(x, *rows, *cols)
            }
            ProxFn::SquaredNorm => 0.5 * dot(x, x),
            ProxFn::NonNeg => indicator(x.iter().all(|v| *v >= -tol)),
            ProxFn::Box { lower, upper } => indicator(x.iter().all(|v| *v >= lower - tol && *v <= upper + tol)),
            ProxFn::Increasing => indicator(x.windows(2).all(|w| w[1] >= w[0] - tol)),
            ProxFn::Decreasing => indicator(x.windows(2).all(|w| w[1] <= w[0] + tol)),
            // the projection onto these sets is iterative; accept its tolerance
            ProxFn::Convex => indicator(x.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -iter_tol)),
            ProxFn::Concave => indicator(x.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= iter_tol)),
            ProxFn::Indicator { project, .. } => {
                let p = project(x);
                indicator(crate::linalg::max_abs_diff(&p, x) <= tol)
            }
            ProxFn::User { eval: Some(e), .. } => e(x),
            ProxFn::User { name, .. } => {
                return Err(Error::unsupported(format!("prox function {name} has no evaluator")))
            }
        })
    }

    pub fn prox(&self, x: &[f64], alpha: f64) -> Result<Vec<f64>> {
        prox(self, x, alpha)
    }
}

/// Solves the proximal problem of `alpha f` at `x`.
pub fn prox(f: &ProxFn, x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("prox parameter must be positive, got {alpha}")));
    }
    match f {
        ProxFn::L1 => Ok(x.iter().map(|v| soft_threshold(*v, alpha)).collect()),
        ProxFn::Tv1d => Ok(tv1d_denoise(x, alpha)),
        ProxFn::Tv2d { rows, cols } => {
            check_dim("TV image", rows * cols, x.len())?;
            Ok(tv_denoise_2d(x, *rows, *cols, alpha, PROX_MAX_ITERS, PROX_TOL).0)
        }
        ProxFn::SquaredNorm => Ok(x.iter().map(|v| v / (1.0 + alpha)).collect()),
        ProxFn::NonNeg => Ok(x.iter().map(|v| v.max(0.0)).collect()),
        ProxFn::Box { lower, upper } => {
            if !(lower <= upper) {
                return Err(Error::invalid("box needs lower <= upper"));
            }
            Ok(x.iter().map(|v| v.max(*lower).min(*upper)).collect())
        }
        ProxFn::Increasing => Ok(isotonic_increasing(x)),
        ProxFn::Decreasing => {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            Ok(isotonic_increasing(&neg).into_iter().map(|v| -v).collect())
        }
        ProxFn::Convex => project_convex(x, PROX_TOL, 200_000),
        ProxFn::Concave => {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            Ok(project_convex(&neg, PROX_TOL, 200_000)?.into_iter().map(|v| -v).collect())
        }
        ProxFn::Indicator { project, name } => {
            let p = project(x);
            check_dim_named(name, x.len(), p.len())?;
            Ok(p)
        }
        ProxFn::User { prox, name, .. } => {
            let p = prox(x, alpha)?;
            check_dim_named(name, x.len(), p.len())?;
            Ok(p)
        }
    }
}

fn check_dim_named(name: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} returned length {got}, expected {expected}")))
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `1/2 |x - p|^2 + alpha R(p)` with `p = prox(f, x, alpha)`: the optimal
/// value of the proximal problem.
pub fn moreau_envelope(f: &ProxFn, x: &[f64], alpha: f64) -> Result<f64> {
    if !f.has_eval() {
        return Err(Error::unsupported(format!("{} has no evaluator", f.name())));
    }
    let p = prox(f, x, alpha)?;
    let r = crate::linalg::sub(x, &p);
    let value = f.eval(&p)?;
    Ok(0.5 * dot(&r, &r) + if f.is_indicator() { 0.0 } else { alpha * value })
}

/// The smoothed potential `R_alpha = moreau_envelope / alpha`, whose gradient
/// is `(x - prox(x, alpha)) / alpha`.
pub fn smoothed_potential(f: &ProxFn, x: &[f64], alpha: f64) -> Result<f64> {
    Ok(moreau_envelope(f, x, alpha)? / alpha)
}

/// `(prox(f, x, alpha) - x) / alpha`, the log-density drift of the smoothed prior.
pub fn moreau_drift(f: &ProxFn, x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let p = prox(f, x, alpha)?;
    Ok(p.iter().zip(x).map(|(p, x)| (p - x) / alpha).collect())
}

/// One term `strength * f(L x)` of a composite regularizer.
#[derive(Clone, Debug)]
pub struct ProxTerm {
    pub f: ProxFn,
    pub op: SharedOperator,
    pub strength: f64,
}

impl ProxTerm {
    pub fn new(f: ProxFn, op: SharedOperator, strength: f64) -> Result<Self> {
        if !(strength >= 0.0) || !strength.is_finite() {
            return Err(Error::invalid("regularization strength must be nonnegative"));
        }
        Ok(ProxTerm { f, op, strength })
    }

    /// Effective weight multiplying `f`; indicators are scale free.
    pub fn weight(&self) -> f64 {
        if self.f.is_indicator() {
            1.0
        } else {
            self.strength
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let lx = self.op.apply(x)?;
        let v = self.f.eval(&lx)?;
        Ok(if self.f.is_indicator() { v } else { self.strength * v })
    }
}

/// `R(x) = sum_i strength_i f_i(L_i x)`.
pub type ProxList = Vec<ProxTerm>;

pub fn prox_list_value(terms: &[ProxTerm], x: &[f64]) -> Result<f64> {
    terms.iter().map(|t| t.value(x)).sum()
}

/// Exact prox of `lambda * TV` for a 1-D signal (Condat's direct algorithm).
pub fn tv1d_denoise(input: &[f64], lambda: f64) -> Vec<f64> {
    let width = input.len();
    let mut output = vec![0.0; width];
    if width == 0 {
        return output;
    }
    if lambda <= 0.0 {
        output.copy_from_slice(input);
        return output;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let (mut umin, mut umax) = (lambda, -lambda);
    let (mut vmin, mut vmax) = (input[0] - lambda, input[0] + lambda);
    let twolambda = 2.0 * lambda;
    let minlambda = -lambda;
    loop {
        while k == width - 1 {
            if umin < 0.0 {
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                kminus = k0;
                k = k0;
                vmin = input[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    output[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                kplus = k0;
                k = k0;
                vmax = input[k0];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return output;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < minlambda {
            loop {
                output[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            kplus = k0;
            kminus = k0;
            k = k0;
            vmin = input[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            loop {
                output[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            kplus = k0;
            kminus = k0;
            k = k0;
            vmax = input[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            k += 1;
            if umin >= lambda {
                kminus = k;
                vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
                umin = lambda;
            }
            if umax <= minlambda {
                kplus = k;
                vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
                umax = minlambda;
            }
        }
    }
}

fn tv2d_value(x: &[f64], rows: usize, cols: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let v = x[i * cols + j];
            if j + 1 < cols {
                s += (x[i * cols + j + 1] - v).abs();
            }
            if i + 1 < rows {
                s += (x[(i + 1) * cols + j] - v).abs();
            }
        }
    }
    s
}

/// Prox of `weight * TV_aniso` on a `rows x cols` image by accelerated
/// projected gradient on the dual. Returns the image and the iterations used.
pub fn tv_denoise_2d(image: &[f64], rows: usize, cols: usize, weight: f64, max_iters: usize, tol: f64) -> (Vec<f64>, usize) {
    if weight <= 0.0 || rows * cols <= 1 {
        return (image.to_vec(), 0);
    }
    // dual variables live on horizontal (rows x (cols-1)) and vertical ((rows-1) x cols) edges
    let nh = rows * cols.saturating_sub(1);
    let nv = rows.saturating_sub(1) * cols;
    let primal = |p: &[f64]| -> Vec<f64> {
        // x = image - weight * D^T p
        let mut x = image.to_vec();
        for i in 0..rows {
            for j in 0..cols.saturating_sub(1) {
                let q = weight * p[i * (cols - 1) + j];
                x[i * cols + j] += q;
                x[i * cols + j + 1] -= q;
            }
        }
        for i in 0..rows.saturating_sub(1) {
            for j in 0..cols {
                let q = weight * p[nh + i * cols + j];
                x[i * cols + j] += q;
                x[(i + 1) * cols + j] -= q;
            }
        }
        x
    };
    let step = 1.0 / (8.0 * weight);
    let mut p = vec![0.0; nh + nv];
    let mut q = p.clone();
    let mut t = 1.0f64;
    let mut x_prev = image.to_vec();
    for it in 1..=max_iters {
        let x = primal(&q);
        let mut p_new = q.clone();
        for i in 0..rows {
            for j in 0..cols.saturating_sub(1) {
                let k = i * (cols - 1) + j;
                p_new[k] = (q[k] + step * (x[i * cols + j + 1] - x[i * cols + j])).clamp(-1.0, 1.0);
            }
        }
        for i in 0..rows.saturating_sub(1) {
            for j in 0..cols {
                let k = nh + i * cols + j;
                p_new[k] = (q[k] + step * (x[(i + 1) * cols + j] - x[i * cols + j])).clamp(-1.0, 1.0);
            }
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        for k in 0..p.len() {
            q[k] = p_new[k] + beta * (p_new[k] - p[k]);
        }
        p = p_new;
        t = t_new;
        let x_cur = primal(&p);
        let change = crate::linalg::max_abs_diff(&x_cur, &x_prev);
        x_prev = x_cur;
        if change <= tol {
            return (x_prev, it);
        }
    }
    (x_prev, max_iters)
}

/// Euclidean projection onto non-decreasing sequences (pool adjacent violators).
pub fn isotonic_increasing(x: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut sums: Vec<f64> = Vec::with_capacity(x.len());
    let mut counts: Vec<usize> = Vec::with_capacity(x.len());
    for &v in x {
        sums.push(v);
        counts.push(1);
        while sums.len() >= 2 {
            let n = sums.len();
            if sums[n - 2] / counts[n - 2] as f64 > sums[n - 1] / counts[n - 1] as f64 {
                let (s, c) = (sums.pop().unwrap(), counts.pop().unwrap());
                sums[n - 2] += s;
                counts[n - 2] += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (s, c) in sums.iter().zip(&counts) {
        let m = s / *c as f64;
        out.extend(core::iter::repeat_n(m, *c));
    }
    out
}

/// Projection onto sequences with nonnegative second differences, by
/// accelerated projected gradient on the dual.
pub fn project_convex(x: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 {
        return Ok(x.to_vec());
    }
    let m = n - 2;
    let second = |z: &[f64]| -> Vec<f64> { z.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect() };
    // z = x + C^T lambda
    let primal = |lam: &[f64]| -> Vec<f64> {
        let mut z = x.to_vec();
        for (i, l) in lam.iter().enumerate() {
            z[i] += l;
            z[i + 1] -= 2.0 * l;
            z[i + 2] += l;
        }
        z
    };
    if second(x).iter().all(|v| *v >= 0.0) {
        return Ok(x.to_vec());
    }
    let step = 1.0 / 16.0;
    let mut lam = vec![0.0; m];
    let mut mom = lam.clone();
    let mut t = 1.0f64;
    let mut z_prev = x.to_vec();
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        let cz = second(&primal(&mom));
        let lam_new: Vec<f64> = mom.iter().zip(&cz).map(|(l, g)| (l - step * g).max(0.0)).collect();
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        for k in 0..m {
            mom[k] = lam_new[k] + beta * (lam_new[k] - lam[k]);
        }
        lam = lam_new;
        t = t_new;
        let z = primal(&lam);
        change = crate::linalg::max_abs_diff(&z, &z_prev);
        z_prev = z;
        let infeasible = second(&z_prev).iter().fold(0.0f64, |a, v| a.max(-v));
        if change <= tol && infeasible <= 10.0 * tol {
            return Ok(polish_convex(x, &lam).unwrap_or(z_prev));
        }
    }
    Err(Error::numerical("convex projection did not converge", change))
}

/// Exact projection with the constraints active where `lam > 0` held as
/// equalities. `None` unless the result satisfies the optimality conditions.
fn polish_convex(x: &[f64], lam: &[f64]) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..lam.len()).filter(|&i| lam[i] > 0.0).collect();
    let k = active.len();
    if k == 0 {
        return None;
    }
    // rows of C are [1, -2, 1]; (C C^T)_{ij} depends on |i - j| only
    let gram = [6.0, -4.0, 1.0];
    let mut m = crate::linalg::BandedSpd::zeros(k, 2);
    for a in 0..k {
        for b in a.saturating_sub(2)..=a {
            let d = active[a] - active[b];
            if d <= 2 {
                m.add(a, b, gram[d]);
            }
        }
    }
    let m = m.factor().ok()?;
    let rhs: Vec<f64> = active.iter().map(|&i| -(x[i] - 2.0 * x[i + 1] + x[i + 2])).collect();
    let mu = m.solve(&rhs);
    let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if mu.iter().any(|v| !(*v >= -1e-12 * scale)) {
        return None;
    }
    let mut z = x.to_vec();
    for (&i, l) in active.iter().zip(&mu) {
        z[i] += l;
        z[i + 1] -= 2.0 * l;
        z[i + 2] += l;
    }
    let feasible = z.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-12 * scale);
    feasible.then_some(z)
}

/// Soft-thresholds all detail coefficients of the orthonormal Haar transform
/// of a `rows x cols` image. Sides are padded to powers of two by edge
/// replication and the result is cropped back.
pub fn haar_threshold_denoise(image: &[f64], rows: usize, cols: usize, threshold: f64) -> Result<Vec<f64>> {
    check_dim("Haar image", rows * cols, image.len())?;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("empty image"));
    }
    if !(threshold >= 0.0) {
        return Err(Error::invalid("Haar threshold must be nonnegative"));
    }
    let (pr, pc) = (rows.next_power_of_two(), cols.next_power_of_two());
    let mut a = vec![0.0; pr * pc];
    for i in 0..pr {
        for j in 0..pc {
            a[i * pc + j] = image[i.min(rows - 1) * cols + j.min(cols - 1)];
        }
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut buf = vec![0.0; pr.max(pc)];
    // forward transform, recording the approximation block size per level
    let (mut r, mut c) = (pr, pc);
    let mut levels = Vec::new();
    while r > 1 || c > 1 {
        levels.push((r, c));
        if c > 1 {
            for i in 0..r {
                let row = &mut a[i * pc..i * pc + c];
                for k in 0..c / 2 {
                    buf[k] = s * (row[2 * k] + row[2 * k + 1]);
                    buf[c / 2 + k] = s * (row[2 * k] - row[2 * k + 1]);
                }
                row.copy_from_slice(&buf[..c]);
            }
        }
        if r > 1 {
            for j in 0..c {
                for k in 0..r / 2 {
                    let (u, v) = (a[2 * k * pc + j], a[(2 * k + 1) * pc + j]);
                    buf[k] = s * (u + v);
                    buf[r / 2 + k] = s * (u - v);
                }
                for k in 0..r {
                    a[k * pc + j] = buf[k];
                }
            }
        }
        r = r.div_ceil(2);
        c = c.div_ceil(2);
    }
    // everything except the coarsest coefficient is a detail
    for (k, v) in a.iter_mut().enumerate().skip(1) {
        let _ = k;
        *v = soft_threshold(*v, threshold);
    }
    for &(r, c) in levels.iter().rev() {
        if r > 1 {
            for j in 0..c {
                for k in 0..r / 2 {
                    let (u, v) = (a[k * pc + j], a[(r / 2 + k) * pc + j]);
                    buf[2 * k] = s * (u + v);
                    buf[2 * k + 1] = s * (u - v);
                }
                for k in 0..r {
                    a[k * pc + j] = buf[k];
                }
            }
        }
        if c > 1 {
            for i in 0..r {
                let row = &mut a[i * pc..i * pc + c];
                for k in 0..c / 2 {
                    buf[2 * k] = s * (row[k] + row[c / 2 + k]);
                    buf[2 * k + 1] = s * (row[k] - row[c / 2 + k]);
                }
                row.copy_from_slice(&buf[..c]);
            }
        }
    }
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        out.extend_from_slice(&a[i * pc..i * pc + cols]);
    }
    Ok(out)
}
