//! Fast self-checks run by `bayesinv check`.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use bayesinv_core::distributions::standard_normal_vec;
use bayesinv_core::error::Result;
use bayesinv_core::linalg::{dot, sub, DenseCholesky, DenseMatrix};
use bayesinv_core::operators::{
    adjoint_mismatch, dense_from_matrix, finite_difference, gaussian_convolution_1d, mask_operator,
    poisson_1d_source_operator, poisson_2d_boundary_operator, Boundary, CholeskyWhitening, Composition,
    IdentityOperator, ScaledOperator, SharedOperator,
};
use bayesinv_core::problems::simplest_linear;
use bayesinv_core::proximal::{moreau_drift, prox, smoothed_potential, soft_threshold, ProxFn};
use bayesinv_core::samplers::{chain_rng, linear_rto_sample, ChainConfig, RtoOptions};
use bayesinv_core::stats::{covariance, summarize};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Allowed amount by which a perturbed candidate may beat a computed prox.
    pub prox_slack: f64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            prox_slack: 1e-8,
            seed: 1,
        }
    }
}

/// Every linear operator of the library at a small size, with a label.
pub fn operator_zoo() -> Result<Vec<(String, SharedOperator)>> {
    let mut rng = chain_rng(7, 0);
    let dense = DenseMatrix::new(4, 3, standard_normal_vec(&mut rng, 12))?;
    let mut spd = DenseMatrix::identity(3);
    spd.set(0, 1, 0.3);
    spd.set(1, 0, 0.3);
    let chol = Arc::new(DenseCholesky::factor(&spd)?);
    let conv: SharedOperator = Arc::new(gaussian_convolution_1d(32, 3.0)?);
    let zoo: Vec<(String, SharedOperator)> = vec![
        ("dense".into(), Arc::new(dense_from_matrix(4, 3, dense.data().to_vec())?)),
        ("identity".into(), Arc::new(IdentityOperator { dim: 5 })),
        (
            "scaled".into(),
            Arc::new(ScaledOperator {
                inner: conv.clone(),
                scale: -2.5,
            }),
        ),
        ("convolution".into(), conv.clone()),
        (
            "composition".into(),
            Arc::new(Composition::new(Arc::new(mask_operator(32, vec![0, 3, 9, 31])?), conv)?),
        ),
        ("mask".into(), Arc::new(mask_operator(10, vec![1, 4, 5])?)),
        ("fd-1d-zero".into(), Arc::new(finite_difference(&[9], Boundary::Zero)?)),
        ("fd-1d-neumann".into(), Arc::new(finite_difference(&[9], Boundary::Neumann)?)),
        ("fd-2d-zero".into(), Arc::new(finite_difference(&[4, 6], Boundary::Zero)?)),
        ("fd-2d-neumann".into(), Arc::new(finite_difference(&[5, 3], Boundary::Neumann)?)),
        ("cholesky-whitening".into(), Arc::new(CholeskyWhitening::new(chol))),
        ("poisson-1d-source".into(), Arc::new(poisson_1d_source_operator(16)?)),
        ("poisson-2d-boundary".into(), Arc::new(poisson_2d_boundary_operator(9)?)),
    ];
    Ok(zoo)
}

/// Worst relative dot-test mismatch over `trials` random pairs per operator.
pub fn dot_tests(trials: usize, seed: u64) -> Result<Vec<(String, f64)>> {
    let mut rng = chain_rng(seed, 11);
    let mut out = Vec::new();
    for (name, op) in operator_zoo()? {
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let x = standard_normal_vec(&mut rng, op.domain_dim());
            let y = standard_normal_vec(&mut rng, op.range_dim());
            worst = worst.max(adjoint_mismatch(op.as_ref(), &x, &y)?);
        }
        out.push((name, worst));
    }
    Ok(out)
}

fn prox_objective(f: &ProxFn, x: &[f64], alpha: f64, z: &[f64]) -> Result<f64> {
    let r = sub(x, z);
    Ok(0.5 * dot(&r, &r) + alpha * f.eval(z)?)
}

/// Largest amount by which any perturbed candidate beats the computed prox,
/// over `points` random `(x, alpha)` and `candidates` perturbations each.
pub fn prox_optimality_gap(f: &ProxFn, dim: usize, points: usize, candidates: usize, seed: u64) -> Result<f64> {
    let mut rng = chain_rng(seed, 12);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..points {
        let x: Vec<f64> = standard_normal_vec(&mut rng, dim).iter().map(|v| 2.0 * v).collect();
        let alpha = 10f64.powf(rng.random_range(-2.0..1.0));
        let p = prox(f, &x, alpha)?;
        let best = prox_objective(f, &x, alpha, &p)?;
        for k in 0..candidates {
            let eps = [1e-1, 1e-3, 1e-6][k % 3];
            let mut z = p.clone();
            for (zi, e) in z.iter_mut().zip(standard_normal_vec(&mut rng, dim)) {
                *zi += eps * e;
            }
            let val = prox_objective(f, &x, alpha, &z)?;
            if val.is_finite() {
                worst = worst.max(best - val);
            }
        }
    }
    Ok(worst)
}

/// Worst error of the closed-form cases: soft thresholding and projections.
pub fn prox_closed_form_error(points: usize, seed: u64) -> Result<f64> {
    let mut rng = chain_rng(seed, 13);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = standard_normal_vec(&mut rng, 6);
        let alpha = rng.random_range(0.01..2.0);
        let cases: [(ProxFn, Vec<f64>); 3] = [
            (ProxFn::L1, x.iter().map(|v| soft_threshold(*v, alpha)).collect()),
            (ProxFn::NonNeg, x.iter().map(|v| v.max(0.0)).collect()),
            (
                ProxFn::Box {
                    lower: -0.5,
                    upper: 0.7,
                },
                x.iter().map(|v| v.clamp(-0.5, 0.7)).collect(),
            ),
        ];
        for (f, expected) in cases {
            let p = prox(&f, &x, alpha)?;
            worst = worst.max(p.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    Ok(worst)
}

/// Worst relative error between central differences of the smoothed
/// potential and `(x - prox(x)) / alpha`.
pub fn moreau_gradient_error(f: &ProxFn, alpha: f64, points: usize, seed: u64) -> Result<f64> {
    let mut rng = chain_rng(seed, 14);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x: Vec<f64> = standard_normal_vec(&mut rng, 3).iter().map(|v| 2.0 * v).collect();
        let drift = moreau_drift(f, &x, alpha)?;
        let mut fd = vec![0.0; x.len()];
        for i in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += h;
            b[i] -= h;
            fd[i] = (smoothed_potential(f, &a, alpha)? - smoothed_potential(f, &b, alpha)?) / (2.0 * h);
        }
        // gradient of the potential is minus the drift
        let err: f64 = fd.iter().zip(&drift).map(|(g, d)| (g + d).powi(2)).sum::<f64>().sqrt();
        let scale = drift.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(err / scale);
    }
    Ok(worst)
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let t = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        name,
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

/// The fast subset: dot tests, prox oracles, Moreau gradients and the
/// conjugate-Gaussian moment check.
pub fn run_checks(opts: &CheckOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(timed("dot-tests", || {
        let r = dot_tests(5, opts.seed)?;
        let (name, worst) = r
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .unwrap_or_default();
        Ok((worst <= 1e-10, format!("{} operators, worst {worst:.2e} ({name})", r.len())))
    }));
    out.push(timed("prox-oracles", || {
        let fns = [
            (ProxFn::L1, 4),
            (ProxFn::NonNeg, 4),
            (
                ProxFn::Box {
                    lower: -1.0,
                    upper: 1.0,
                },
                4,
            ),
            (ProxFn::Tv1d, 2),
            (ProxFn::Increasing, 3),
        ];
        let mut worst: f64 = f64::NEG_INFINITY;
        let mut worst_name = String::new();
        for (f, dim) in fns {
            let gap = prox_optimality_gap(&f, dim, 20, 200, opts.seed)?;
            if gap > worst {
                worst = gap;
                worst_name = f.name();
            }
        }
        let closed = prox_closed_form_error(20, opts.seed)?;
        Ok((
            worst <= opts.prox_slack && closed <= 1e-12,
            format!("max candidate gain {worst:.2e} ({worst_name}), slack {:.0e}; closed-form error {closed:.1e}", opts.prox_slack),
        ))
    }));
    out.push(timed("moreau-gradient", || {
        let mut worst = 0.0f64;
        for f in [ProxFn::L1, ProxFn::NonNeg] {
            for alpha in [0.1, 1.0] {
                worst = worst.max(moreau_gradient_error(&f, alpha, 20, opts.seed)?);
            }
        }
        Ok((worst <= 1e-3, format!("worst relative error {worst:.2e}")))
    }));
    out.push(timed("conjugate-gaussian", || {
        let p = simplest_linear()?;
        let post = p.posterior("gaussian")?;
        let s = linear_rto_sample(&post, &ChainConfig::new(10_000, opts.seed), &RtoOptions::default())?;
        let sm = summarize(&s, 0.95)?;
        let c = covariance(&s)?;
        let exact = [[5.025, -4.975], [-4.975, 5.025]];
        let mean_ok = sm.mean.iter().all(|m| (m - 1.50935).abs() <= 0.05);
        let mut cov_err = 0.0f64;
        for (i, row) in exact.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                cov_err = cov_err.max((c.get(i, j) - e).abs() / e.abs());
            }
        }
        Ok((
            mean_ok && cov_err <= 0.1,
            format!("mean ({:.4}, {:.4}), worst covariance error {:.1}%", sm.mean[0], sm.mean[1], 100.0 * cov_err),
        ))
    }));
    out
}

pub fn format_table(results: &[CheckResult]) -> String {
    let mut s = String::new();
    for r in results {
        s.push_str(&format!(
            "{:<20} {:<4} {:>7.2}s  {}\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        ));
    }
    s
}
