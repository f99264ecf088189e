//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.
#![allow(clippy::needless_range_loop)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use bayesinv::checks::{dot_tests, moreau_gradient_error, prox_closed_form_error, prox_optimality_gap, CheckOptions};
use bayesinv::config::RunConfig;
use bayesinv::runner::{cmd_check, cmd_run, EXIT_OK};
use bayesinv_core::distributions::{standard_normal_vec, unbounded_uniform};
use bayesinv_core::geometry::Space;
use bayesinv_core::implicit::{restoration_prior, smoothed_prior, L1Restorator, RegBase, RegPreset, RegularizedGaussian};
use bayesinv_core::operators::{
    poisson_1d_source_operator, poisson_2d_conductivity_model, ForwardModel, IdentityOperator, LinearOperator,
    NonlinearModel, SharedOperator,
};
use bayesinv_core::posterior::{condition, gamma_noise_update, Likelihood, Noise, Posterior, Prior};
use bayesinv_core::problems::{build, simplest_linear, zero_filled, ProblemOptions};
use bayesinv_core::proximal::{smoothed_potential, ProxFn};
use bayesinv_core::samplers::{
    chain_rng, linear_rto_sample, mh_sample, myula_sample, rlrto_sample, ula_sample, ChainConfig, RlrtoOptions,
    RtoOptions, SampleSet, UlaOptions,
};
use bayesinv_core::stats::{batch_means_se, covariance, summarize};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Posterior mean and covariance of `y = A x + e`, `e ~ N(0, s2 I)`,
/// `x ~ N(0, p2 I)` for a 1x2 matrix `A`, by explicit 2x2 inversion.
fn conjugate_2d(a: [f64; 2], y: f64, s2: f64, p2: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let h = [
        [a[0] * a[0] / s2 + 1.0 / p2, a[0] * a[1] / s2],
        [a[1] * a[0] / s2, a[1] * a[1] / s2 + 1.0 / p2],
    ];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let c = [[h[1][1] / det, -h[0][1] / det], [-h[1][0] / det, h[0][0] / det]];
    let b = [a[0] * y / s2, a[1] * y / s2];
    ([c[0][0] * b[0] + c[0][1] * b[1], c[1][0] * b[0] + c[1][1] * b[1]], c)
}

fn linear_oracle() -> Result<([f64; 2], [[f64; 2]; 2]), String> {
    let p = simplest_linear().map_err(err)?;
    let op = p.model.as_linear().ok_or("simplest-linear is not linear")?;
    let a = [op.apply(&[1.0, 0.0]).map_err(err)?[0], op.apply(&[0.0, 1.0]).map_err(err)?[0]];
    Ok(conjugate_2d(a, p.y_obs[0], p.noise_std * p.noise_std, 10.0))
}

fn c1() -> Outcome {
    let t = Instant::now();
    let (m, c) = linear_oracle()?;
    let post = simplest_linear().and_then(|p| p.posterior("gaussian")).map_err(err)?;
    let s = linear_rto_sample(&post, &ChainConfig::new(10_000, 1), &RtoOptions::default()).map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let sm = summarize(&s, 0.95).map_err(err)?;
    let cov = covariance(&s).map_err(err)?;
    let stated_ok = (m[0] - 1.50935).abs() < 1e-4 && (c[0][0] - 5.025).abs() < 1e-3 && (c[0][1] + 4.975).abs() < 1e-3;
    let mean_ok = sm.mean.iter().all(|v| (v - m[0]).abs() <= 0.05);
    let mut cov_err = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            cov_err = cov_err.max((cov.get(i, j) - c[i][j]).abs() / c[i][j].abs());
        }
    }
    Ok((
        stated_ok && mean_ok && cov_err <= 0.1 && secs < 5.0,
        format!(
            "oracle mean {:.5}, sample mean ({:.4}, {:.4}), worst covariance error {:.1}%, {secs:.2}s",
            m[0],
            sm.mean[0],
            sm.mean[1],
            100.0 * cov_err
        ),
    ))
}

fn c2() -> Outcome {
    let (m, _) = linear_oracle()?;
    let post = simplest_linear().and_then(|p| p.posterior("gaussian")).map_err(err)?;
    let mh_cfg = ChainConfig {
        burn_in: 1000,
        ..ChainConfig::new(11_000, 2)
    };
    let mh = mh_sample(&post, &mh_cfg, 0.5).map_err(err)?;
    let ula_cfg = ChainConfig {
        burn_in: 5000,
        ..ChainConfig::new(105_000, 3)
    };
    let ula = ula_sample(&post, &ula_cfg, &UlaOptions::new(0.01)).map_err(err)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, s) in [("mh", &mh), ("ula", &ula)] {
        for j in 0..2 {
            let col = s.column(j);
            let se = batch_means_se(&col, 50).map_err(err)?;
            let z = (mean(&col) - m[j]).abs() / se;
            ok &= z <= 3.0;
            detail.push(format!("{name} x{j} {:.4} ({z:.1} se)", mean(&col)));
        }
    }
    Ok((ok, format!("oracle {:.5}; {}", m[0], detail.join(", "))))
}

fn standard_normal_posterior() -> Result<Posterior, String> {
    let op: SharedOperator = Arc::new(IdentityOperator { dim: 1 });
    let lik = Likelihood::new(ForwardModel::Linear(op), Noise::scalar(1.0).map_err(err)?, vec![0.0]).map_err(err)?;
    condition(lik, Prior::Explicit(Arc::new(unbounded_uniform(1).map_err(err)?)), None).map_err(err)
}

fn c3() -> Outcome {
    let t = Instant::now();
    let post = standard_normal_posterior()?;
    let delta = 0.1;
    let cfg = ChainConfig {
        burn_in: 1000,
        ..ChainConfig::new(1_001_000, 4)
    };
    let s = ula_sample(&post, &cfg, &UlaOptions::new(delta)).map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let v = variance(&s.column(0));
    // stationary variance of x' = (1 - delta) x + sqrt(2 delta) xi
    let phi = 1.0 - delta;
    let oracle = 2.0 * delta / (1.0 - phi * phi);
    Ok((
        (1.02..=1.08).contains(&v) && secs < 10.0,
        format!("variance {v:.4} (AR(1) value {oracle:.4}), {secs:.2}s"),
    ))
}

fn c4() -> Outcome {
    let cases = [
        (ProxFn::L1, 3),
        (ProxFn::NonNeg, 3),
        (ProxFn::Box { lower: -1.0, upper: 1.0 }, 3),
        (ProxFn::Tv1d, 2),
        (ProxFn::Increasing, 2),
        (ProxFn::Increasing, 3),
        (ProxFn::Increasing, 4),
    ];
    let mut worst = f64::NEG_INFINITY;
    let mut worst_name = String::new();
    for (k, (f, dim)) in cases.iter().enumerate() {
        let gap = prox_optimality_gap(f, *dim, 100, 1000, 40 + k as u64).map_err(err)?;
        if gap > worst {
            worst = gap;
            worst_name = format!("{} (dim {dim})", f.name());
        }
    }
    let closed = prox_closed_form_error(100, 5).map_err(err)?;
    Ok((
        worst <= 1e-8 && closed <= 1e-12,
        format!("max candidate gain {worst:.2e} at {worst_name}; closed-form error {closed:.1e}"),
    ))
}

fn c5() -> Outcome {
    let mut worst = 0.0f64;
    for f in [ProxFn::L1, ProxFn::NonNeg] {
        for alpha in [0.1, 1.0] {
            worst = worst.max(moreau_gradient_error(&f, alpha, 100, 6).map_err(err)?);
        }
    }
    Ok((worst <= 1e-3, format!("worst relative error {worst:.2e}")))
}

/// `Phi(z)` by composite Simpson integration of the normal density.
fn normal_cdf(z: f64) -> f64 {
    let (a, n) = (-12.0, 200_000);
    let h = (z - a) / n as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(a) + pdf(z);
    for i in 1..n {
        s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn c6() -> Outcome {
    let op: SharedOperator = Arc::new(IdentityOperator { dim: 1 });
    let lik = Likelihood::new(ForwardModel::Linear(op), Noise::scalar(1.0).map_err(err)?, vec![-1.0]).map_err(err)?;
    let prior = RegularizedGaussian::from_presets(
        RegBase::UnboundedUniform { dim: 1 },
        Some(RegPreset::NonNegativity),
        None,
        Space::discrete(1),
    )
    .map_err(err)?;
    let post = condition(lik, Prior::Regularized(prior), None).map_err(err)?;
    let s = rlrto_sample(&post, &ChainConfig::new(10_000, 7), &RlrtoOptions::default()).map_err(err)?;
    let col = s.column(0);
    let zeros = col.iter().filter(|v| **v == 0.0).count() as f64 / col.len() as f64;
    let negative = col.iter().filter(|v| **v < 0.0).count();
    Ok((
        (0.82..=0.86).contains(&zeros) && negative == 0,
        format!("zero fraction {zeros:.4} (Phi(1) = {:.4}), negative draws {negative}", normal_cdf(1.0)),
    ))
}

fn c7() -> Outcome {
    let p = build("deconvolution-1d", &ProblemOptions::default()).map_err(err)?;
    let post = p.posterior("monotone").map_err(err)?;
    let s = rlrto_sample(&post, &ChainConfig::new(500, 8), &RlrtoOptions::default()).map_err(err)?;
    let worst = s
        .rows()
        .flat_map(|r| r.windows(2).map(|w| w[0] - w[1]))
        .fold(0.0f64, f64::max);
    let steps = s
        .rows()
        .map(|r| r.windows(2).filter(|w| w[1] - w[0] > 1e-3).count())
        .sum::<usize>() as f64
        / s.len() as f64;
    Ok((
        worst <= 1e-8 && s.len() == 500,
        format!("{} draws, worst decrease {worst:.2e}, {steps:.1} rises > 1e-3 per draw", s.len()),
    ))
}

fn c8() -> Outcome {
    let (y, alpha) = (2.0, 0.5);
    let op: SharedOperator = Arc::new(IdentityOperator { dim: 1 });
    let lik = Likelihood::new(ForwardModel::Linear(op), Noise::scalar(1.0).map_err(err)?, vec![y]).map_err(err)?;
    let inner = restoration_prior(Arc::new(L1Restorator { factor: 1.0 }), Space::discrete(1));
    let prior = Prior::Smoothed(smoothed_prior(inner, alpha).map_err(err)?);
    let post = condition(lik, prior, None).map_err(err)?;
    let (kept, thin) = (100_000, 10);
    let cfg = ChainConfig {
        burn_in: 10_000,
        thin,
        ..ChainConfig::new(10_000 + kept * thin, 9)
    };
    let my = myula_sample(&post, &cfg, 0.01).map_err(err)?.column(0);

    // random-walk MH on exp(-(x - y)^2 / 2 - |.|_alpha(x))
    let logd = |x: f64| -> Result<f64, String> {
        Ok(-0.5 * (x - y) * (x - y) - smoothed_potential(&ProxFn::L1, &[x], alpha).map_err(err)?)
    };
    let mut rng = chain_rng(10, 0);
    let (mut x, mut lx) = (y, logd(y)?);
    let mut mh = Vec::with_capacity(kept);
    for i in 0..10_000 + kept * thin {
        let prop = x + 2.4 * standard_normal_vec(&mut rng, 1)[0];
        let lp = logd(prop)?;
        if rng.random::<f64>().ln() < lp - lx {
            x = prop;
            lx = lp;
        }
        if i >= 10_000 && (i - 10_000) % thin == 0 {
            mh.push(x);
        }
    }
    let (m1, m2) = (mean(&my), mean(&mh));
    let (v1, v2) = (variance(&my), variance(&mh));
    let dm = (m1 - m2).abs() / m2.abs();
    let dv = (v1 - v2).abs() / v2;
    Ok((
        dm <= 0.05 && dv <= 0.05,
        format!("mean myula {m1:.4} / mh {m2:.4} ({:.1}%), variance {v1:.4} / {v2:.4} ({:.1}%)", 100.0 * dm, 100.0 * dv),
    ))
}

/// Posterior mean of `l` under `l^(a-1) e^(-b l) * l^(m/2) e^(-l r2 / 2)` by
/// trapezoidal quadrature in `u = ln l`.
fn quadrature_mean(a: f64, b: f64, m: usize, r2: f64) -> f64 {
    let logp = |u: f64| (a + 0.5 * m as f64) * u - (b + 0.5 * r2) * u.exp();
    let center = ((a + 0.5 * m as f64) / (b + 0.5 * r2)).ln();
    let n = 40_000;
    let (lo, hi) = (center - 20.0, center + 20.0);
    let h = (hi - lo) / n as f64;
    let peak = logp(center);
    let (mut z, mut zl) = (0.0, 0.0);
    for i in 0..=n {
        let u = lo + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let p = (logp(u) - peak).exp();
        z += w * p;
        zl += w * p * u.exp();
    }
    zl / z
}

fn c9() -> Outcome {
    let mut rng = chain_rng(11, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = rng.random_range(0.5..5.0);
        let b = 10f64.powf(rng.random_range(-4.0..1.0));
        let m = rng.random_range(1..200);
        let r2 = 10f64.powf(rng.random_range(-3.0..2.0));
        let (shape, rate) = gamma_noise_update(a, b, m, r2);
        let q = quadrature_mean(a, b, m, r2);
        worst = worst.max((shape / rate - q).abs() / q);
    }
    let p = build("deconvolution-1d", &ProblemOptions::default()).map_err(err)?;
    let true_l = 1.0 / (p.noise_std * p.noise_std);
    let opt = p.prior("hierarchical-gmrf").map_err(err)?;
    let bayesinv_core::problems::PriorSetup::Hierarchical { model, gibbs } = &opt.setup else {
        return Err("hierarchical-gmrf is not hierarchical".into());
    };
    let cfg = ChainConfig {
        burn_in: 100,
        ..ChainConfig::new(1100, 12)
    };
    let s = bayesinv_core::samplers::hybrid_gibbs(model, &cfg, gibbs).map_err(err)?;
    let l_col = s.columns().iter().position(|c| c == "l").ok_or("no l column")?;
    let mut ls = s.column(l_col);
    ls.sort_by(f64::total_cmp);
    let median = ls[ls.len() / 2];
    let ratio = median / true_l;
    Ok((
        worst <= 1e-6 && (0.5..=2.0).contains(&ratio),
        format!("worst relative quadrature gap {worst:.1e}; median l {median:.1} vs true {true_l:.1}"),
    ))
}

fn c10() -> Outcome {
    let dots = dot_tests(5, 13).map_err(err)?;
    let (name, worst_dot) = dots.iter().max_by(|a, b| a.1.total_cmp(&b.1)).cloned().unwrap_or_default();
    let manufactured = |n: usize| -> Result<f64, String> {
        let op = poisson_1d_source_operator(n).map_err(err)?;
        let nodes = op.nodes();
        let pi = std::f64::consts::PI;
        let f: Vec<f64> = nodes.iter().map(|x| pi * pi * (pi * x).sin()).collect();
        let u = op.apply(&f).map_err(err)?;
        Ok(nodes.iter().zip(&u).map(|(x, v)| (v - (pi * x).sin()).abs()).fold(0.0, f64::max))
    };
    let ratio = manufactured(32)? / manufactured(64)?;
    let model = poisson_2d_conductivity_model(8, 1.0).map_err(err)?;
    let mut rng = chain_rng(14, 0);
    let m: Vec<f64> = standard_normal_vec(&mut rng, model.domain_dim()).iter().map(|v| -0.5 + 0.3 * v).collect();
    let v = standard_normal_vec(&mut rng, model.range_dim());
    let g = model.jvp_adjoint(&m, &v).map_err(err)?;
    let phi = |m: &[f64]| -> Result<f64, String> {
        Ok(model.forward(m).map_err(err)?.iter().zip(&v).map(|(a, b)| a * b).sum())
    };
    let h = 1e-6;
    let mut fd = vec![0.0; m.len()];
    for i in 0..m.len() {
        let (mut a, mut b) = (m.clone(), m.clone());
        a[i] += h;
        b[i] -= h;
        fd[i] = (phi(&a)? - phi(&b)?) / (2.0 * h);
    }
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff: Vec<f64> = fd.iter().zip(&g).map(|(a, b)| a - b).collect();
    let grad_err = norm(&diff) / norm(&g);
    Ok((
        worst_dot <= 1e-10 && (3.5..=4.5).contains(&ratio) && grad_err <= 1e-4,
        format!(
            "{} operators, worst dot test {worst_dot:.1e} ({name}); mesh-halving ratio {ratio:.3}; adjoint gradient error {grad_err:.1e}",
            dots.len()
        ),
    ))
}

fn run_problem(dir: &Path, problem: &str, prior: &str, size: Option<usize>, n: usize, burn: usize, thin: usize) -> Result<SampleSet, String> {
    let cfg = RunConfig {
        problem: problem.into(),
        prior: Some(prior.into()),
        n_samples: Some(n),
        burn_in: Some(burn),
        thin: Some(thin),
        size,
        out_dir: Some(dir.join(format!("{problem}-{prior}"))),
        ..RunConfig::default()
    };
    let out = cmd_run(&cfg);
    if out.exit_code != EXIT_OK {
        return Err(format!("{problem}/{prior}: {}", out.message));
    }
    out.samples.ok_or_else(|| "no samples".into())
}

fn ci_width_at(s: &SampleSet, j: usize) -> Result<f64, String> {
    let sm = summarize(s, 0.95).map_err(err)?;
    Ok(sm.ci_hi[j] - sm.ci_lo[j])
}

fn largest_jump(x: &[f64]) -> usize {
    (0..x.len() - 1)
        .max_by(|&a, &b| (x[a + 1] - x[a]).abs().total_cmp(&(x[b + 1] - x[b]).abs()))
        .unwrap_or(0)
}

fn c11() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().map_err(err)?;
    let mut ok = true;
    let mut detail = Vec::new();

    // poisson_1d_source
    let p = build("poisson-1d-source", &ProblemOptions::default()).map_err(err)?;
    let n = p.x_true.len();
    let nonneg = run_problem(dir.path(), "poisson-1d-source", "gmrf-nonneg", None, 1100, 100, 1)?;
    let reference = run_problem(dir.path(), "poisson-1d-source", "gmrf", None, 1100, 100, 1)?;
    let min_draw = nonneg.rows().flat_map(|r| r[..n].iter().copied()).fold(f64::INFINITY, f64::min);
    // midpoint of the longest zero run of the true source
    let (mut best, mut start, mut run) = ((0, 0), 0, 0);
    for (i, v) in p.x_true.iter().enumerate() {
        if *v == 0.0 {
            if run == 0 {
                start = i;
            }
            run += 1;
            if run > best.1 {
                best = (start, run);
            }
        } else {
            run = 0;
        }
    }
    let mid = best.0 + best.1 / 2;
    let (w_nonneg, w_ref) = (ci_width_at(&nonneg, mid)?, ci_width_at(&reference, mid)?);
    ok &= min_draw >= 0.0 && w_nonneg < w_ref;
    detail.push(format!("poisson-1d min draw {min_draw:.1e}, CI width at node {mid} {w_nonneg:.3} vs {w_ref:.3}"));

    // poisson_2d_boundary
    let p = build("poisson-2d-boundary", &ProblemOptions { size: Some(32), ..Default::default() }).map_err(err)?;
    let tv = run_problem(dir.path(), "poisson-2d-boundary", "gmrf-tv", Some(32), 500, 0, 1)?;
    let m = summarize(&tv, 0.95).map_err(err)?.mean;
    let jump = largest_jump(&m);
    let true_jumps: Vec<usize> = (0..p.x_true.len() - 1)
        .filter(|&i| (p.x_true[i + 1] - p.x_true[i]).abs() > 1e-9 * (1.0 + p.x_true[i].abs()))
        .collect();
    let dist = true_jumps.iter().map(|&j| j.abs_diff(jump)).min().unwrap_or(usize::MAX);
    ok &= dist <= 2;
    detail.push(format!("boundary max jump at {jump}, true jumps {true_jumps:?}"));

    // inpainting
    let p = build("inpainting", &ProblemOptions { size: Some(64), ..Default::default() }).map_err(err)?;
    let inp = run_problem(dir.path(), "inpainting", "haar", Some(64), 30_000, 10_000, 100)?;
    let m = summarize(&inp, 0.95).map_err(err)?.mean;
    let zf = zero_filled(&p).map_err(err)?;
    let mse = |x: &[f64]| x.iter().zip(&p.x_true).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
    let (mse_post, mse_zero) = (mse(&m), mse(&zf));
    ok &= mse_post < mse_zero;
    detail.push(format!("inpainting MSE {mse_post:.4} vs zero-filled {mse_zero:.4}"));

    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 900.0;
    Ok((ok, format!("{}; {secs:.0}s", detail.join("; "))))
}

fn c12() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let cfg = RunConfig {
            problem: "simplest-nonlinear".into(),
            prior: Some("tv".into()),
            n_samples: Some(5000),
            out_dir: Some(dir.path().join(name)),
            ..RunConfig::default()
        };
        let out = cmd_run(&cfg);
        if out.exit_code != EXIT_OK {
            return Err(out.message);
        }
        std::fs::read(out.out_dir.join("samples.csv")).map_err(err)
    };
    let (a, b) = (run("a")?, run("b")?);
    let t = Instant::now();
    let (_, check_ok) = cmd_check(&CheckOptions::default());
    let secs = t.elapsed().as_secs_f64();
    Ok((
        a == b && !a.is_empty() && check_ok && secs < 120.0,
        format!("samples.csv identical: {} ({} bytes); check passed: {check_ok} in {secs:.1}s", a == b, a.len()),
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("conjugate-gaussian oracle", c1),
        ("sampler cross-agreement", c2),
        ("ula bias law", c3),
        ("prox oracle suite", c4),
        ("moreau gradient", c5),
        ("rlrto zero-mass law", c6),
        ("monotone deconvolution", c7),
        ("myula vs mh on smoothed target", c8),
        ("gibbs conjugacy", c9),
        ("operator correctness", c10),
        ("desk-scale re-runs", c11),
        ("determinism", c12),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (passed, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} [{:.1}s] {detail}",
            k + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
