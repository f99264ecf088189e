use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use super::{chain_rng, ChainConfig, Recorder, SampleSet};
use crate::distributions::standard_normal_vec;
use crate::error::{Error, Result};
use crate::posterior::{Posterior, Prior};
use crate::proximal::prox;

/// Random-walk Metropolis-Hastings with isotropic Gaussian proposals of
/// standard deviation `scale`.
pub fn mh_sample(post: &Posterior, cfg: &ChainConfig, scale: f64) -> Result<SampleSet> {
    post.capabilities().require("logd")?;
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::invalid("MH scale must be a nonnegative number"));
    }
    let n = post.dim();
    let mut rec = Recorder::new(cfg, n, "mh", Some(post))?;
    rec.set.meta.params.push(("scale".into(), format!("{scale}")));
    let mut rng = chain_rng(cfg.seed, cfg.chain);
    let mut x = cfg.start(n)?;
    let mut lp = post.logd(&x)?;
    if !(lp > f64::NEG_INFINITY) || lp.is_nan() {
        return Err(Error::invalid("initial point has zero posterior density"));
    }
    let mut accepted = 0usize;
    for i in 0..cfg.n_samples {
        let z = standard_normal_vec(&mut rng, n);
        let prop: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + scale * b).collect();
        let u: f64 = rng.random();
        let lp_prop = match post.logd(&prop) {
            Ok(v) => v,
            Err(e) => return Ok(rec.fail(i, e.to_string(), &x)),
        };
        // -inf proposals are rejected because ln(u) > -inf
        if lp_prop.is_finite() && u.ln() < lp_prop - lp {
            x = prop;
            lp = lp_prop;
            accepted += 1;
        }
        rec.offer(i, &x);
    }
    rec.set.meta.acceptance_rate = Some(accepted as f64 / cfg.n_samples as f64);
    Ok(rec.finish())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UlaOptions {
    pub step: f64,
    /// `false` turns the chain into plain gradient ascent (testing aid).
    pub inject_noise: bool,
}

impl UlaOptions {
    pub fn new(step: f64) -> Self {
        UlaOptions {
            step,
            inject_noise: true,
        }
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid("Langevin step size must be positive"));
    }
    Ok(())
}

fn langevin_chain(post: &Posterior, cfg: &ChainConfig, opts: &UlaOptions, id: &str) -> Result<SampleSet> {
    check_step(opts.step)?;
    let post = post.for_chain()?;
    let n = post.dim();
    let mut rec = Recorder::new(cfg, n, id, Some(&post))?;
    rec.set.meta.params.push(("step".into(), format!("{}", opts.step)));
    if let Prior::Smoothed(s) = post.prior() {
        rec.set.meta.restorator = Some(s.inner.id());
        rec.set.meta.params.push(("smoothing_strength".into(), format!("{}", s.alpha)));
    }
    let mut rng = chain_rng(cfg.seed, cfg.chain);
    let mut x = cfg.start(n)?;
    let noise_scale = (2.0 * opts.step).sqrt();
    for i in 0..cfg.n_samples {
        let g = match post.grad(&x) {
            Ok(g) if g.iter().all(|v| v.is_finite()) => g,
            Ok(_) => return Ok(rec.fail(i, "non-finite gradient".into(), &x)),
            Err(e @ (Error::MissingCapability { .. } | Error::DimensionMismatch { .. })) => return Err(e),
            Err(e) => return Ok(rec.fail(i, e.to_string(), &x)),
        };
        let z = standard_normal_vec(&mut rng, n);
        for k in 0..n {
            x[k] += opts.step * g[k];
            if opts.inject_noise {
                x[k] += noise_scale * z[k];
            }
        }
        rec.offer(i, &x);
    }
    Ok(rec.finish())
}

/// Unadjusted Langevin: `x += step grad(x) + sqrt(2 step) z`.
pub fn ula_sample(post: &Posterior, cfg: &ChainConfig, opts: &UlaOptions) -> Result<SampleSet> {
    post.capabilities().require("grad")?;
    langevin_chain(post, cfg, opts, "ula")
}

/// ULA on a smoothed restoration prior. The prior drift is
/// `(D_alpha(x) - x) / alpha`; with a non-proximal restorator this is PnP-ULA.
pub fn myula_sample(post: &Posterior, cfg: &ChainConfig, step: f64) -> Result<SampleSet> {
    if !matches!(post.prior(), Prior::Smoothed(_)) {
        return Err(Error::MissingCapability {
            required: "smoothed-prior",
            available: post.capabilities().describe(),
        });
    }
    langevin_chain(post, cfg, &UlaOptions::new(step), "myula")
}

/// Proximal gradient Langevin:
/// `x = prox_{step R}(x + step grad log L(x) + sqrt(2 step) z)`.
pub fn pgla_sample(post: &Posterior, cfg: &ChainConfig, step: f64) -> Result<SampleSet> {
    post.capabilities().require("prox")?;
    check_step(step)?;
    let Prior::Proximal { f, strength } = post.prior() else {
        unreachable!("prox capability implies a proximal prior")
    };
    let n = post.dim();
    let mut rec = Recorder::new(cfg, n, "pgla", Some(post))?;
    rec.set.meta.params.push(("step".into(), format!("{step}")));
    let mut rng = chain_rng(cfg.seed, cfg.chain);
    let mut x = cfg.start(n)?;
    let noise_scale = (2.0 * step).sqrt();
    let prox_param = if f.is_indicator() { 1.0 } else { step * strength };
    for i in 0..cfg.n_samples {
        let g = match post.likelihood_grad(&x) {
            Ok(g) if g.iter().all(|v| v.is_finite()) => g,
            Ok(_) => return Ok(rec.fail(i, "non-finite gradient".into(), &x)),
            Err(e) => return Ok(rec.fail(i, e.to_string(), &x)),
        };
        let z = standard_normal_vec(&mut rng, n);
        let v: Vec<f64> = (0..n).map(|k| x[k] + step * g[k] + noise_scale * z[k]).collect();
        x = if prox_param > 0.0 {
            match prox(f, &v, prox_param) {
                Ok(p) => p,
                Err(e) => return Ok(rec.fail(i, e.to_string(), &x)),
            }
        } else {
            v
        };
        rec.offer(i, &x);
    }
    Ok(rec.finish())
}
