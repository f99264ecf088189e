use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::rto::{rlrto_solve, solver_tolerance, RlrtoOptions, RtoSystem};
use super::{chain_rng, ChainConfig, Recorder, SampleSet, SolverStats};
use crate::distributions::sample_gamma;
use crate::error::{Error, Result};
use crate::optim::{cgls, DENSE_AUTO_MAX_DIM};
use crate::posterior::{Hierarchical, StrengthRole};

/// Recorded in run metadata whenever the regularization strength is resampled.
pub const D_UPDATE_ASSUMPTION: &str = "regularization strength d | x ~ Gamma(alpha_d + rows(D), beta_d + |Dx|_1) \
     using the pseudo-normalization d^rows(D) of exp(-d |Dx|_1)";

/// Update rule for one block of the Gibbs scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GibbsStrategy {
    ConjugateGamma,
    /// Hold the variable at a value.
    Fixed(f64),
    Rlrto,
    LinearRto,
}

#[derive(Clone, Copy, Debug)]
pub struct GibbsOptions {
    pub l: GibbsStrategy,
    pub d: GibbsStrategy,
    pub x: GibbsStrategy,
    /// Values used by the first `x` update.
    pub initial_l: f64,
    pub initial_d: f64,
    pub rlrto: RlrtoOptions,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions {
            l: GibbsStrategy::ConjugateGamma,
            d: GibbsStrategy::ConjugateGamma,
            x: GibbsStrategy::Rlrto,
            initial_l: 1.0,
            initial_d: 1.0,
            rlrto: RlrtoOptions::default(),
        }
    }
}

fn hyper_update(strategy: GibbsStrategy, var: &str) -> Result<Option<f64>> {
    match strategy {
        GibbsStrategy::ConjugateGamma => Ok(None),
        GibbsStrategy::Fixed(v) if v > 0.0 => Ok(Some(v)),
        GibbsStrategy::Fixed(v) => Err(Error::invalid(format!("fixed {var} = {v} must be positive"))),
        s => Err(Error::unsupported(format!("strategy {s:?} cannot update the hyperparameter {var}"))),
    }
}

/// Systematic-scan Gibbs over `(x, d, l)`: `x | l, d` by (regularized) RTO,
/// then the conjugate Gamma updates of `d | x` and `l | x, y`.
///
/// Rows hold `x` followed by `l` and, when present, `d`.
pub fn hybrid_gibbs(h: &Hierarchical, cfg: &ChainConfig, opts: &GibbsOptions) -> Result<SampleSet> {
    let fixed_l = hyper_update(opts.l, "l")?;
    let fixed_d = hyper_update(opts.d, "d")?;
    let has_d = h.strength_hyper.is_some();
    let terms = h.x_prior.terms().to_vec();
    match opts.x {
        GibbsStrategy::Rlrto => {}
        GibbsStrategy::LinearRto if terms.is_empty() => {}
        GibbsStrategy::LinearRto => {
            return Err(Error::unsupported("linear-rto cannot update x under constraints or regularization"))
        }
        s => return Err(Error::unsupported(format!("strategy {s:?} cannot update x"))),
    }
    let n = h.dim();
    let width = n + 1 + usize::from(has_d);
    let mut rec = Recorder::new(cfg, width, "gibbs", None)?;
    let mut names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    names.push("l".into());
    if has_d {
        names.push("d".into());
    }
    rec.set.set_columns(names)?;
    rec.set.meta.prior_class = format!("implicit/{}", h.x_prior.properness().label());
    if let Some((_, StrengthRole::Regularization)) = h.strength_hyper {
        if fixed_d.is_none() {
            rec.set.meta.assumptions.push(D_UPDATE_ASSUMPTION.to_string());
        }
    }
    rec.set.meta.params.push(("x_update".into(), format!("{:?}", opts.x)));
    let mut rng = chain_rng(cfg.seed, cfg.chain);
    let mut x = cfg.start(n)?;
    let mut l = fixed_l.unwrap_or(opts.initial_l);
    let mut d = fixed_d.unwrap_or(opts.initial_d);
    let mut stats = SolverStats::default();
    let mut row = Vec::with_capacity(width);
    for i in 0..cfg.n_samples {
        // x | l, d
        let post = h.conditional(l, has_d.then_some(d))?;
        let sys = RtoSystem::new(&post.rto_form()?)?;
        let ls = sys.randomized(&mut rng)?;
        let solved = if terms.is_empty() {
            if n <= DENSE_AUTO_MAX_DIM {
                sys.dense_factor().and_then(|f| f.solve(&ls)).map(|(x, r)| (x, r, "dense-cholesky"))
            } else {
                cgls(&ls, &x, opts.rlrto.rto.cgls_tol, opts.rlrto.rto.cgls_max_iters).map(|(x, r)| (x, r, "cgls"))
            }
        } else {
            let current = post.regularization().unwrap_or(&[]).to_vec();
            rlrto_solve(&ls, &current, &x, &opts.rlrto)
        };
        match solved {
            Ok((xn, rep, name)) => {
                if stats.solves == 0 {
                    stats.solver = name.into();
                    stats.tolerance = solver_tolerance(name, &opts.rlrto);
                }
                stats.record(&rep);
                x = xn;
            }
            Err(e) => {
                rec.set.meta.solver = Some(stats);
                return Ok(rec.fail(i, e.to_string(), &x));
            }
        }
        // d | x
        if has_d {
            d = match fixed_d {
                Some(v) => v,
                None => {
                    let (a, b) = h.strength_conditional(&x)?.expect("strength hyperparameter present");
                    sample_gamma(&mut rng, a, b)?
                }
            };
        }
        // l | x, y
        l = match fixed_l {
            Some(v) => v,
            None => {
                let (a, b) = h.noise_conditional(&x);
                sample_gamma(&mut rng, a, b)?
            }
        };
        row.clear();
        row.extend_from_slice(&x);
        row.push(l);
        if has_d {
            row.push(d);
        }
        rec.offer(i, &row);
    }
    let frac = stats.failure_fraction();
    rec.set.meta.solver = Some(stats);
    if frac > opts.rlrto.rto.max_failure_fraction {
        return Ok(rec.fail(
            cfg.n_samples,
            format!("{:.2}% of x-updates did not converge", 100.0 * frac),
            &x,
        ));
    }
    Ok(rec.finish())
}
