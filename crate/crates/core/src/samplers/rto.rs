use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::RngCore;

use super::{chain_rng, ChainConfig, Recorder, SampleSet, SolverStats};
use crate::distributions::standard_normal_vec;
use crate::error::{Error, Result};
use crate::operators::{CholeskyWhitening, Composition, ScaledOperator, SharedOperator};
use crate::optim::{
    admm, cgls, fista, polish_feasible, AdmmOptions, FistaOptions, LsBlock, NormalFactor, SolveReport,
    StackedLeastSquares, CGLS_MAX_ITERS, CGLS_TOL, DENSE_AUTO_MAX_DIM,
};
use crate::posterior::{Noise, Posterior, RtoForm};
use crate::proximal::ProxTerm;

/// Backend for the unregularized randomized least squares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsBackend {
    /// Cached dense factorization up to [`DENSE_AUTO_MAX_DIM`] unknowns, CGLS above.
    Auto,
    Cgls,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RtoOptions {
    pub backend: LsBackend,
    pub cgls_tol: f64,
    pub cgls_max_iters: usize,
    /// Fraction of unconverged solves above which the run is reported failed.
    pub max_failure_fraction: f64,
}

impl Default for RtoOptions {
    fn default() -> Self {
        RtoOptions {
            backend: LsBackend::Auto,
            cgls_tol: CGLS_TOL,
            cgls_max_iters: CGLS_MAX_ITERS,
            max_failure_fraction: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlrtoSolver {
    /// FISTA for a single identity-operator term, ADMM otherwise.
    Auto,
    Fista,
    Admm,
}

#[derive(Clone, Copy, Debug)]
pub struct RlrtoOptions {
    pub solver: RlrtoSolver,
    pub fista: FistaOptions,
    pub admm: AdmmOptions,
    pub rto: RtoOptions,
}

impl Default for RlrtoOptions {
    fn default() -> Self {
        RlrtoOptions {
            solver: RlrtoSolver::Auto,
            fista: FistaOptions::default(),
            admm: AdmmOptions::default(),
            rto: RtoOptions::default(),
        }
    }
}

pub(crate) fn solver_tolerance(name: &str, opts: &RlrtoOptions) -> f64 {
    match name {
        "fista" => opts.fista.tol,
        "admm" => opts.admm.tol,
        _ => opts.rto.cgls_tol,
    }
}

/// Operators of the stacked randomized least squares, fixed across draws.
pub(crate) struct RtoSystem {
    lik_op: SharedOperator,
    lik_weight: f64,
    lik_rhs: Vec<f64>,
    noise_sd: f64,
    prior: Option<(SharedOperator, Vec<f64>)>,
    dim: usize,
}

impl RtoSystem {
    pub fn new(form: &RtoForm) -> Result<Self> {
        let dim = form.op.domain_dim();
        let (lik_op, lik_weight, lik_rhs, noise_sd): (SharedOperator, f64, Vec<f64>, f64) = match &form.noise {
            Noise::Scalar(v) => (form.op.clone(), 1.0 / v, form.data.clone(), v.sqrt()),
            Noise::Dense(ch) => {
                let w: SharedOperator = Arc::new(CholeskyWhitening::new(ch.clone()));
                let op: SharedOperator = Arc::new(Composition::new(w.clone(), form.op.clone())?);
                (op, 1.0, w.apply(&form.data)?, 1.0)
            }
        };
        let prior = match &form.prior {
            Some(g) => {
                let s = form.prior_scale.sqrt();
                let op: SharedOperator = if s == 1.0 {
                    g.sqrt_precision.clone()
                } else {
                    Arc::new(ScaledOperator {
                        inner: g.sqrt_precision.clone(),
                        scale: s,
                    })
                };
                let center = op.apply(&g.mean)?;
                Some((op, center))
            }
            None => None,
        };
        Ok(RtoSystem {
            lik_op,
            lik_weight,
            lik_rhs,
            noise_sd,
            prior,
            dim,
        })
    }

    /// Perturbed least squares: data `y + e`, prior center `Gamma mu + z`.
    pub fn randomized(&self, rng: &mut dyn RngCore) -> Result<StackedLeastSquares> {
        let e = standard_normal_vec(rng, self.lik_rhs.len());
        let y: Vec<f64> = self.lik_rhs.iter().zip(&e).map(|(a, b)| a + self.noise_sd * b).collect();
        let mut blocks = vec![LsBlock::new(self.lik_op.clone(), y, self.lik_weight)];
        if let Some((op, center)) = &self.prior {
            let z = standard_normal_vec(rng, center.len());
            blocks.push(LsBlock::new(op.clone(), crate::linalg::add(center, &z), 1.0));
        }
        StackedLeastSquares::new(blocks)
    }

    pub fn dense_factor(&self) -> Result<NormalFactor> {
        let mut blocks = vec![LsBlock::new(self.lik_op.clone(), vec![0.0; self.lik_rhs.len()], self.lik_weight)];
        if let Some((op, center)) = &self.prior {
            blocks.push(LsBlock::new(op.clone(), vec![0.0; center.len()], 1.0));
        }
        NormalFactor::build(&StackedLeastSquares::new(blocks)?)
    }

    fn use_dense(&self, backend: LsBackend) -> bool {
        match backend {
            LsBackend::Auto => self.dim <= DENSE_AUTO_MAX_DIM,
            LsBackend::Dense => true,
            LsBackend::Cgls => false,
        }
    }
}

/// Linear randomize-then-optimize: exact draws from a linear-Gaussian posterior
/// (up to solver tolerance) by solving randomized least squares problems.
pub fn linear_rto_sample(post: &Posterior, cfg: &ChainConfig, opts: &RtoOptions) -> Result<SampleSet> {
    post.capabilities().require("rto-form")?;
    let form = post.rto_form()?;
    let sys = RtoSystem::new(&form)?;
    let n = post.dim();
    let mut rec = Recorder::new(cfg, n, "linear-rto", Some(post))?;
    let dense = if sys.use_dense(opts.backend) {
        match sys.dense_factor() {
            Ok(f) => Some(f),
            Err(e) => return Ok(rec.fail(0, e.to_string(), &vec![0.0; n])),
        }
    } else {
        None
    };
    let mut stats = SolverStats {
        solver: if dense.is_some() { "dense-cholesky".into() } else { "cgls".into() },
        tolerance: opts.cgls_tol,
        ..SolverStats::default()
    };
    let mut rng = chain_rng(cfg.seed, cfg.chain);
    let mut x = cfg.start(n)?;
    for i in 0..cfg.n_samples {
        let ls = sys.randomized(&mut rng)?;
        let solved = match &dense {
            Some(f) => f.solve(&ls),
            None => cgls(&ls, &x, opts.cgls_tol, opts.cgls_max_iters),
        };
        match solved {
            Ok((xn, rep)) => {
                stats.record(&rep);
                x = xn;
            }
            Err(e) => {
                rec.set.meta.solver = Some(stats);
                return Ok(rec.fail(i, e.to_string(), &x));
            }
        }
        rec.offer(i, &x);
    }
    finish_with_stats(rec, stats, opts.max_failure_fraction, cfg.n_samples, &x)
}

fn finish_with_stats(
    mut rec: Recorder<'_>,
    stats: SolverStats,
    max_fraction: f64,
    iterations: usize,
    x: &[f64],
) -> Result<SampleSet> {
    let frac = stats.failure_fraction();
    rec.set.meta.solver = Some(stats);
    if frac > max_fraction {
        return Ok(rec.fail(
            iterations,
            format!(
                "{:.2}% of optimizations did not converge (limit {:.2}%)",
                100.0 * frac,
                100.0 * max_fraction
            ),
            x,
        ));
    }
    Ok(rec.finish())
}

/// One regularized RTO draw for the current randomized problem.
pub(crate) fn rlrto_solve(
    ls: &StackedLeastSquares,
    terms: &[ProxTerm],
    x0: &[f64],
    opts: &RlrtoOptions,
) -> Result<(Vec<f64>, SolveReport, &'static str)> {
    let single_identity = terms.len() == 1 && terms[0].op.is_identity();
    let solver = match opts.solver {
        RlrtoSolver::Auto if single_identity => RlrtoSolver::Fista,
        RlrtoSolver::Auto => RlrtoSolver::Admm,
        RlrtoSolver::Fista if !single_identity => {
            return Err(Error::unsupported("FISTA handles a single regularizer with identity operator only"))
        }
        s => s,
    };
    match solver {
        RlrtoSolver::Fista => {
            let (x, rep) = fista(ls, &terms[0].f, terms[0].strength, x0, &opts.fista)?;
            Ok((x, rep, "fista"))
        }
        _ => {
            let (x, rep) = admm(ls, terms, x0, &opts.admm)?;
            Ok((polish_feasible(terms, &x)?, rep, "admm"))
        }
    }
}

/// Regularized linear randomize-then-optimize.
pub fn rlrto_sample(post: &Posterior, cfg: &ChainConfig, opts: &RlrtoOptions) -> Result<SampleSet> {
    post.capabilities().require("rlrto-form")?;
    let form = post.rto_form()?;
    let terms = post.regularization().unwrap_or(&[]).to_vec();
    let sys = RtoSystem::new(&form)?;
    let n = post.dim();
    let mut rec = Recorder::new(cfg, n, "rlrto", Some(post))?;
    let mut stats = SolverStats::default();
    let mut rng = chain_rng(cfg.seed, cfg.chain);
    let mut x = cfg.start(n)?;
    let dense = if terms.is_empty() && sys.use_dense(opts.rto.backend) {
        Some(sys.dense_factor()?)
    } else {
        None
    };
    for i in 0..cfg.n_samples {
        let ls = sys.randomized(&mut rng)?;
        let solved = if terms.is_empty() {
            match &dense {
                Some(f) => f.solve(&ls).map(|(x, r)| (x, r, "dense-cholesky")),
                None => cgls(&ls, &x, opts.rto.cgls_tol, opts.rto.cgls_max_iters).map(|(x, r)| (x, r, "cgls")),
            }
        } else {
            rlrto_solve(&ls, &terms, &x, opts)
        };
        match solved {
            Ok((xn, rep, name)) => {
                if stats.solves == 0 {
                    stats.solver = name.into();
                    stats.tolerance = solver_tolerance(name, opts);
                }
                stats.record(&rep);
                x = xn;
            }
            Err(e) => {
                rec.set.meta.solver = Some(stats);
                return Ok(rec.fail(i, e.to_string(), &x));
            }
        }
        rec.offer(i, &x);
    }
    finish_with_stats(rec, stats, opts.rto.max_failure_fraction, cfg.n_samples, &x)
}
