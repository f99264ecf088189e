//! Chain generators: random-walk Metropolis-Hastings, the Langevin family
//! (ULA, PGLA, MYULA / PnP-ULA), linear and regularized randomize-then-optimize,
//! and a hierarchical Gibbs sampler.
//!
//! Every chain draws from its own ChaCha stream selected by `(seed, chain)`,
//! so results are bit-reproducible and independent of scheduling.

mod gibbs;
mod langevin;
mod rto;

pub use gibbs::{hybrid_gibbs, GibbsOptions, GibbsStrategy, D_UPDATE_ASSUMPTION};
pub use langevin::{mh_sample, myula_sample, pgla_sample, ula_sample, UlaOptions};
pub use rto::{linear_rto_sample, rlrto_sample, LsBackend, RlrtoOptions, RlrtoSolver, RtoOptions};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::posterior::Posterior;

/// The RNG of chain `chain` under root seed `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Length and storage policy of one chain.
///
/// The chain runs `n_samples` iterations; iteration `i` is kept when
/// `i >= burn_in` and `(i - burn_in)` is a multiple of `thin`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chain: u64,
    pub initial_point: Option<Vec<f64>>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_samples: 1000,
            burn_in: 0,
            thin: 1,
            seed: 0,
            chain: 0,
            initial_point: None,
        }
    }
}

impl ChainConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        ChainConfig {
            n_samples,
            seed,
            ..ChainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if self.burn_in >= self.n_samples {
            return Err(Error::invalid(format!(
                "burn-in {} leaves no draws out of {} iterations",
                self.burn_in, self.n_samples
            )));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        (self.n_samples - self.burn_in).div_ceil(self.thin)
    }

    pub fn keeps(&self, iteration: usize) -> bool {
        iteration >= self.burn_in && (iteration - self.burn_in).is_multiple_of(self.thin)
    }

    /// Config of chain `chain` started from `initial_point`.
    pub fn for_chain(&self, chain: u64, initial_point: Option<Vec<f64>>) -> Self {
        ChainConfig {
            chain,
            initial_point: initial_point.or_else(|| self.initial_point.clone()),
            ..self.clone()
        }
    }

    pub(crate) fn start(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.initial_point {
            Some(x) => {
                check_dim("initial point", dim, x.len())?;
                Ok(x.clone())
            }
            None => Ok(vec![0.0; dim]),
        }
    }
}

/// Why a chain stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainFailure {
    pub iteration: usize,
    pub reason: String,
    pub position: Vec<f64>,
}

/// Aggregate optimizer statistics of an RTO chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverStats {
    pub solver: String,
    pub tolerance: f64,
    pub solves: usize,
    pub failures: usize,
    pub mean_iterations: f64,
    pub max_residual: f64,
}

impl SolverStats {
    pub(crate) fn record(&mut self, report: &crate::optim::SolveReport) {
        self.mean_iterations = (self.mean_iterations * self.solves as f64 + report.iterations as f64) / (self.solves + 1) as f64;
        self.solves += 1;
        if !report.converged {
            self.failures += 1;
        }
        self.max_residual = self.max_residual.max(report.residual);
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.failures as f64 / self.solves as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleMeta {
    pub sampler: String,
    pub seed: u64,
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub prior_class: String,
    pub acceptance_rate: Option<f64>,
    pub solver: Option<SolverStats>,
    pub restorator: Option<String>,
    pub transform: Option<String>,
    /// Modelling assumptions the run relies on.
    pub assumptions: Vec<String>,
    /// Free-form sampler parameters (step sizes, smoothing strength, ...).
    pub params: Vec<(String, String)>,
}

/// Kept draws of one or more chains, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    dim: usize,
    draws: Vec<f64>,
    columns: Vec<String>,
    /// `(chain index, rows)` in storage order.
    chains: Vec<(u64, usize)>,
    pub meta: SampleMeta,
    pub failures: Vec<(u64, ChainFailure)>,
}

impl SampleSet {
    pub fn new(dim: usize, meta: SampleMeta) -> Self {
        SampleSet {
            dim,
            draws: Vec::new(),
            columns: (0..dim).map(|i| format!("x{i}")).collect(),
            chains: Vec::new(),
            meta,
            failures: Vec::new(),
        }
    }

    /// Builds a single-chain set from row-major draws.
    pub fn from_rows(dim: usize, draws: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if dim == 0 || !draws.len().is_multiple_of(dim) {
            return Err(Error::invalid("draw buffer is not a whole number of rows"));
        }
        let rows = draws.len() / dim;
        let mut s = SampleSet::new(dim, meta);
        s.draws = draws;
        s.chains.push((0, rows));
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.draws.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.draws
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn set_columns(&mut self, names: Vec<String>) -> Result<()> {
        check_dim("column names", self.dim, names.len())?;
        self.columns = names;
        Ok(())
    }

    pub fn chains(&self) -> &[(u64, usize)] {
        &self.chains
    }

    /// Rows belonging to chain `chain`.
    pub fn chain_rows(&self, chain: u64) -> impl Iterator<Item = &[f64]> {
        let mut start = 0;
        let mut range = 0..0;
        for (c, n) in &self.chains {
            if *c == chain {
                range = start..start + n;
            }
            start += n;
        }
        range.map(move |i| self.row(i))
    }

    pub fn failure(&self) -> Option<&ChainFailure> {
        self.failures.first().map(|(_, f)| f)
    }

    pub(crate) fn push_row(&mut self, x: &[f64]) {
        self.draws.extend_from_slice(x);
    }

    /// Concatenates chains in the given order, keeping chain identity.
    pub fn merge(sets: Vec<SampleSet>) -> Result<SampleSet> {
        let mut it = sets.into_iter();
        let mut out = it.next().ok_or_else(|| Error::invalid("nothing to merge"))?;
        for s in it {
            check_dim("merged chain", out.dim, s.dim)?;
            out.draws.extend_from_slice(&s.draws);
            out.chains.extend_from_slice(&s.chains);
            out.failures.extend(s.failures);
            if let (Some(a), Some(b)) = (&mut out.meta.acceptance_rate, s.meta.acceptance_rate) {
                // pooled over equally long chains
                let k = (out.chains.len() - 1) as f64;
                *a = (*a * k + b) / (k + 1.0);
            }
            if let (Some(a), Some(b)) = (&mut out.meta.solver, &s.meta.solver) {
                let n = a.solves + b.solves;
                if n > 0 {
                    a.mean_iterations = (a.mean_iterations * a.solves as f64 + b.mean_iterations * b.solves as f64) / n as f64;
                }
                a.solves = n;
                a.failures += b.failures;
                a.max_residual = a.max_residual.max(b.max_residual);
            }
        }
        Ok(out)
    }

    /// Row-wise map into a new dimension (used for latent-to-physical output).
    pub fn map_rows(&self, new_dim: usize, mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<SampleSet> {
        let mut draws = Vec::with_capacity(self.len() * new_dim);
        for r in self.rows() {
            let y = f(r)?;
            check_dim("mapped row", new_dim, y.len())?;
            draws.extend_from_slice(&y);
        }
        let mut out = SampleSet::new(new_dim, self.meta.clone());
        out.draws = draws;
        out.chains = self.chains.clone();
        out.failures = self.failures.clone();
        Ok(out)
    }
}

/// Stores kept iterations while a chain runs.
pub(crate) struct Recorder<'a> {
    cfg: &'a ChainConfig,
    pub set: SampleSet,
}

impl<'a> Recorder<'a> {
    pub fn new(cfg: &'a ChainConfig, dim: usize, sampler: &str, post: Option<&Posterior>) -> Result<Self> {
        cfg.validate()?;
        let meta = SampleMeta {
            sampler: sampler.to_string(),
            seed: cfg.seed,
            n_samples: cfg.n_samples,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            prior_class: post.map(|p| p.prior().classification()).unwrap_or_default(),
            transform: post.and_then(|p| p.transform().map(|t| t.name())),
            ..SampleMeta::default()
        };
        let mut set = SampleSet::new(dim, meta);
        set.draws.reserve(cfg.kept() * dim);
        Ok(Recorder { cfg, set })
    }

    pub fn offer(&mut self, iteration: usize, x: &[f64]) {
        if self.cfg.keeps(iteration) {
            self.set.push_row(x);
        }
    }

    pub fn fail(mut self, iteration: usize, reason: String, position: &[f64]) -> SampleSet {
        self.set.failures.push((
            self.cfg.chain,
            ChainFailure {
                iteration,
                reason,
                position: position.to_vec(),
            },
        ));
        self.finish()
    }

    pub fn finish(mut self) -> SampleSet {
        let rows = self.set.len();
        self.set.chains = vec![(self.cfg.chain, rows)];
        self.set
    }
}

/// A sampler choice with its parameters, for registry-style dispatch.
#[derive(Clone, Debug)]
pub enum SamplerChoice {
    Mh { scale: f64 },
    Ula(UlaOptions),
    Pgla { step: f64 },
    Myula { step: f64 },
    LinearRto(RtoOptions),
    Rlrto(RlrtoOptions),
}

/// `(id, required capability)` for every single-level sampler, plus Gibbs.
pub const SAMPLERS: [(&str, &str); 7] = [
    ("mh", "logd"),
    ("ula", "grad"),
    ("pgla", "prox"),
    ("myula", "grad"),
    ("linear-rto", "rto-form"),
    ("rlrto", "rlrto-form"),
    ("gibbs", "hierarchical"),
];

impl SamplerChoice {
    pub fn id(&self) -> &'static str {
        match self {
            SamplerChoice::Mh { .. } => "mh",
            SamplerChoice::Ula(_) => "ula",
            SamplerChoice::Pgla { .. } => "pgla",
            SamplerChoice::Myula { .. } => "myula",
            SamplerChoice::LinearRto(_) => "linear-rto",
            SamplerChoice::Rlrto(_) => "rlrto",
        }
    }

    pub fn required_capability(&self) -> &'static str {
        SAMPLERS.iter().find(|(id, _)| *id == self.id()).map(|(_, c)| *c).unwrap_or("none")
    }

    /// Checks compatibility without sampling.
    pub fn check(&self, post: &Posterior) -> Result<()> {
        post.capabilities().require(self.required_capability())?;
        if let SamplerChoice::Myula { .. } = self {
            if !matches!(post.prior(), crate::posterior::Prior::Smoothed(_)) {
                return Err(Error::MissingCapability {
                    required: "smoothed-prior",
                    available: post.capabilities().describe(),
                });
            }
        }
        Ok(())
    }

    pub fn run(&self, post: &Posterior, cfg: &ChainConfig) -> Result<SampleSet> {
        self.check(post)?;
        match self {
            SamplerChoice::Mh { scale } => mh_sample(post, cfg, *scale),
            SamplerChoice::Ula(o) => ula_sample(post, cfg, o),
            SamplerChoice::Pgla { step } => pgla_sample(post, cfg, *step),
            SamplerChoice::Myula { step } => myula_sample(post, cfg, *step),
            SamplerChoice::LinearRto(o) => linear_rto_sample(post, cfg, o),
            SamplerChoice::Rlrto(o) => rlrto_sample(post, cfg, o),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kept_count_matches_policy() {
        let cfg = ChainConfig {
            n_samples: 100_000,
            burn_in: 40_000,
            thin: 10,
            ..ChainConfig::default()
        };
        assert_eq!(cfg.kept(), 6000);
        assert_eq!((0..cfg.n_samples).filter(|i| cfg.keeps(*i)).count(), 6000);
        let odd = ChainConfig {
            n_samples: 11,
            burn_in: 2,
            thin: 4,
            ..ChainConfig::default()
        };
        assert_eq!(odd.kept(), (0..11).filter(|i| odd.keeps(*i)).count());
        assert!(ChainConfig { burn_in: 10, n_samples: 10, ..ChainConfig::default() }.validate().is_err());
        assert!(ChainConfig { thin: 0, ..ChainConfig::default() }.validate().is_err());
    }

    #[test]
    fn chain_streams_differ() {
        use rand::RngCore;
        let (mut a, mut b, mut c) = (chain_rng(7, 0), chain_rng(7, 1), chain_rng(7, 0));
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_ne!(x, y);
        assert_eq!(x, z);
    }
}
