//! Seeded factories for the reference experiments: forward model, truth,
//! synthetic data and a bundle of recommended priors with their samplers.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::seq::SliceRandom;

use crate::distributions::{gaussian, gmrf, gamma, standard_normal_vec, unbounded_uniform, CovForm, Density};
use crate::error::{Error, Result};
use crate::geometry::{ExpTransform, Space, StepExpansion, Transform};
use crate::implicit::{
    restoration_prior, smoothed_prior, HaarRestorator, L1Restorator, NonnegRestorator, RegBase, RegPreset,
    RegularizedGaussian, TvRestorator,
};
use crate::linalg::norm2;
use crate::operators::{
    dense_from_matrix, gaussian_convolution_1d, mask_operator, poisson_1d_source_operator,
    poisson_2d_boundary_operator, poisson_2d_conductivity_model, Boundary, ClosureModel, ForwardModel,
    SharedOperator,
};
use crate::posterior::{condition, Hierarchical, Likelihood, Noise, Posterior, Prior, StrengthRole};
use crate::samplers::{chain_rng, ChainConfig, GibbsOptions, GibbsStrategy, RlrtoOptions, RtoOptions, SamplerChoice, UlaOptions};

pub const DEFAULT_SEED: u64 = 20240601;

/// Registry ids of the factories.
pub const PROBLEMS: [&str; 7] = [
    "simplest-linear",
    "simplest-nonlinear",
    "deconvolution-1d",
    "poisson-1d-source",
    "poisson-2d-boundary",
    "poisson-2d-conductivity",
    "inpainting",
];

pub const POISSON_1D_NOISE_LEVELS: [f64; 3] = [0.3e-3, 1e-3, 3e-3];
pub const CONDUCTIVITY_OMEGAS: [f64; 6] = [1.0, 5.0, 7.0, 10.0, 20.0, 30.0];
pub const DECONVOLUTION_STEPS: [f64; 5] = [0.0, 0.4, 0.9, 1.4, 2.0];
/// Haar threshold per unit of smoothing strength in the inpainting prior.
pub const INPAINTING_HAAR_FACTOR: f64 = 10.0;
pub const INPAINTING_SMOOTHING: f64 = 0.01;
pub const INPAINTING_STEP: f64 = 0.0025;

/// How a named prior is sampled.
#[derive(Clone)]
pub enum PriorSetup {
    Direct {
        prior: Prior,
        transform: Option<Arc<dyn Transform>>,
        sampler: SamplerChoice,
    },
    Hierarchical {
        model: Hierarchical,
        gibbs: GibbsOptions,
    },
}

#[derive(Clone)]
pub struct PriorOption {
    pub name: &'static str,
    pub description: String,
    pub setup: PriorSetup,
    /// One start per chain; empty means a single chain from the default start.
    pub initial_points: Vec<Vec<f64>>,
}

impl PriorOption {
    fn direct(name: &'static str, description: &str, prior: Prior, sampler: SamplerChoice) -> Self {
        PriorOption {
            name,
            description: description.to_string(),
            setup: PriorSetup::Direct {
                prior,
                transform: None,
                sampler,
            },
            initial_points: Vec::new(),
        }
    }

    fn starts(mut self, points: Vec<Vec<f64>>) -> Self {
        self.initial_points = points;
        self
    }

    pub fn sampler_id(&self) -> &'static str {
        match &self.setup {
            PriorSetup::Direct { sampler, .. } => sampler.id(),
            PriorSetup::Hierarchical { .. } => "gibbs",
        }
    }
}

/// Knobs shared by the factories; `None` selects the reference value.
#[derive(Clone, Debug, Default)]
pub struct ProblemOptions {
    pub seed: Option<u64>,
    /// Grid or image side length.
    pub size: Option<usize>,
    pub noise_level: Option<f64>,
    /// Conductivity TV weight factor.
    pub omega: Option<f64>,
    /// Replacement truth image `(rows, cols, values)` for inpainting.
    pub image: Option<(usize, usize, Vec<f64>)>,
}

/// A synthetic inverse problem.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: &'static str,
    pub space: Space,
    pub model: ForwardModel,
    pub x_true: Vec<f64>,
    pub y_exact: Vec<f64>,
    pub y_obs: Vec<f64>,
    pub noise: Noise,
    pub noise_std: f64,
    pub default_priors: Vec<PriorOption>,
    pub default_cfg: ChainConfig,
    pub seed: u64,
    /// Free-form notes on modeling choices, copied into run metadata.
    pub notes: Vec<String>,
}

impl ProblemInstance {
    pub fn likelihood(&self) -> Result<Likelihood> {
        Likelihood::new(self.model.clone(), self.noise.clone(), self.y_obs.clone())
    }

    pub fn prior(&self, name: &str) -> Result<&PriorOption> {
        self.default_priors.iter().find(|p| p.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.default_priors.iter().map(|p| p.name).collect();
            Error::invalid(format!("problem {} has no prior '{name}' (known: {})", self.name, known.join(", ")))
        })
    }

    pub fn default_prior(&self) -> &PriorOption {
        &self.default_priors[0]
    }

    /// Posterior of a directly sampled prior.
    pub fn posterior(&self, name: &str) -> Result<Posterior> {
        match &self.prior(name)?.setup {
            PriorSetup::Direct { prior, transform, .. } => condition(self.likelihood()?, prior.clone(), transform.clone()),
            PriorSetup::Hierarchical { .. } => Err(Error::unsupported(format!(
                "prior '{name}' is hierarchical; sample it with the gibbs sampler"
            ))),
        }
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.space.grid_2d()
    }
}

pub fn build(name: &str, opts: &ProblemOptions) -> Result<ProblemInstance> {
    match name {
        "simplest-linear" => simplest_linear_with(opts),
        "simplest-nonlinear" => simplest_nonlinear_with(opts),
        "deconvolution-1d" => deconvolution_1d_with(opts),
        "poisson-1d-source" => poisson_1d_source_with(opts),
        "poisson-2d-boundary" => poisson_2d_boundary_with(opts),
        "poisson-2d-conductivity" => poisson_2d_conductivity_with(opts),
        "inpainting" => inpainting_with(opts),
        _ => Err(Error::invalid(format!("unknown problem '{name}' (known: {})", PROBLEMS.join(", ")))),
    }
}

fn cfg(n_samples: usize, burn_in: usize, thin: usize, seed: u64) -> ChainConfig {
    ChainConfig {
        n_samples,
        burn_in,
        thin,
        seed,
        ..ChainConfig::default()
    }
}

fn add_noise(y_exact: &[f64], std: f64, seed: u64) -> Vec<f64> {
    let mut rng = chain_rng(seed, u64::MAX);
    let e = standard_normal_vec(&mut rng, y_exact.len());
    y_exact.iter().zip(e).map(|(y, e)| y + std * e).collect()
}

fn scalar_gaussian_form(dim: usize, var: f64) -> Result<crate::distributions::GaussianForm> {
    gaussian(vec![0.0; dim], CovForm::Scalar(var))?
        .gaussian_form()
        .ok_or_else(|| Error::invalid("Gaussian without square-root form"))
}

fn gmrf_base(shape: &[usize], precision: f64, boundary: Boundary) -> Result<RegBase> {
    let form = gmrf(shape, 1.0, boundary)?
        .gaussian_form()
        .ok_or_else(|| Error::invalid("GMRF without square-root form"))?;
    Ok(RegBase::Gaussian { form, scale: precision })
}

pub fn simplest_linear() -> Result<ProblemInstance> {
    simplest_linear_with(&ProblemOptions::default())
}

/// `y = x1 + x2 + e`, `e ~ N(0, 0.1)`, truth `(1.5, 1.5)` and the recorded
/// observation `3.0338`.
pub fn simplest_linear_with(opts: &ProblemOptions) -> Result<ProblemInstance> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let op: SharedOperator = Arc::new(dense_from_matrix(1, 2, vec![1.0, 1.0])?);
    let var = 0.1;
    let discrete = Space::discrete(2);
    let line = Space::continuous_1d(2, 1.0)?;
    let base = RegBase::Gaussian {
        form: scalar_gaussian_form(2, 10.0)?,
        scale: 1.0,
    };
    let latent = PriorOption {
        name: "latent-exp",
        description: "x = exp(z), z ~ N(0, I)".into(),
        setup: PriorSetup::Direct {
            prior: Prior::Explicit(Arc::new(gaussian(vec![0.0; 2], CovForm::Scalar(1.0))?)),
            transform: Some(Arc::new(ExpTransform { dim: 2 })),
            sampler: SamplerChoice::Mh { scale: 0.5 },
        },
        initial_points: Vec::new(),
    };
    let hyper = gamma(1.0, 1e-4)?;
    let flat_tv = RegularizedGaussian::from_presets(
        RegBase::UnboundedUniform { dim: 2 },
        None,
        Some((RegPreset::Tv, 1.0)),
        line.clone(),
    )?;
    let priors = vec![
        PriorOption::direct(
            "gaussian",
            "N(0, 10 I)",
            Prior::Explicit(Arc::new(gaussian(vec![0.0; 2], CovForm::Scalar(10.0))?)),
            SamplerChoice::LinearRto(RtoOptions::default()),
        ),
        latent,
        PriorOption::direct(
            "nonneg",
            "N(0, 10 I) restricted to x >= 0",
            Prior::Regularized(RegularizedGaussian::from_presets(
                base.clone(),
                Some(RegPreset::NonNegativity),
                None,
                discrete.clone(),
            )?),
            SamplerChoice::Rlrto(RlrtoOptions::default()),
        ),
        PriorOption::direct(
            "tv",
            "N(0, 10 I) with TV strength 0.2",
            Prior::Regularized(RegularizedGaussian::from_presets(
                base.clone(),
                None,
                Some((RegPreset::Tv, 0.2)),
                line.clone(),
            )?),
            SamplerChoice::Rlrto(RlrtoOptions::default()),
        ),
        PriorOption::direct(
            "nonneg-tv",
            "N(0, 10 I), x >= 0, TV strength 0.2",
            Prior::Regularized(RegularizedGaussian::from_presets(
                base,
                Some(RegPreset::NonNegativity),
                Some((RegPreset::Tv, 0.2)),
                line,
            )?),
            SamplerChoice::Rlrto(RlrtoOptions::default()),
        ),
        PriorOption {
            name: "hierarchical-tv",
            description: "flat base, TV strength d ~ Gamma(1, 1e-4), noise precision l ~ Gamma(1, 1e-4)".into(),
            setup: PriorSetup::Hierarchical {
                model: Hierarchical::new(
                    op.clone(),
                    vec![3.0338],
                    hyper,
                    Some((hyper, StrengthRole::Regularization)),
                    flat_tv,
                )?,
                gibbs: GibbsOptions::default(),
            },
            initial_points: Vec::new(),
        },
    ];
    Ok(ProblemInstance {
        name: "simplest-linear",
        space: discrete,
        model: ForwardModel::Linear(op),
        x_true: vec![1.5, 1.5],
        y_exact: vec![3.0],
        y_obs: vec![3.0338],
        noise: Noise::scalar(var)?,
        noise_std: var.sqrt(),
        default_priors: priors,
        default_cfg: cfg(10_000, 0, 1, seed),
        seed,
        notes: Vec::new(),
    })
}

pub fn simplest_nonlinear() -> Result<ProblemInstance> {
    simplest_nonlinear_with(&ProblemOptions::default())
}

/// `y = x1^2 + x2^2 + e`, `e ~ N(0, 0.1^2)`, recorded observation `5.176`.
pub fn simplest_nonlinear_with(opts: &ProblemOptions) -> Result<ProblemInstance> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let std = 0.1;
    let y_obs = 5.176;
    let model = ClosureModel {
        domain: 2,
        range: 1,
        forward: |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1]],
        vjp: |x: &[f64], v: &[f64]| vec![2.0 * x[0] * v[0], 2.0 * x[1] * v[0]],
        label: "x1^2 + x2^2".into(),
    };
    let space = Space::continuous_1d(2, 1.0)?;
    let smoothing = 1e-3;
    let step = 1e-3;
    let smoothed = |r: Arc<dyn crate::implicit::Restorator>| -> Result<Prior> {
        Ok(Prior::Smoothed(smoothed_prior(restoration_prior(r, space.clone()), smoothing)?))
    };
    let root = y_obs.sqrt();
    let axes = vec![vec![root, 0.0], vec![-root, 0.0], vec![0.0, root], vec![0.0, -root]];
    let diagonal = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
    let tv = TvRestorator::for_space(&space, 5.0);
    let priors = vec![
        PriorOption::direct(
            "uniform",
            "unbounded uniform on R^2",
            Prior::Explicit(Arc::new(unbounded_uniform(2)?)),
            SamplerChoice::Mh { scale: 0.2 },
        )
        .starts(vec![vec![root, 0.0]]),
        PriorOption::direct(
            "nonneg",
            "projection onto x >= 0, smoothing 1e-3",
            smoothed(Arc::new(NonnegRestorator))?,
            SamplerChoice::Myula { step },
        )
        .starts(vec![vec![0.5, 0.5]]),
        PriorOption::direct(
            "l1",
            "soft thresholding at 10 s, smoothing 1e-3",
            smoothed(Arc::new(L1Restorator::default()))?,
            SamplerChoice::Myula { step },
        )
        .starts(axes),
        PriorOption::direct(
            "tv",
            "TV denoising with weight 5 s, smoothing 1e-3",
            smoothed(Arc::new(tv))?,
            SamplerChoice::Myula { step },
        )
        .starts(diagonal),
    ];
    let x_true = vec![1.6, 1.6];
    Ok(ProblemInstance {
        name: "simplest-nonlinear",
        space,
        model: ForwardModel::Nonlinear(Arc::new(model)),
        y_exact: vec![x_true[0] * x_true[0] + x_true[1] * x_true[1]],
        x_true,
        y_obs: vec![y_obs],
        noise: Noise::scalar(std * std)?,
        noise_std: std,
        default_priors: priors,
        default_cfg: cfg(100_000, 0, 1, seed),
        seed,
        notes: vec!["truth (1.6, 1.6) is a stand-in; only the observation is prescribed".into()],
    })
}

/// Non-decreasing staircase with the levels of [`DECONVOLUTION_STEPS`] and
/// seeded breakpoints at least `n / 10` apart.
pub fn staircase(n: usize, seed: u64) -> Vec<f64> {
    let levels = DECONVOLUTION_STEPS.len();
    let gap = (n / 10).max(1);
    let mut rng = chain_rng(seed, u64::MAX - 1);
    // breakpoints = gap-spaced grid plus a random share of the slack
    let slack = n.saturating_sub(gap * levels);
    let mut cuts: Vec<usize> = (0..levels - 1)
        .map(|_| (rand::Rng::random::<f64>(&mut rng) * slack as f64) as usize)
        .collect();
    cuts.sort_unstable();
    let bounds: Vec<usize> = cuts.iter().enumerate().map(|(k, c)| gap * (k + 1) + c).collect();
    (0..n)
        .map(|i| DECONVOLUTION_STEPS[bounds.iter().filter(|b| i >= **b).count()])
        .collect()
}

pub fn deconvolution_1d() -> Result<ProblemInstance> {
    deconvolution_1d_with(&ProblemOptions::default())
}

/// Gaussian blur of width 10 grid spacings on 128 nodes, noise `N(0, 1e-3 I)`.
pub fn deconvolution_1d_with(opts: &ProblemOptions) -> Result<ProblemInstance> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let n = opts.size.unwrap_or(128);
    let var = opts.noise_level.map_or(1e-3, |s| s * s);
    let op: SharedOperator = Arc::new(gaussian_convolution_1d(n, 10.0)?);
    let space = Space::continuous_1d(n, 1.0 / n as f64)?;
    let x_true = staircase(n, seed);
    let y_exact = op.apply(&x_true)?;
    let y_obs = add_noise(&y_exact, var.sqrt(), seed);
    let k = 9;
    let step = StepExpansion::equal_blocks(k, n)?;
    let monotone = RegularizedGaussian::from_presets(
        RegBase::Gaussian {
            form: scalar_gaussian_form(n, 0.1)?,
            scale: 1.0,
        },
        Some(RegPreset::Increasing),
        None,
        space.clone(),
    )?;
    let hyper = gamma(1.0, 1e-4)?;
    let hier_prior = RegularizedGaussian::new(gmrf_base(&[n], 1.0, Boundary::Neumann)?, Vec::new(), space.clone())?;
    let priors = vec![
        PriorOption::direct(
            "gmrf",
            "GMRF, Neumann boundary, precision 500",
            Prior::Explicit(Arc::new(gmrf(&[n], 500.0, Boundary::Neumann)?)),
            SamplerChoice::LinearRto(RtoOptions::default()),
        ),
        PriorOption {
            name: "step",
            description: format!("x = step expansion of z with {k} equal blocks, z ~ N(0, I)"),
            setup: PriorSetup::Direct {
                prior: Prior::Explicit(Arc::new(gaussian(vec![0.0; k], CovForm::Scalar(1.0))?)),
                transform: Some(Arc::new(step)),
                sampler: SamplerChoice::Ula(UlaOptions::new(2e-5)),
            },
            initial_points: Vec::new(),
        },
        PriorOption::direct(
            "monotone",
            "N(0, 0.1 I) restricted to non-decreasing signals",
            Prior::Regularized(monotone),
            SamplerChoice::Rlrto(RlrtoOptions::default()),
        ),
        PriorOption {
            name: "hierarchical-gmrf",
            description: "GMRF precision d ~ Gamma(1, 1e-4), noise precision l ~ Gamma(1, 1e-4)".into(),
            setup: PriorSetup::Hierarchical {
                model: Hierarchical::new(
                    op.clone(),
                    y_obs.clone(),
                    hyper,
                    Some((hyper, StrengthRole::GaussianPrecision)),
                    hier_prior,
                )?,
                gibbs: GibbsOptions {
                    x: GibbsStrategy::LinearRto,
                    ..GibbsOptions::default()
                },
            },
            initial_points: Vec::new(),
        },
    ];
    Ok(ProblemInstance {
        name: "deconvolution-1d",
        space,
        model: ForwardModel::Linear(op),
        x_true,
        y_exact,
        y_obs,
        noise: Noise::scalar(var)?,
        noise_std: var.sqrt(),
        default_priors: priors,
        default_cfg: cfg(1000, 0, 1, seed),
        seed,
        notes: vec![
            "blur width 10 is in grid spacings".into(),
            "staircase truth is a seeded stand-in".into(),
        ],
    })
}

pub fn poisson_1d_source() -> Result<ProblemInstance> {
    poisson_1d_source_with(&ProblemOptions::default())
}

/// Source inference for `-u'' = f` on 128 elements; `f = max(sin 4 pi x, 0)`.
/// The GMRF precision is inferred with hyperprior `Gamma(1, 1e-8)`; the noise
/// level is known.
pub fn poisson_1d_source_with(opts: &ProblemOptions) -> Result<ProblemInstance> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let elements = opts.size.unwrap_or(128);
    let std = opts.noise_level.unwrap_or(POISSON_1D_NOISE_LEVELS[1]);
    let pde = poisson_1d_source_operator(elements)?;
    let nodes = pde.nodes();
    let n = nodes.len();
    let x_true: Vec<f64> = nodes
        .iter()
        .map(|x| (4.0 * core::f64::consts::PI * x).sin().max(0.0))
        .collect();
    let op: SharedOperator = Arc::new(pde);
    let y_exact = op.apply(&x_true)?;
    let y_obs = add_noise(&y_exact, std, seed);
    let space = Space::continuous_1d(n, 1.0 / elements as f64)?;
    let hyper = gamma(1.0, 1e-8)?;
    let base = gmrf_base(&[n], 1.0, Boundary::Zero)?;
    let precision = 1.0 / (std * std);
    let gibbs = |x: GibbsStrategy| GibbsOptions {
        l: GibbsStrategy::Fixed(precision),
        x,
        rlrto: rlrto_long(),
        ..GibbsOptions::default()
    };
    let hierarchical = |name, description: &str, constraint, x| -> Result<PriorOption> {
        let prior = RegularizedGaussian::from_presets(base.clone(), constraint, None, space.clone())?;
        Ok(PriorOption {
            name,
            description: description.to_string(),
            setup: PriorSetup::Hierarchical {
                model: Hierarchical::new(
                    op.clone(),
                    y_obs.clone(),
                    gamma(1.0, 1e-4)?,
                    Some((hyper, StrengthRole::GaussianPrecision)),
                    prior,
                )?,
                gibbs: gibbs(x),
            },
            initial_points: Vec::new(),
        })
    };
    let priors = vec![
        hierarchical(
            "gmrf-nonneg",
            "GMRF with inferred precision d ~ Gamma(1, 1e-8), restricted to f >= 0",
            Some(RegPreset::NonNegativity),
            GibbsStrategy::Rlrto,
        )?,
        hierarchical(
            "gmrf",
            "GMRF with inferred precision d ~ Gamma(1, 1e-8)",
            None,
            GibbsStrategy::LinearRto,
        )?,
    ];
    Ok(ProblemInstance {
        name: "poisson-1d-source",
        space,
        model: ForwardModel::Linear(op),
        x_true,
        y_exact,
        y_obs,
        noise: Noise::scalar(std * std)?,
        noise_std: std,
        default_priors: priors,
        default_cfg: cfg(1000, 100, 1, seed),
        seed,
        notes: vec![format!("noise std {std}; reference levels {POISSON_1D_NOISE_LEVELS:?}")],
    })
}

/// RLRTO settings for the stiff PDE-constrained problems.
fn rlrto_long() -> RlrtoOptions {
    let mut o = RlrtoOptions::default();
    o.fista.max_iters = 5000;
    o.admm.max_iters = 2000;
    o
}

pub fn poisson_2d_boundary() -> Result<ProblemInstance> {
    poisson_2d_boundary_with(&ProblemOptions::default())
}

/// Left-edge Dirichlet data for the Laplace equation on the unit square with
/// `size` elements per side; `g = 1` on `[0.4, 0.6)`, observations at the
/// interior nodes with noise std 0.3.
pub fn poisson_2d_boundary_with(opts: &ProblemOptions) -> Result<ProblemInstance> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let elements = opts.size.unwrap_or(64);
    let std = opts.noise_level.unwrap_or(0.3);
    let pde = poisson_2d_boundary_operator(elements + 1)?;
    let nodes = pde.boundary_nodes();
    let n = nodes.len();
    let x_true: Vec<f64> = nodes.iter().map(|y| if (0.4..0.6).contains(y) { 1.0 } else { 0.0 }).collect();
    let op: SharedOperator = Arc::new(pde);
    let y_exact = op.apply(&x_true)?;
    let y_obs = add_noise(&y_exact, std, seed);
    let space = Space::continuous_1d(n, 1.0 / elements as f64)?;
    let base = gmrf_base(&[n], 0.1, Boundary::Zero)?;
    let tv = RegularizedGaussian::from_presets(base, None, Some((RegPreset::Tv, 25.0)), space.clone())?;
    let priors = vec![
        PriorOption::direct(
            "gmrf-tv",
            "GMRF precision 0.1 with TV strength 25",
            Prior::Regularized(tv),
            SamplerChoice::Rlrto(rlrto_long()),
        ),
        PriorOption::direct(
            "gmrf",
            "GMRF precision 0.1",
            Prior::Explicit(Arc::new(gmrf(&[n], 0.1, Boundary::Zero)?)),
            SamplerChoice::LinearRto(RtoOptions::default()),
        ),
    ];
    Ok(ProblemInstance {
        name: "poisson-2d-boundary",
        space,
        model: ForwardModel::Linear(op),
        x_true,
        y_exact,
        y_obs,
        noise: Noise::scalar(std * std)?,
        noise_std: std,
        default_priors: priors,
        default_cfg: cfg(1000, 0, 1, seed),
        seed,
        notes: vec!["only interior nodes are observed".into()],
    })
}

pub fn poisson_2d_conductivity() -> Result<ProblemInstance> {
    poisson_2d_conductivity_with(&ProblemOptions::default())
}

/// Log-conductivity inference for `-div(e^m grad u) = 1` on a `size + 1`
/// node grid: `m = 0` on `[0.35, 0.65)^2`, `-0.5` elsewhere, about 1%
/// relative noise. TV prior through MYULA with denoiser weight
/// `0.5 sigma^2 omega` at smoothing strength `0.5 sigma^2`.
pub fn poisson_2d_conductivity_with(opts: &ProblemOptions) -> Result<ProblemInstance> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let elements = opts.size.unwrap_or(32);
    let omega = opts.omega.unwrap_or(5.0);
    let g = elements + 1;
    let model = poisson_2d_conductivity_model(g, 1.0)?;
    let h = 1.0 / elements as f64;
    let inside = |i: usize| (0.35..0.65).contains(&(i as f64 * h));
    let x_true: Vec<f64> = (0..g * g)
        .map(|k| if inside(k / g) && inside(k % g) { 0.0 } else { -0.5 })
        .collect();
    let model: Arc<dyn crate::operators::NonlinearModel> = Arc::new(model);
    let y_exact = model.forward(&x_true)?;
    let std = opts
        .noise_level
        .unwrap_or(0.01 * norm2(&y_exact) / (y_exact.len() as f64).sqrt());
    let y_obs = add_noise(&y_exact, std, seed);
    let space = Space::continuous_2d(g, g, h)?;
    let smoothing = 0.5 * std * std;
    let mut tv = TvRestorator::for_space(&space, omega);
    tv.max_iters = 100;
    let prior = smoothed_prior(restoration_prior(Arc::new(tv), space.clone()), smoothing)?;
    let priors = vec![PriorOption::direct(
        "tv",
        &format!("TV denoiser weight 0.5 sigma^2 omega (omega = {omega}), smoothing 0.5 sigma^2"),
        Prior::Smoothed(prior),
        SamplerChoice::Myula { step: 1e-4 },
    )
    .starts(vec![vec![-0.5; g * g]])];
    Ok(ProblemInstance {
        name: "poisson-2d-conductivity",
        space,
        model: ForwardModel::Nonlinear(model),
        x_true,
        y_exact,
        y_obs,
        noise: Noise::scalar(std * std)?,
        noise_std: std,
        default_priors: priors,
        default_cfg: cfg(500_000, 100_000, 100, seed),
        seed,
        notes: vec![format!("noise std {std:e} = 1% of the RMS exact data")],
    })
}

/// Synthetic piecewise-smooth test image with values in `[0, 1]`.
pub fn phantom(rows: usize, cols: usize) -> Vec<f64> {
    let mut img = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = (r as f64 + 0.5) / rows as f64;
            let u = (c as f64 + 0.5) / cols as f64;
            let mut p = 0.15 + 0.2 * v;
            let d2 = |cu: f64, cv: f64, au: f64, av: f64| ((u - cu) / au).powi(2) + ((v - cv) / av).powi(2);
            if d2(0.3, 0.32, 0.18, 0.18) < 1.0 {
                p = 0.8;
            }
            if (0.55..0.88).contains(&u) && (0.12..0.42).contains(&v) {
                p = 0.55;
            }
            let e = d2(0.62, 0.7, 0.25, 0.14);
            if e < 1.0 {
                p = 0.35 + 0.4 * (1.0 - e);
            }
            if (0.12..0.28).contains(&u) && (0.68..0.86).contains(&v) {
                p = 1.0;
            }
            if (0.78..0.92).contains(&u) && (0.55..0.6).contains(&v) {
                p = 0.0;
            }
            img.push(p);
        }
    }
    img
}

pub fn inpainting() -> Result<ProblemInstance> {
    inpainting_with(&ProblemOptions::default())
}

/// Keeps a seeded half of the pixels of a 128x128 image and adds noise of
/// std 0.1; Haar thresholding prior through MYULA.
pub fn inpainting_with(opts: &ProblemOptions) -> Result<ProblemInstance> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let (rows, cols, x_true) = match &opts.image {
        Some((r, c, v)) => {
            if r * c != v.len() || *r < 2 || *c < 2 {
                return Err(Error::invalid("image size does not match its pixel count"));
            }
            (*r, *c, v.clone())
        }
        None => {
            let s = opts.size.unwrap_or(128);
            (s, s, phantom(s, s))
        }
    };
    let std = opts.noise_level.unwrap_or(0.1);
    let npix = rows * cols;
    let mut idx: Vec<usize> = (0..npix).collect();
    let mut rng = chain_rng(seed, u64::MAX - 2);
    idx.shuffle(&mut rng);
    let mut keep = idx[..npix / 2].to_vec();
    keep.sort_unstable();
    let op: SharedOperator = Arc::new(mask_operator(npix, keep)?);
    let y_exact = op.apply(&x_true)?;
    let y_obs = add_noise(&y_exact, std, seed);
    let space = Space::image(rows, cols)?;
    let haar = HaarRestorator {
        rows,
        cols,
        factor: INPAINTING_HAAR_FACTOR,
    };
    let prior = smoothed_prior(restoration_prior(Arc::new(haar), space.clone()), INPAINTING_SMOOTHING)?;
    let priors = vec![PriorOption::direct(
        "haar",
        &format!(
            "Haar soft thresholding at {INPAINTING_HAAR_FACTOR} s, smoothing {INPAINTING_SMOOTHING}"
        ),
        Prior::Smoothed(prior),
        SamplerChoice::Myula { step: INPAINTING_STEP },
    )];
    Ok(ProblemInstance {
        name: "inpainting",
        space,
        model: ForwardModel::Linear(op),
        x_true,
        y_exact,
        y_obs,
        noise: Noise::scalar(std * std)?,
        noise_std: std,
        default_priors: priors,
        default_cfg: cfg(100_000, 40_000, 10, seed),
        seed,
        notes: Vec::new(),
    })
}

/// Observed data scattered back to the full image, zero at missing pixels.
pub fn zero_filled(p: &ProblemInstance) -> Result<Vec<f64>> {
    match &p.model {
        ForwardModel::Linear(op) => op.adjoint(&p.y_obs),
        ForwardModel::Nonlinear(_) => Err(Error::unsupported("zero filling needs a linear model")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let p = simplest_linear().unwrap();
        assert_eq!(p.y_obs, vec![3.0338]);
        assert_eq!(p.y_exact, vec![3.0]);
        assert_eq!(p.noise.scalar_variance(), Some(0.1));
        let q = simplest_nonlinear().unwrap();
        assert_eq!(q.y_obs, vec![5.176]);
        assert_eq!(q.noise.scalar_variance(), Some(0.1 * 0.1));
        let v = q.model.vjp(&[1.0, 2.0], &[1.0]).unwrap();
        assert_eq!(v, vec![2.0, 4.0]);
    }

    #[test]
    fn deconvolution_bundle() {
        let p = deconvolution_1d().unwrap();
        assert_eq!(p.x_true.len(), 128);
        assert!(p.x_true.windows(2).all(|w| w[1] >= w[0]));
        let mut levels = p.x_true.clone();
        levels.dedup();
        assert_eq!(levels, DECONVOLUTION_STEPS.to_vec());
        match &p.prior("gmrf").unwrap().setup {
            PriorSetup::Direct { prior: Prior::Explicit(d), .. } => assert!(d.name().contains("gmrf")),
            _ => panic!("gmrf prior must be explicit"),
        }
        assert_eq!(p.posterior("step").unwrap().dim(), 9);
        match &p.prior("monotone").unwrap().setup {
            PriorSetup::Direct { prior: Prior::Regularized(r), .. } => {
                assert_eq!(r.terms().len(), 1);
                assert!(matches!(r.terms()[0].f, crate::proximal::ProxFn::Increasing));
            }
            _ => panic!("monotone prior must be regularized"),
        }
    }

    #[test]
    fn poisson_sources() {
        let p = poisson_1d_source().unwrap();
        let i = (p.x_true.len() + 1) / 8;
        assert!((p.x_true[i - 1] - 1.0).abs() < 1e-12);
        match &p.default_prior().setup {
            PriorSetup::Hierarchical { model, .. } => {
                let (g, _) = model.strength_hyper.unwrap();
                assert_eq!((g.shape, g.rate), (1.0, 1e-8));
            }
            _ => panic!("hierarchical default expected"),
        }
        let b = poisson_2d_boundary_with(&ProblemOptions {
            size: Some(20),
            ..ProblemOptions::default()
        })
        .unwrap();
        assert_eq!(b.x_true[9], 1.0);
        assert_eq!(b.x_true[13], 0.0);
    }

    #[test]
    fn reproducible_and_consistent_noise() {
        for name in ["deconvolution-1d", "poisson-1d-source"] {
            let a = build(name, &ProblemOptions::default()).unwrap();
            let b = build(name, &ProblemOptions::default()).unwrap();
            assert_eq!(a.y_obs, b.y_obs);
            let e = norm2(&crate::linalg::sub(&a.y_obs, &a.y_exact));
            let expected = a.noise_std * (a.y_obs.len() as f64).sqrt();
            assert!((e / expected - 1.0).abs() < 0.3, "{name}: {e} vs {expected}");
        }
        assert!(build("nope", &ProblemOptions::default()).is_err());
    }

    #[test]
    fn inpainting_mask() {
        let p = inpainting_with(&ProblemOptions {
            size: Some(16),
            ..ProblemOptions::default()
        })
        .unwrap();
        assert_eq!(p.y_obs.len(), 128);
        assert!(p.x_true.iter().all(|v| (0.0..=1.0).contains(v)));
        let z = zero_filled(&p).unwrap();
        assert_eq!(z.iter().filter(|v| **v != 0.0).count(), 128);
    }
}
