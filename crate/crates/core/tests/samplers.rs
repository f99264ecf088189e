#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use bayesinv_core::distributions::unbounded_uniform;
use bayesinv_core::geometry::Space;
use bayesinv_core::implicit::{RegBase, RegPreset, RegularizedGaussian};
use bayesinv_core::operators::{ForwardModel, IdentityOperator, SharedOperator};
use bayesinv_core::posterior::{condition, Likelihood, Noise, Posterior, Prior};
use bayesinv_core::problems::{build, simplest_linear, ProblemOptions};
use bayesinv_core::proximal::ProxFn;
use bayesinv_core::samplers::{
    hybrid_gibbs, linear_rto_sample, mh_sample, pgla_sample, rlrto_sample, ula_sample, ChainConfig, RlrtoOptions,
    RtoOptions, SampleSet, SamplerChoice, UlaOptions,
};
use bayesinv_core::stats::summarize;
use bayesinv_core::Error;

fn identity_likelihood(y: Vec<f64>, variance: f64) -> Likelihood {
    let op: SharedOperator = Arc::new(IdentityOperator { dim: y.len() });
    Likelihood::new(ForwardModel::Linear(op), Noise::scalar(variance).unwrap(), y).unwrap()
}

fn flat_normal(y: f64) -> Posterior {
    let prior = Prior::Explicit(Arc::new(unbounded_uniform(1).unwrap()));
    condition(identity_likelihood(vec![y], 1.0), prior, None).unwrap()
}

fn moments(s: &SampleSet, j: usize) -> (f64, f64) {
    let c = s.column(j);
    let m = c.iter().sum::<f64>() / c.len() as f64;
    let v = c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (c.len() - 1) as f64;
    (m, v)
}

/// Mean of `exp(-(x - y)^2 / 2 - |x|)` by midpoint quadrature.
fn laplace_gauss_mean(y: f64) -> f64 {
    let (lo, hi, n) = (-15.0, 15.0, 300_000);
    let h = (hi - lo) / n as f64;
    let (mut z, mut zx) = (0.0, 0.0);
    for i in 0..n {
        let x = lo + (i as f64 + 0.5) * h;
        let p = (-0.5 * (x - y) * (x - y) - x.abs()).exp();
        z += p;
        zx += p * x;
    }
    zx / z
}

#[test]
fn mh_targets_standard_normal() {
    let cfg = ChainConfig {
        burn_in: 1000,
        ..ChainConfig::new(101_000, 1)
    };
    let s = mh_sample(&flat_normal(0.0), &cfg, 2.4).unwrap();
    let (m, v) = moments(&s, 0);
    assert!(m.abs() < 0.03, "mean {m}");
    assert!((v - 1.0).abs() < 0.03, "variance {v}");
    let rate = s.meta.acceptance_rate.unwrap();
    assert!((0.2..0.6).contains(&rate), "acceptance {rate}");
}

#[test]
fn pgla_matches_quadrature_for_laplace_prior() {
    let prior = Prior::Proximal {
        f: ProxFn::L1,
        strength: 1.0,
    };
    let post = condition(identity_likelihood(vec![1.5], 1.0), prior, None).unwrap();
    let cfg = ChainConfig {
        burn_in: 2000,
        ..ChainConfig::new(402_000, 2)
    };
    let s = pgla_sample(&post, &cfg, 0.01).unwrap();
    let (m, _) = moments(&s, 0);
    let oracle = laplace_gauss_mean(1.5);
    assert!((m - oracle).abs() < 0.05, "mean {m} vs {oracle}");
}

#[test]
fn noiseless_ula_climbs_to_the_posterior_mode() {
    let post = simplest_linear().unwrap().posterior("gaussian").unwrap();
    let opts = UlaOptions {
        step: 0.02,
        inject_noise: false,
    };
    let s = ula_sample(&post, &ChainConfig::new(20_000, 3), &opts).unwrap();
    let last = s.row(s.len() - 1);
    let exact = linear_rto_sample(&post, &ChainConfig::new(20_000, 3), &RtoOptions::default()).unwrap();
    let sm = summarize(&exact, 0.95).unwrap();
    for j in 0..2 {
        assert!((last[j] - sm.mean[j]).abs() < 0.1, "{} vs {}", last[j], sm.mean[j]);
    }
}

#[test]
fn rlrto_draws_respect_a_box() {
    let prior = RegularizedGaussian::from_presets(
        RegBase::UnboundedUniform { dim: 3 },
        Some(RegPreset::Box {
            lower: -0.25,
            upper: 0.5,
        }),
        None,
        Space::discrete(3),
    )
    .unwrap();
    let post = condition(identity_likelihood(vec![1.0, -1.0, 0.1], 0.25), Prior::Regularized(prior), None).unwrap();
    let s = rlrto_sample(&post, &ChainConfig::new(2000, 4), &RlrtoOptions::default()).unwrap();
    assert_eq!(s.len(), 2000);
    assert!(s.data().iter().all(|v| (-0.25..=0.5).contains(v)));
    // P(N(1, 0.25) > 0.5) = Phi(1) = 0.8413
    let at_upper = s.column(0).iter().filter(|v| **v == 0.5).count() as f64 / 2000.0;
    assert!((0.81..0.87).contains(&at_upper), "{at_upper}");
}

#[test]
fn kept_draws_follow_burn_in_and_thinning() {
    let cfg = ChainConfig {
        burn_in: 100,
        thin: 7,
        ..ChainConfig::new(1000, 5)
    };
    let s = mh_sample(&flat_normal(0.0), &cfg, 1.0).unwrap();
    assert_eq!(s.len(), cfg.kept());
    assert_eq!(s.len(), 129);
    assert!(ChainConfig { burn_in: 1000, ..cfg }.validate().is_err());
}

#[test]
fn chains_are_reproducible_and_distinct() {
    let post = flat_normal(0.3);
    let mh = SamplerChoice::Mh { scale: 1.0 };
    let base = ChainConfig::new(500, 6);
    let a = mh.run(&post, &base.for_chain(0, None)).unwrap();
    let b = mh.run(&post, &base.for_chain(0, None)).unwrap();
    let c = mh.run(&post, &base.for_chain(1, Some(vec![3.0]))).unwrap();
    assert_eq!(a.data(), b.data());
    assert_ne!(a.data(), c.data());
    let merged = SampleSet::merge(vec![a, c]).unwrap();
    assert_eq!(merged.len(), 1000);
    assert_eq!(merged.chains(), &[(0, 500), (1, 500)]);
}

#[test]
fn capability_mismatch_is_typed() {
    let p = build("simplest-nonlinear", &ProblemOptions::default()).unwrap();
    let post = p.posterior("uniform").unwrap();
    let err = SamplerChoice::LinearRto(RtoOptions::default()).check(&post).unwrap_err();
    assert!(matches!(err, Error::MissingCapability { required: "rto-form", .. }), "{err}");
    let err = SamplerChoice::Myula { step: 1e-3 }.check(&post).unwrap_err();
    assert!(matches!(err, Error::MissingCapability { .. }), "{err}");
}

#[test]
fn gibbs_rows_carry_hyperparameters() {
    let p = build("deconvolution-1d", &ProblemOptions::default()).unwrap();
    let opt = p.prior("hierarchical-gmrf").unwrap();
    let bayesinv_core::problems::PriorSetup::Hierarchical { model, gibbs } = &opt.setup else {
        panic!("not hierarchical");
    };
    let s = hybrid_gibbs(model, &ChainConfig::new(50, 7), gibbs).unwrap();
    let n = p.x_true.len();
    assert_eq!(s.dim(), n + 2);
    assert_eq!(&s.columns()[n..], &["l".to_string(), "d".to_string()]);
    assert!(s.column(n).iter().chain(s.column(n + 1).iter()).all(|v| *v > 0.0));
    let again = hybrid_gibbs(model, &ChainConfig::new(50, 7), gibbs).unwrap();
    assert_eq!(s.data(), again.data());
}
