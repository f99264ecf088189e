//! `list`, `run` and `check`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use bayesinv_core::error::{Error, Result};
use bayesinv_core::implicit::{smoothed_prior, RestorationPrior};
use bayesinv_core::posterior::{Posterior, Prior};
use bayesinv_core::problems::{build, zero_filled, PriorOption, PriorSetup, ProblemInstance, ProblemOptions, PROBLEMS};
use bayesinv_core::samplers::{
    hybrid_gibbs, ChainConfig, GibbsOptions, RlrtoOptions, RtoOptions, SampleSet, SamplerChoice, UlaOptions, SAMPLERS,
};
use bayesinv_core::stats::{summarize, transform_samples};
use bayesinv_core::posterior::Hierarchical;

use crate::checks::{format_table, run_checks, CheckOptions};
use crate::config::RunConfig;
use crate::external::ExternalRestorator;
use crate::formats::{read_pgm, value_range, write_pgm, write_samples_csv, write_summary_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CAPABILITY: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const CREDIBLE_LEVEL: f64 = 0.95;

/// Registry dump of problems, their priors and the samplers.
pub fn cmd_list() -> Result<String> {
    let mut s = String::from("problems:\n");
    for name in PROBLEMS {
        let p = build(name, &ProblemOptions::default())?;
        let _ = writeln!(s, "  {name}");
        for prior in &p.default_priors {
            let _ = writeln!(s, "    prior {} [{}]: {}", prior.name, prior.sampler_id(), prior.description);
        }
    }
    s.push_str("samplers:\n");
    for (id, cap) in SAMPLERS {
        let _ = writeln!(s, "  {id} (requires: {cap})");
    }
    Ok(s)
}

/// Result of `run`: exit code, a one-line message and the kept draws.
pub struct RunOutcome {
    pub exit_code: i32,
    pub message: String,
    pub out_dir: PathBuf,
    pub samples: Option<SampleSet>,
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::MissingCapability { .. } | Error::Unsupported(_) => EXIT_CAPABILITY,
        Error::Numerical { .. } | Error::Restoration(_) => EXIT_NUMERICAL,
        _ => EXIT_ERROR,
    }
}

fn problem_options(cfg: &RunConfig) -> Result<ProblemOptions> {
    let image = match &cfg.image {
        Some(path) => {
            let img = read_pgm(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
            Some((img.rows, img.cols, img.pixels))
        }
        None => None,
    };
    Ok(ProblemOptions {
        seed: cfg.problem_seed,
        size: cfg.size,
        noise_level: cfg.noise,
        omega: cfg.omega,
        image,
    })
}

fn sampler_choice(id: &str, recommended: Option<&SamplerChoice>, cfg: &RunConfig) -> Result<SamplerChoice> {
    let base = recommended.filter(|r| r.id() == id).cloned();
    let chosen = match (id, base) {
        ("mh", b) => SamplerChoice::Mh {
            scale: cfg.scale.or(match b {
                Some(SamplerChoice::Mh { scale }) => Some(scale),
                _ => None,
            })
            .unwrap_or(0.5),
        },
        ("ula", b) => {
            let mut o = match b {
                Some(SamplerChoice::Ula(o)) => o,
                _ => UlaOptions::new(1e-3),
            };
            o.step = cfg.step.unwrap_or(o.step);
            SamplerChoice::Ula(o)
        }
        ("pgla", b) => SamplerChoice::Pgla {
            step: cfg.step.or(match b {
                Some(SamplerChoice::Pgla { step }) => Some(step),
                _ => None,
            })
            .unwrap_or(1e-3),
        },
        ("myula", b) => SamplerChoice::Myula {
            step: cfg.step.or(match b {
                Some(SamplerChoice::Myula { step }) => Some(step),
                _ => None,
            })
            .unwrap_or(1e-3),
        },
        ("linear-rto", Some(b)) | ("rlrto", Some(b)) => b,
        ("linear-rto", None) => SamplerChoice::LinearRto(RtoOptions::default()),
        ("rlrto", None) => SamplerChoice::Rlrto(RlrtoOptions::default()),
        ("gibbs", _) => {
            return Err(Error::MissingCapability {
                required: "hierarchical",
                available: "a single-level prior".into(),
            })
        }
        _ => {
            let ids: Vec<&str> = SAMPLERS.iter().map(|(id, _)| *id).collect();
            return Err(Error::invalid(format!("unknown sampler '{id}' (known: {})", ids.join(", "))));
        }
    };
    Ok(chosen)
}

/// Applies the smoothing and external-restorator overrides.
fn adjust_prior(prior: &Prior, cfg: &RunConfig) -> Result<Prior> {
    if cfg.smoothing.is_none() && cfg.restorator_cmd.is_none() {
        return Ok(prior.clone());
    }
    let Prior::Smoothed(sp) = prior else {
        return Err(Error::unsupported(
            "smoothing and external restorators apply only to restoration priors",
        ));
    };
    let inner = match &cfg.restorator_cmd {
        Some(cmd) => RestorationPrior::external(Arc::new(ExternalRestorator::new(cmd)?), sp.inner.space().clone()),
        None => sp.inner.clone(),
    };
    let mut out = smoothed_prior(inner, cfg.smoothing.unwrap_or(sp.alpha))?;
    out.alias = sp.alias;
    Ok(Prior::Smoothed(out))
}

enum Plan {
    Direct { post: Posterior, sampler: SamplerChoice },
    Gibbs { model: Hierarchical, gibbs: GibbsOptions },
}

fn plan(p: &ProblemInstance, option: &PriorOption, cfg: &RunConfig) -> Result<Plan> {
    match &option.setup {
        PriorSetup::Direct {
            prior,
            transform,
            sampler,
        } => {
            let id = cfg.sampler.as_deref().unwrap_or(sampler.id());
            let chosen = sampler_choice(id, Some(sampler), cfg)?;
            let post = bayesinv_core::posterior::condition(p.likelihood()?, adjust_prior(prior, cfg)?, transform.clone())?;
            chosen.check(&post)?;
            Ok(Plan::Direct { post, sampler: chosen })
        }
        PriorSetup::Hierarchical { model, gibbs } => {
            if let Some(id) = cfg.sampler.as_deref().filter(|id| *id != "gibbs") {
                let Some((_, cap)) = SAMPLERS.iter().find(|(s, _)| *s == id) else {
                    return Err(Error::invalid(format!("unknown sampler '{id}'")));
                };
                return Err(Error::MissingCapability {
                    required: cap,
                    available: format!("hierarchical (prior '{}' runs with gibbs)", option.name),
                });
            }
            if cfg.restorator_cmd.is_some() || cfg.smoothing.is_some() {
                return Err(Error::unsupported("hierarchical priors take no restorator"));
            }
            Ok(Plan::Gibbs {
                model: model.clone(),
                gibbs: *gibbs,
            })
        }
    }
}

/// Runs one chain per start concurrently and merges them by chain index.
fn run_chains(plan: &Plan, base: &ChainConfig, starts: &[Option<Vec<f64>>]) -> Result<SampleSet> {
    let results: Vec<Result<SampleSet>> = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .iter()
            .enumerate()
            .map(|(k, start)| {
                let cfg = base.for_chain(k as u64, start.clone());
                scope.spawn(move || match plan {
                    Plan::Direct { post, sampler } => sampler.run(&post.for_chain()?, &cfg),
                    Plan::Gibbs { model, gibbs } => hybrid_gibbs(model, &cfg, gibbs),
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::numerical("chain thread panicked", f64::NAN))))
            .collect()
    });
    SampleSet::merge(results.into_iter().collect::<Result<Vec<_>>>()?)
}

fn chain_config(p: &ProblemInstance, cfg: &RunConfig) -> ChainConfig {
    let d = &p.default_cfg;
    ChainConfig {
        n_samples: cfg.n_samples.unwrap_or(d.n_samples),
        // an explicit sample count without burn-in keeps every draw
        burn_in: cfg.burn_in.unwrap_or(if cfg.n_samples.is_some() { 0 } else { d.burn_in }),
        thin: cfg.thin.unwrap_or(if cfg.n_samples.is_some() { 1 } else { d.thin }),
        seed: cfg.seed.unwrap_or(d.seed),
        ..ChainConfig::default()
    }
}

fn fmt_json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn meta_json(
    p: &ProblemInstance,
    option: &PriorOption,
    s: &SampleSet,
    cfg: &ChainConfig,
    starts: &[Option<Vec<f64>>],
    status: &str,
) -> Value {
    let m = &s.meta;
    let chains: Vec<Value> = s
        .chains()
        .iter()
        .map(|(k, rows)| {
            json!({
                "index": k,
                "rows": rows,
                "initial_point": starts.get(*k as usize).cloned().flatten(),
            })
        })
        .collect();
    let failures: Vec<Value> = s
        .failures
        .iter()
        .map(|(k, f)| json!({"chain": k, "iteration": f.iteration, "reason": f.reason}))
        .collect();
    let solver = m.solver.as_ref().map(|st| {
        json!({
            "solver": st.solver,
            "tolerance": fmt_json_f64(st.tolerance),
            "solves": st.solves,
            "unconverged": st.failures,
            "mean_iterations": fmt_json_f64(st.mean_iterations),
            "max_residual": fmt_json_f64(st.max_residual),
        })
    });
    let params: serde_json::Map<String, Value> = m.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "status": status,
        "problem": p.name,
        "problem_seed": p.seed,
        "noise_std": fmt_json_f64(p.noise_std),
        "prior": option.name,
        "prior_description": option.description,
        "prior_class": m.prior_class,
        "sampler": m.sampler,
        "seed": cfg.seed,
        "n_samples": cfg.n_samples,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "kept_draws": s.len(),
        "columns": s.columns(),
        "chains": chains,
        "acceptance_rate": m.acceptance_rate.map(fmt_json_f64),
        "solver": solver,
        "restorator": m.restorator,
        "transform": m.transform,
        "assumptions": m.assumptions,
        "params": params,
        "failures": failures,
        "notes": p.notes,
        "credible_level": CREDIBLE_LEVEL,
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::invalid(format!("cannot write {}: {e}", path.display()))
}

fn write_images(dir: &Path, p: &ProblemInstance, summary: &bayesinv_core::stats::Summary) -> Result<Vec<String>> {
    let Some((rows, cols)) = p.image_shape() else {
        return Ok(Vec::new());
    };
    let n = rows * cols;
    let (lo, hi) = value_range(&p.x_true);
    let mut written = Vec::new();
    let mut put = |name: &str, values: &[f64], lo: f64, hi: f64| -> Result<()> {
        let path = dir.join(name);
        write_pgm(&path, rows, cols, &values[..n], lo, hi, 65535).map_err(|e| io_err(&path, e))?;
        written.push(name.to_string());
        Ok(())
    };
    put("truth.pgm", &p.x_true, lo, hi)?;
    put("mean.pgm", &summary.mean, lo, hi)?;
    let (_, smax) = value_range(&summary.std[..n]);
    put("std.pgm", &summary.std, 0.0, smax)?;
    let width = summary.ci_width();
    let (_, wmax) = value_range(&width[..n]);
    put("ci_width.pgm", &width, 0.0, wmax)?;
    if p.y_obs.len() < n {
        if let Ok(z) = zero_filled(p) {
            put("data.pgm", &z, lo, hi)?;
        }
    }
    Ok(written)
}

/// Executes a run and writes its artifacts to the output directory.
pub fn cmd_run(cfg: &RunConfig) -> RunOutcome {
    let out_dir = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.problem));
    let fail = |code: i32, message: String| RunOutcome {
        exit_code: code,
        message,
        out_dir: out_dir.clone(),
        samples: None,
    };
    let prepared = (|| -> Result<_> {
        let p = build(&cfg.problem, &problem_options(cfg)?)?;
        let option = match &cfg.prior {
            Some(name) => p.prior(name)?.clone(),
            None => p.default_prior().clone(),
        };
        let plan = plan(&p, &option, cfg)?;
        let chain = chain_config(&p, cfg);
        chain.validate()?;
        Ok((p, option, plan, chain))
    })();
    let (p, option, plan, chain) = match prepared {
        Ok(v) => v,
        Err(e) => return fail(exit_code_for(&e), e.to_string()),
    };
    let starts: Vec<Option<Vec<f64>>> = match (&cfg.chains, option.initial_points.is_empty()) {
        (Some(points), _) => points.iter().cloned().map(Some).collect(),
        (None, false) => option.initial_points.iter().cloned().map(Some).collect(),
        (None, true) => vec![None],
    };
    let samples = match run_chains(&plan, &chain, &starts) {
        Ok(s) => s,
        Err(e) => return fail(exit_code_for(&e), e.to_string()),
    };
    let status = if samples.failures.is_empty() { "ok" } else { "numerical-failure" };
    match write_artifacts(&out_dir, &p, &option, &plan, &samples, &chain, &starts, cfg.images.unwrap_or(true), status) {
        Ok(()) => {}
        Err(e) => return fail(EXIT_ERROR, e.to_string()),
    }
    if let Some((k, f)) = samples.failures.first() {
        return RunOutcome {
            exit_code: EXIT_NUMERICAL,
            message: format!(
                "chain {k} failed at iteration {}: {}; partial results ({} draws) in {}",
                f.iteration,
                f.reason,
                samples.len(),
                out_dir.display()
            ),
            out_dir,
            samples: Some(samples),
        };
    }
    RunOutcome {
        exit_code: EXIT_OK,
        message: format!("{} draws written to {}", samples.len(), out_dir.display()),
        out_dir,
        samples: Some(samples),
    }
}

#[allow(clippy::too_many_arguments)]
fn write_artifacts(
    dir: &Path,
    p: &ProblemInstance,
    option: &PriorOption,
    plan: &Plan,
    samples: &SampleSet,
    chain: &ChainConfig,
    starts: &[Option<Vec<f64>>],
    images: bool,
    status: &str,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let physical = match plan {
        Plan::Direct { post, .. } => match post.transform() {
            Some(t) => {
                let path = dir.join("latent_samples.csv");
                write_samples_csv(&path, samples).map_err(|e| io_err(&path, e))?;
                transform_samples(samples, t.as_ref())?
            }
            None => samples.clone(),
        },
        Plan::Gibbs { .. } => samples.clone(),
    };
    let path = dir.join("samples.csv");
    write_samples_csv(&path, &physical).map_err(|e| io_err(&path, e))?;
    let mut meta = meta_json(p, option, samples, chain, starts, status);
    if physical.len() >= 2 {
        let summary = summarize(&physical, CREDIBLE_LEVEL)?;
        let path = dir.join("summary.csv");
        write_summary_csv(&path, physical.columns(), &summary).map_err(|e| io_err(&path, e))?;
        if images {
            meta["images"] = json!(write_images(dir, p, &summary)?);
        }
    }
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(())
}

/// Runs the fast checks; returns the table and whether all passed.
pub fn cmd_check(opts: &CheckOptions) -> (String, bool) {
    let results = run_checks(opts);
    let ok = results.iter().all(|r| r.passed);
    (format_table(&results), ok)
}
