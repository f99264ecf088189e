//! Run configuration: a flat `key = value` file with `[section]` headers,
//! overridden by command-line flags.
//!
//! ```text
//! problem = deconvolution-1d
//! prior = monotone
//! sampler = rlrto
//!
//! [chain]
//! samples = 500
//! seed = 7
//! chains = 0,0;1,1
//!
//! [output]
//! dir = out/deconv
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use bayesinv_core::error::{Error, Result};

/// Keys accepted in a configuration file, as `section.key` (top level: `key`).
pub const KEYS: [&str; 19] = [
    "problem",
    "prior",
    "sampler",
    "chain.samples",
    "chain.burn_in",
    "chain.thin",
    "chain.seed",
    "chain.chains",
    "problem.size",
    "problem.noise",
    "problem.omega",
    "problem.image",
    "problem.seed",
    "sampler.scale",
    "sampler.step",
    "sampler.smoothing",
    "sampler.restorator_cmd",
    "output.dir",
    "output.images",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub prior: Option<String>,
    pub sampler: Option<String>,
    pub n_samples: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
    /// One initial point per chain.
    pub chains: Option<Vec<Vec<f64>>>,
    pub size: Option<usize>,
    pub noise: Option<f64>,
    pub omega: Option<f64>,
    pub image: Option<PathBuf>,
    /// Seed of the synthetic data; defaults to the factory seed.
    pub problem_seed: Option<u64>,
    pub scale: Option<f64>,
    pub step: Option<f64>,
    pub smoothing: Option<f64>,
    pub restorator_cmd: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub images: Option<bool>,
}

/// Parses `a,b;c,d` into one point per `;`-separated group.
pub fn parse_points(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            g.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad coordinate '{v}' in chain start '{g}'")))
                })
                .collect()
        })
        .collect()
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::invalid(format!("bad value '{value}' for '{key}'")))
}

impl RunConfig {
    /// Sets one `section.key` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "problem" => self.problem = v.to_string(),
            "prior" => self.prior = Some(v.to_string()),
            "sampler" => self.sampler = Some(v.to_string()),
            "chain.samples" => self.n_samples = Some(parse(key, v)?),
            "chain.burn_in" => self.burn_in = Some(parse(key, v)?),
            "chain.thin" => self.thin = Some(parse(key, v)?),
            "chain.seed" => self.seed = Some(parse(key, v)?),
            "chain.chains" => self.chains = Some(parse_points(v)?),
            "problem.size" => self.size = Some(parse(key, v)?),
            "problem.noise" => self.noise = Some(parse(key, v)?),
            "problem.omega" => self.omega = Some(parse(key, v)?),
            "problem.image" => self.image = Some(PathBuf::from(v)),
            "problem.seed" => self.problem_seed = Some(parse(key, v)?),
            "sampler.scale" => self.scale = Some(parse(key, v)?),
            "sampler.step" => self.step = Some(parse(key, v)?),
            "sampler.smoothing" => self.smoothing = Some(parse(key, v)?),
            "sampler.restorator_cmd" => self.restorator_cmd = Some(v.to_string()),
            "output.dir" => self.out_dir = Some(PathBuf::from(v)),
            "output.images" => self.images = Some(parse(key, v)?),
            _ => {
                return Err(Error::invalid(format!(
                    "unknown configuration key '{key}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses configuration text. Later entries override earlier ones.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut entries = BTreeMap::new();
        let mut order = Vec::new();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected 'key = value'", k + 1)))?;
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            if entries.insert(full.clone(), value.trim().to_string()).is_none() {
                order.push(full);
            }
        }
        let mut cfg = RunConfig::default();
        for key in order {
            cfg.set(&key, &entries[&key])?;
        }
        if cfg.problem.is_empty() {
            return Err(Error::invalid("configuration does not name a problem"));
        }
        Ok(cfg)
    }

    /// Fills every unset field from `other`.
    pub fn or(self, other: RunConfig) -> RunConfig {
        RunConfig {
            problem: if self.problem.is_empty() { other.problem } else { self.problem },
            prior: self.prior.or(other.prior),
            sampler: self.sampler.or(other.sampler),
            n_samples: self.n_samples.or(other.n_samples),
            burn_in: self.burn_in.or(other.burn_in),
            thin: self.thin.or(other.thin),
            seed: self.seed.or(other.seed),
            chains: self.chains.or(other.chains),
            size: self.size.or(other.size),
            noise: self.noise.or(other.noise),
            omega: self.omega.or(other.omega),
            image: self.image.or(other.image),
            problem_seed: self.problem_seed.or(other.problem_seed),
            scale: self.scale.or(other.scale),
            step: self.step.or(other.step),
            smoothing: self.smoothing.or(other.smoothing),
            restorator_cmd: self.restorator_cmd.or(other.restorator_cmd),
            out_dir: self.out_dir.or(other.out_dir),
            images: self.images.or(other.images),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_overrides() {
        let text = "problem = inpainting\n# comment\n[chain]\nsamples = 20\nseed=7\nchains = 0,1;2,3\n[output]\ndir = out\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.problem, "inpainting");
        assert_eq!((c.n_samples, c.seed), (Some(20), Some(7)));
        assert_eq!(c.chains, Some(vec![vec![0.0, 1.0], vec![2.0, 3.0]]));
        let flags = RunConfig {
            seed: Some(9),
            ..RunConfig::default()
        };
        let merged = flags.or(c);
        assert_eq!((merged.seed, merged.n_samples, merged.problem.as_str()), (Some(9), Some(20), "inpainting"));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::parse("problem = x\n[chain]\nsamplez = 3\n").is_err());
        assert!(RunConfig::parse("[chain]\nsamples = 3\n").is_err());
        assert!(RunConfig::parse("problem = x\n[chain]\nsamples = many\n").is_err());
        assert!(RunConfig::parse("problem\n").is_err());
    }
}
