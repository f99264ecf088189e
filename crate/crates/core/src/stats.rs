//! Posterior summaries and latent-to-physical sample transformation.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::geometry::Transform;
use crate::linalg::DenseMatrix;
use crate::samplers::SampleSet;

/// Componentwise mean, unbiased standard deviation and equal-tail credible
/// interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub level: f64,
    pub n_used: usize,
}

impl Summary {
    pub fn ci_width(&self) -> Vec<f64> {
        self.ci_hi.iter().zip(&self.ci_lo).map(|(h, l)| h - l).collect()
    }
}

/// Quantile `p` of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(s: &SampleSet, level: f64) -> Result<Summary> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("credible level must lie in (0, 1)"));
    }
    let n = s.len();
    if n < 2 {
        return Err(Error::invalid("at least two draws are needed for a summary"));
    }
    let dim = s.dim();
    let (mut mean, mut std) = (vec![0.0; dim], vec![0.0; dim]);
    let (mut ci_lo, mut ci_hi) = (vec![0.0; dim], vec![0.0; dim]);
    let mut col = Vec::with_capacity(n);
    for j in 0..dim {
        col.clear();
        col.extend(s.rows().map(|r| r[j]));
        let m = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        col.sort_by(f64::total_cmp);
        mean[j] = m;
        std[j] = var.sqrt();
        ci_lo[j] = quantile_sorted(&col, 0.5 * (1.0 - level));
        ci_hi[j] = quantile_sorted(&col, 0.5 * (1.0 + level));
    }
    Ok(Summary {
        mean,
        std,
        ci_lo,
        ci_hi,
        level,
        n_used: n,
    })
}

/// Applies `t` to every draw.
pub fn transform_samples(s: &SampleSet, t: &dyn Transform) -> Result<SampleSet> {
    check_dim("transform domain", t.domain_dim(), s.dim())?;
    let mut out = s.map_rows(t.codomain_dim(), |r| t.apply(r))?;
    out.meta.transform = Some(t.name());
    Ok(out)
}

/// Unbiased sample covariance of the draws.
pub fn covariance(s: &SampleSet) -> Result<DenseMatrix> {
    let n = s.len();
    if n < 2 {
        return Err(Error::invalid("at least two draws are needed for a covariance"));
    }
    let d = s.dim();
    let mut mean = vec![0.0; d];
    for r in s.rows() {
        crate::linalg::axpy(1.0 / n as f64, r, &mut mean);
    }
    let mut c = DenseMatrix::zeros(d, d);
    for r in s.rows() {
        for i in 0..d {
            for j in 0..=i {
                let v = c.get(i, j) + (r[i] - mean[i]) * (r[j] - mean[j]);
                c.set(i, j, v);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = c.get(i, j) / (n - 1) as f64;
            c.set(i, j, v);
            c.set(j, i, v);
        }
    }
    Ok(c)
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
pub fn batch_means_se(xs: &[f64], batches: usize) -> Result<f64> {
    if batches < 2 || xs.len() < 2 * batches {
        return Err(Error::invalid("batch means need at least two batches of two draws"));
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (batches - 1) as f64;
    Ok((var / batches as f64).sqrt())
}
