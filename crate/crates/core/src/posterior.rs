//! Likelihoods, priors and the posteriors they compose.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use num_traits::Float;

use crate::distributions::{Density, Gamma, GaussianForm, Properness};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Transform;
use crate::implicit::{RegBase, RegularizedGaussian, SmoothedPrior};
use crate::linalg::{dot, DenseCholesky, DenseMatrix};
use crate::operators::{to_dense, CholeskyWhitening, ForwardModel, SharedOperator};
use crate::proximal::{ProxFn, ProxTerm};

/// Gaussian noise covariance `Sigma_e`.
#[derive(Clone, Debug)]
pub enum Noise {
    /// `variance * I`
    Scalar(f64),
    Dense(Arc<DenseCholesky>),
}

impl Noise {
    pub fn scalar(variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::invalid(format!("noise variance {variance} is not positive")));
        }
        Ok(Noise::Scalar(variance))
    }

    pub fn scalar_variance(&self) -> Option<f64> {
        match self {
            Noise::Scalar(v) => Some(*v),
            Noise::Dense(_) => None,
        }
    }

    pub fn dense(cov: &DenseMatrix) -> Result<Self> {
        Ok(Noise::Dense(Arc::new(DenseCholesky::factor(cov)?)))
    }

    /// `Sigma^{-1/2} r` for some square root.
    pub fn whiten(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Noise::Scalar(v) => r.iter().map(|a| a / v.sqrt()).collect(),
            Noise::Dense(ch) => ch.solve_l(r),
        }
    }

    pub fn precision_times(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Noise::Scalar(v) => r.iter().map(|a| a / v).collect(),
            Noise::Dense(ch) => ch.solve(r),
        }
    }

    pub fn dim_compatible(&self, m: usize) -> bool {
        match self {
            Noise::Scalar(_) => true,
            Noise::Dense(ch) => ch.dim() == m,
        }
    }
}

/// `L(x) = exp(-1/2 |F(x) - y|^2_{Sigma^{-1}})`.
#[derive(Clone, Debug)]
pub struct Likelihood {
    model: ForwardModel,
    noise: Noise,
    data: Vec<f64>,
}

impl Likelihood {
    pub fn new(model: ForwardModel, noise: Noise, data: Vec<f64>) -> Result<Self> {
        check_dim("observed data", model.range_dim(), data.len())?;
        if !noise.dim_compatible(data.len()) {
            return Err(Error::invalid("noise covariance size differs from the data size"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observed data contain non-finite values"));
        }
        Ok(Likelihood { model, noise, data })
    }

    pub fn model(&self) -> &ForwardModel {
        &self.model
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.model.domain_dim()
    }

    pub fn with_noise(&self, noise: Noise) -> Result<Self> {
        Likelihood::new(self.model.clone(), noise, self.data.clone())
    }

    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let fx = self.model.forward(x)?;
        Ok(crate::linalg::sub(&fx, &self.data))
    }

    pub fn logd(&self, x: &[f64]) -> Result<f64> {
        let w = self.noise.whiten(&self.residual(x)?);
        Ok(-0.5 * dot(&w, &w))
    }

    /// `-J^T Sigma^{-1} (F(x) - y)`
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(x)?;
        let v: Vec<f64> = self.noise.precision_times(&r).into_iter().map(|a| -a).collect();
        self.model.vjp(x, &v)
    }
}

/// Prior information attached to a posterior.
#[derive(Clone)]
pub enum Prior {
    Explicit(Arc<dyn Density>),
    Regularized(RegularizedGaussian),
    Smoothed(SmoothedPrior),
    /// `exp(-strength f(x))` used through its prox (proximal Langevin).
    Proximal { f: ProxFn, strength: f64 },
}

impl fmt::Debug for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Explicit(d) => write!(f, "Explicit({})", d.name()),
            Prior::Regularized(r) => write!(f, "Regularized({:?})", r.base()),
            Prior::Smoothed(s) => write!(f, "Smoothed({:?}, alpha={})", s.inner, s.alpha),
            Prior::Proximal { f: p, strength } => write!(f, "Proximal({}, {strength})", p.name()),
        }
    }
}

impl Prior {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Prior::Explicit(d) => Some(d.dim()),
            Prior::Regularized(r) => Some(r.dim()),
            Prior::Smoothed(s) => Some(s.dim()),
            Prior::Proximal { .. } => None,
        }
    }

    /// Taxonomy label: explicit or implicit, and proper, improper or purely implicit.
    pub fn classification(&self) -> String {
        match self {
            Prior::Explicit(d) => format!("explicit/{}", d.properness().label()),
            Prior::Proximal { f, .. } => {
                let p = if f.kind() == crate::proximal::ProxKind::Box {
                    Properness::Proper
                } else {
                    Properness::Improper
                };
                format!("explicit/{}", p.label())
            }
            Prior::Regularized(r) => format!("implicit/{}", r.properness().label()),
            Prior::Smoothed(s) => format!("implicit/{}", s.properness().label()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Prior::Explicit(d) => d.name(),
            Prior::Regularized(_) => "regularized-gaussian".into(),
            Prior::Smoothed(s) => format!("smoothed({})", s.inner.id()),
            Prior::Proximal { f, .. } => format!("proximal({})", f.name()),
        }
    }
}

/// What a posterior can provide to samplers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Capabilities {
    pub logd: bool,
    pub grad: bool,
    /// Gradient of the likelihood term alone (proximal Langevin).
    pub likelihood_grad: bool,
    pub prox: bool,
    pub rto: bool,
    pub rlrto: bool,
}

impl Capabilities {
    pub fn has(&self, name: &str) -> bool {
        match name {
            "logd" => self.logd,
            "grad" => self.grad,
            "prox" => self.prox,
            "rto-form" => self.rto,
            "rlrto-form" => self.rlrto,
            "likelihood-grad" => self.likelihood_grad,
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        let mut names = Vec::new();
        for (flag, name) in [
            (self.logd, "logd"),
            (self.grad, "grad"),
            (self.prox, "prox"),
            (self.rto, "rto-form"),
            (self.rlrto, "rlrto-form"),
        ] {
            if flag {
                names.push(name);
            }
        }
        if names.is_empty() {
            "none".into()
        } else {
            names.join(", ")
        }
    }

    pub fn require(&self, name: &'static str) -> Result<()> {
        if self.has(name) {
            Ok(())
        } else {
            Err(Error::MissingCapability {
                required: name,
                available: self.describe(),
            })
        }
    }
}

/// Square-root form of a linear-Gaussian posterior for randomize-then-optimize.
#[derive(Clone, Debug)]
pub struct RtoForm {
    pub op: SharedOperator,
    pub noise: Noise,
    pub data: Vec<f64>,
    /// `None` for a flat base.
    pub prior: Option<GaussianForm>,
    pub prior_scale: f64,
}

/// Likelihood and prior conditioned on observed data, optionally in latent
/// mode `x = G(z)` where the prior is over `z`.
#[derive(Clone, Debug)]
pub struct Posterior {
    likelihood: Likelihood,
    prior: Prior,
    transform: Option<Arc<dyn Transform>>,
    dim: usize,
}

pub fn condition(likelihood: Likelihood, prior: Prior, transform: Option<Arc<dyn Transform>>) -> Result<Posterior> {
    let physical = likelihood.dim();
    let dim = match &transform {
        Some(t) => {
            check_dim("transform codomain", physical, t.codomain_dim())?;
            t.domain_dim()
        }
        None => physical,
    };
    if let Some(d) = prior.dim() {
        check_dim("prior dimension", dim, d)?;
    }
    if transform.is_some() && !matches!(prior, Prior::Explicit(_)) {
        return Err(Error::unsupported("latent mode needs an explicit prior on the latent variable"));
    }
    if let Prior::Regularized(_) = prior {
        if likelihood.model().as_linear().is_none() {
            return Err(Error::unsupported(
                "a regularized Gaussian prior needs a linear forward model (no sampler handles this pairing)",
            ));
        }
    }
    Ok(Posterior {
        likelihood,
        prior,
        transform,
        dim,
    })
}

impl Posterior {
    /// Dimension of the inferred variable (latent dimension in latent mode).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn likelihood(&self) -> &Likelihood {
        &self.likelihood
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn transform(&self) -> Option<&Arc<dyn Transform>> {
        self.transform.as_ref()
    }

    pub fn with_likelihood(&self, likelihood: Likelihood) -> Result<Posterior> {
        condition(likelihood, self.prior.clone(), self.transform.clone())
    }

    pub fn with_prior(&self, prior: Prior) -> Result<Posterior> {
        condition(self.likelihood.clone(), prior, self.transform.clone())
    }

    /// A copy whose restorator (if any) is private to one chain.
    pub fn for_chain(&self) -> Result<Posterior> {
        let mut p = self.clone();
        if let Prior::Smoothed(s) = &self.prior {
            p.prior = Prior::Smoothed(s.for_chain()?);
        }
        Ok(p)
    }

    pub fn capabilities(&self) -> Capabilities {
        let linear = self.likelihood.model().as_linear().is_some();
        let mut c = Capabilities {
            likelihood_grad: true,
            ..Capabilities::default()
        };
        match &self.prior {
            Prior::Explicit(d) => {
                c.logd = true;
                c.grad = d.has_gradient();
                c.rto = linear && self.transform.is_none() && d.gaussian_form().is_some();
            }
            Prior::Regularized(_) => c.rlrto = linear,
            Prior::Smoothed(_) => c.grad = true,
            Prior::Proximal { f, .. } => {
                c.prox = true;
                c.logd = f.has_eval();
            }
        }
        c
    }

    /// Maps an inferred vector to the physical parameter.
    pub fn to_physical(&self, z: &[f64]) -> Result<Vec<f64>> {
        match &self.transform {
            Some(t) => t.apply(z),
            None => {
                check_dim("parameter", self.dim, z.len())?;
                Ok(z.to_vec())
            }
        }
    }

    pub fn likelihood_logd(&self, z: &[f64]) -> Result<f64> {
        let x = self.to_physical(z)?;
        self.likelihood.logd(&x)
    }

    /// Likelihood gradient with respect to the inferred variable.
    pub fn likelihood_grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        let x = self.to_physical(z)?;
        let g = self.likelihood.grad(&x)?;
        match &self.transform {
            Some(t) => t.vjp(z, &g),
            None => Ok(g),
        }
    }

    pub fn prior_logd(&self, z: &[f64]) -> Result<f64> {
        check_dim("parameter", self.dim, z.len())?;
        match &self.prior {
            Prior::Explicit(d) => d.logd(z),
            Prior::Proximal { f, strength } => {
                let v = f.eval(z)?;
                Ok(if f.is_indicator() { -v } else { -strength * v })
            }
            Prior::Regularized(r) => r.logd(z),
            Prior::Smoothed(_) => Err(Error::unsupported("a smoothed restoration prior has no density")),
        }
    }

    /// Prior log-density gradient, or the smoothed drift for restoration priors.
    pub fn prior_grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("parameter", self.dim, z.len())?;
        match &self.prior {
            Prior::Explicit(d) => d.grad_logd(z),
            Prior::Smoothed(s) => s.drift(z),
            _ => Err(Error::MissingCapability {
                required: "grad",
                available: self.capabilities().describe(),
            }),
        }
    }

    pub fn logd(&self, z: &[f64]) -> Result<f64> {
        self.capabilities().require("logd")?;
        let lp = self.prior_logd(z)?;
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        Ok(self.likelihood_logd(z)? + lp)
    }

    pub fn grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.capabilities().require("grad")?;
        let mut g = self.likelihood_grad(z)?;
        let p = self.prior_grad(z)?;
        crate::linalg::axpy(1.0, &p, &mut g);
        Ok(g)
    }

    pub fn rto_form(&self) -> Result<RtoForm> {
        let caps = self.capabilities();
        let op = self
            .likelihood
            .model()
            .as_linear()
            .cloned()
            .ok_or_else(|| Error::unsupported("randomize-then-optimize needs a linear forward model"))?;
        let (prior, prior_scale) = match &self.prior {
            Prior::Explicit(d) if caps.rto => (d.gaussian_form(), 1.0),
            Prior::Regularized(r) => match r.base() {
                RegBase::Gaussian { form, scale } => (Some(form.clone()), *scale),
                RegBase::UnboundedUniform { .. } => (None, 1.0),
            },
            _ => {
                return Err(Error::MissingCapability {
                    required: "rto-form",
                    available: caps.describe(),
                })
            }
        };
        Ok(RtoForm {
            op,
            noise: self.likelihood.noise().clone(),
            data: self.likelihood.data().to_vec(),
            prior,
            prior_scale,
        })
    }

    /// Regularization terms of a regularized Gaussian prior.
    pub fn regularization(&self) -> Option<&[ProxTerm]> {
        match &self.prior {
            Prior::Regularized(r) => Some(r.terms()),
            _ => None,
        }
    }

    /// Checks whether the Gaussian part of a linear posterior has a trivial
    /// nullspace. Dense computation; limited to 512 unknowns.
    pub fn nullspace_diagnostic(&self) -> Result<NullspaceReport> {
        let form = self.rto_form()?;
        let n = self.dim;
        if n > 512 {
            return Err(Error::unsupported("nullspace diagnostic is limited to 512 unknowns"));
        }
        let a = to_dense(form.op.as_ref());
        let whitened: DenseMatrix = match &form.noise {
            Noise::Scalar(v) => {
                let s = 1.0 / v.sqrt();
                DenseMatrix::new(a.rows(), a.cols(), a.data().iter().map(|e| e * s).collect())?
            }
            Noise::Dense(ch) => to_dense(&crate::operators::Composition::new(
                Arc::new(CholeskyWhitening::new(ch.clone())),
                form.op.clone(),
            )?),
        };
        let mut h = whitened.to_nalgebra().transpose() * whitened.to_nalgebra();
        let likelihood_only = h.clone();
        if let Some(p) = &form.prior {
            let g = to_dense(p.sqrt_precision.as_ref()).to_nalgebra();
            h += (g.transpose() * g) * form.prior_scale;
        }
        let eig = |m: nalgebra::DMatrix<f64>| {
            let e = m.symmetric_eigen().eigenvalues;
            let max = e.iter().fold(0.0f64, |a, v| a.max(*v));
            let min = e.iter().fold(f64::INFINITY, |a, v| a.min(*v));
            let tol = 1e-10 * max.max(f64::MIN_POSITIVE);
            (min, max, e.iter().filter(|v| **v <= tol).count())
        };
        let (min, max, nullity) = eig(h);
        let (_, _, likelihood_nullity) = eig(likelihood_only);
        Ok(NullspaceReport {
            dim: n,
            smallest_eigenvalue: min,
            largest_eigenvalue: max,
            nullity,
            likelihood_nullity,
        })
    }
}

/// Spectrum summary of the posterior precision `A^T Sigma^{-1} A + Lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullspaceReport {
    pub dim: usize,
    pub smallest_eigenvalue: f64,
    pub largest_eigenvalue: f64,
    /// Directions with (numerically) zero posterior precision.
    pub nullity: usize,
    /// Directions the data do not inform.
    pub likelihood_nullity: usize,
}

impl NullspaceReport {
    pub fn gaussian_part_proper(&self) -> bool {
        self.nullity == 0
    }
}

/// Role of the second hyperparameter in a hierarchical model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrengthRole {
    /// `d` multiplies the non-indicator regularizers `|D x|_1`.
    Regularization,
    /// `d` scales the Gaussian base precision `|Gamma x|^2 / 2`.
    GaussianPrecision,
}

/// The pattern `(d, l, x | y)`: noise precision `l`, prior hyperparameter `d`
/// and parameter `x` with a regularized Gaussian prior.
#[derive(Clone, Debug)]
pub struct Hierarchical {
    pub op: SharedOperator,
    pub data: Vec<f64>,
    pub noise_hyper: Gamma,
    pub strength_hyper: Option<(Gamma, StrengthRole)>,
    pub x_prior: RegularizedGaussian,
}

impl Hierarchical {
    pub fn new(
        op: SharedOperator,
        data: Vec<f64>,
        noise_hyper: Gamma,
        strength_hyper: Option<(Gamma, StrengthRole)>,
        x_prior: RegularizedGaussian,
    ) -> Result<Self> {
        check_dim("hierarchical data", op.range_dim(), data.len())?;
        check_dim("hierarchical prior", op.domain_dim(), x_prior.dim())?;
        match strength_hyper {
            Some((_, StrengthRole::Regularization)) if x_prior.strength().is_none() => {
                return Err(Error::invalid("strength hyperparameter needs a non-indicator regularizer"))
            }
            Some((_, StrengthRole::GaussianPrecision)) if !matches!(x_prior.base(), RegBase::Gaussian { .. }) => {
                return Err(Error::invalid("precision hyperparameter needs a Gaussian base"))
            }
            _ => {}
        }
        Ok(Hierarchical {
            op,
            data,
            noise_hyper,
            strength_hyper,
            x_prior,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.domain_dim()
    }

    /// The conditional `x | l, d, y`.
    pub fn conditional(&self, l: f64, d: Option<f64>) -> Result<Posterior> {
        let prior = match (self.strength_hyper, d) {
            (Some((_, StrengthRole::Regularization)), Some(d)) => self.x_prior.with_strength(d)?,
            (Some((_, StrengthRole::GaussianPrecision)), Some(d)) => self.x_prior.with_precision_scale(d)?,
            _ => self.x_prior.clone(),
        };
        let lik = Likelihood::new(
            ForwardModel::Linear(self.op.clone()),
            Noise::scalar(1.0 / l)?,
            self.data.clone(),
        )?;
        condition(lik, Prior::Regularized(prior), None)
    }

    /// `(shape, rate)` of `l | x, y`.
    pub fn noise_conditional(&self, x: &[f64]) -> (f64, f64) {
        let r = crate::linalg::sub(&self.op.apply_unchecked(x), &self.data);
        gamma_noise_update(self.noise_hyper.shape, self.noise_hyper.rate, r.len(), dot(&r, &r))
    }

    /// `(shape, rate)` of `d | x`.
    pub fn strength_conditional(&self, x: &[f64]) -> Result<Option<(f64, f64)>> {
        let Some((hyper, role)) = self.strength_hyper else {
            return Ok(None);
        };
        Ok(Some(match role {
            StrengthRole::Regularization => {
                let mut rows = 0usize;
                let mut total = 0.0;
                for t in self.x_prior.terms().iter().filter(|t| !t.f.is_indicator()) {
                    let lx = t.op.apply(x)?;
                    rows += lx.len();
                    total += t.f.eval(&lx)?;
                }
                (hyper.shape + rows as f64, hyper.rate + total)
            }
            StrengthRole::GaussianPrecision => {
                let RegBase::Gaussian { form, .. } = self.x_prior.base() else {
                    unreachable!("checked at construction")
                };
                let gx = form.sqrt_precision.apply(&crate::linalg::sub(x, &form.mean))?;
                (hyper.shape + 0.5 * gx.len() as f64, hyper.rate + 0.5 * dot(&gx, &gx))
            }
        }))
    }
}

/// Closed-form `l | residual` update used by the Gibbs sampler.
pub fn gamma_noise_update(alpha: f64, beta: f64, m: usize, residual_sq: f64) -> (f64, f64) {
    (alpha + 0.5 * m as f64, beta + 0.5 * residual_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{gaussian, unbounded_uniform, CovForm};
    use crate::geometry::ExpTransform;
    use crate::implicit::{restoration_prior, smoothed_prior, NonnegRestorator, RegPreset};
    use crate::operators::dense_from_matrix;
    use crate::geometry::Space;
    use alloc::vec;

    fn simplest(prior: Prior, transform: Option<Arc<dyn Transform>>) -> Result<Posterior> {
        let a: SharedOperator = Arc::new(dense_from_matrix(1, 2, vec![1.0, 1.0]).unwrap());
        let lik = Likelihood::new(ForwardModel::Linear(a), Noise::scalar(0.1).unwrap(), vec![3.0338]).unwrap();
        condition(lik, prior, transform)
    }

    fn gauss_prior() -> Prior {
        Prior::Explicit(Arc::new(gaussian(vec![0.0; 2], CovForm::Scalar(10.0)).unwrap()))
    }

    #[test]
    fn capabilities_by_prior() {
        let p = simplest(gauss_prior(), None).unwrap();
        let c = p.capabilities();
        assert!(c.logd && c.grad && c.rto && !c.rlrto);
        let base = RegBase::Gaussian {
            form: gaussian(vec![0.0; 2], CovForm::Scalar(10.0)).unwrap().gaussian_form().unwrap(),
            scale: 1.0,
        };
        let rg = RegularizedGaussian::from_presets(base, Some(RegPreset::NonNegativity), None, Space::discrete(2)).unwrap();
        let c = simplest(Prior::Regularized(rg), None).unwrap().capabilities();
        assert!(c.rlrto && !c.logd && !c.grad && !c.rto);
        let sp = smoothed_prior(restoration_prior(Arc::new(NonnegRestorator), Space::discrete(2)), 1e-3).unwrap();
        let p = simplest(Prior::Smoothed(sp), None).unwrap();
        let c = p.capabilities();
        assert!(c.grad && !c.logd && !c.rto && !c.rlrto);
        assert!(matches!(p.logd(&[1.0, 1.0]), Err(Error::MissingCapability { .. })));
    }

    #[test]
    fn gradient_vanishes_at_conjugate_mean() {
        let p = simplest(gauss_prior(), None).unwrap();
        // P = [[10.1, 10], [10, 10.1]], b = A^T y / 0.1
        let b = 3.0338 / 0.1;
        let m = b / 20.1;
        let g = p.grad(&[m, m]).unwrap();
        assert!(crate::linalg::norm_inf(&g) < 1e-8, "{g:?}");
    }

    #[test]
    fn latent_mode() {
        let t: Arc<dyn Transform> = Arc::new(ExpTransform { dim: 2 });
        let z = Prior::Explicit(Arc::new(gaussian(vec![0.0; 2], CovForm::Scalar(1.0)).unwrap()));
        let p = simplest(z, Some(t)).unwrap();
        let expect = -0.5 * (2.0f64 - 3.0338).powi(2) / 0.1;
        assert!((p.logd(&[0.0, 0.0]).unwrap() - expect).abs() < 1e-12);
        assert!(!p.capabilities().rto);
        let zp = [0.3, -0.2];
        let g = p.grad(&zp).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let (mut a, mut b) = (zp, zp);
            a[i] += h;
            b[i] -= h;
            let fd = (p.logd(&a).unwrap() - p.logd(&b).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-4 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn nullspace_report() {
        let flat = Prior::Explicit(Arc::new(unbounded_uniform(2).unwrap()));
        let p = simplest(flat, None).unwrap();
        assert!(p.nullspace_diagnostic().is_err(), "flat explicit prior has no rto form");
        let base = RegBase::UnboundedUniform { dim: 2 };
        let rg = RegularizedGaussian::from_presets(base, Some(RegPreset::NonNegativity), None, Space::discrete(2)).unwrap();
        let r = simplest(Prior::Regularized(rg), None).unwrap().nullspace_diagnostic().unwrap();
        assert_eq!((r.nullity, r.likelihood_nullity), (1, 1));
        let r = simplest(gauss_prior(), None).unwrap().nullspace_diagnostic().unwrap();
        assert!(r.gaussian_part_proper());
        assert!((r.smallest_eigenvalue - 0.1).abs() < 1e-9 && (r.largest_eigenvalue - 20.1).abs() < 1e-9);
    }

    #[test]
    fn dimension_checks() {
        let p = Prior::Explicit(Arc::new(gaussian(vec![0.0; 3], CovForm::Scalar(1.0)).unwrap()));
        assert!(matches!(simplest(p, None), Err(Error::DimensionMismatch { .. })));
    }
}
