//! Explicit densities: Gaussian, GMRF, bounded and unbounded uniform, Gamma.
//!
//! All log-densities are unnormalized: additive constants are dropped.
//! `-inf` marks points outside the support.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, DenseCholesky, DenseMatrix};
use crate::operators::{
    finite_difference, Boundary, CholeskyWhitening, FiniteDifference, IdentityOperator, LinearOperator,
    ScaledOperator, SharedOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Properness {
    Proper,
    Improper,
    /// Depends on the observed data (empirical Bayes); no data-free density.
    DataDependent,
    /// No underlying distribution is known to exist.
    PurelyImplicit,
}

impl Properness {
    pub fn label(self) -> &'static str {
        match self {
            Properness::Proper => "proper",
            Properness::Improper => "improper",
            Properness::DataDependent => "data-dependent (empirical Bayes)",
            Properness::PurelyImplicit => "purely implicit",
        }
    }
}

/// Square-root form `-1/2 |Gamma (x - mean)|^2` of a (possibly improper)
/// Gaussian, as consumed by the randomize-then-optimize samplers.
#[derive(Clone, Debug)]
pub struct GaussianForm {
    pub mean: Vec<f64>,
    pub sqrt_precision: SharedOperator,
}

/// An unnormalized log-density with optional gradient and direct sampler.
pub trait Density: Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    fn properness(&self) -> Properness;

    /// Log-density up to an additive constant; `-inf` outside the support.
    fn logd(&self, x: &[f64]) -> Result<f64>;

    fn has_gradient(&self) -> bool {
        false
    }

    fn grad_logd(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::unsupported(format!("{} has no gradient", self.name())))
    }

    fn has_sampler(&self) -> bool {
        false
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Err(Error::unsupported(format!(
            "{} ({}) cannot be sampled directly",
            self.name(),
            self.properness().label()
        )))
    }

    fn gaussian_form(&self) -> Option<GaussianForm> {
        None
    }
}

pub fn standard_normal_vec(rng: &mut dyn RngCore, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[derive(Debug, Clone)]
enum Covariance {
    Scalar(f64),
    Dense(Arc<DenseCholesky>),
}

/// Covariance argument of [`gaussian`].
#[derive(Debug, Clone)]
pub enum CovForm {
    /// `c I`
    Scalar(f64),
    Matrix(DenseMatrix),
}

#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: Vec<f64>,
    cov: Covariance,
}

/// `N(mean, cov)`; `cov` must be symmetric positive definite.
pub fn gaussian(mean: Vec<f64>, cov: CovForm) -> Result<Gaussian> {
    if mean.is_empty() {
        return Err(Error::invalid("Gaussian needs dimension >= 1"));
    }
    let cov = match cov {
        CovForm::Scalar(c) if c > 0.0 && c.is_finite() => Covariance::Scalar(c),
        CovForm::Scalar(c) => return Err(Error::invalid(format!("covariance scale {c} is not positive"))),
        CovForm::Matrix(m) => {
            check_dim("Gaussian covariance", mean.len(), m.rows())?;
            Covariance::Dense(Arc::new(DenseCholesky::factor(&m)?))
        }
    };
    Ok(Gaussian { mean, cov })
}

impl Gaussian {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    fn precision_times(&self, r: &[f64]) -> Vec<f64> {
        match &self.cov {
            Covariance::Scalar(c) => r.iter().map(|v| v / c).collect(),
            Covariance::Dense(ch) => ch.solve(r),
        }
    }
}

impl Density for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }
    fn name(&self) -> String {
        "gaussian".into()
    }
    fn properness(&self) -> Properness {
        Properness::Proper
    }
    fn logd(&self, x: &[f64]) -> Result<f64> {
        check_dim("Gaussian logd", self.dim(), x.len())?;
        let r = crate::linalg::sub(x, &self.mean);
        Ok(match &self.cov {
            Covariance::Scalar(c) => -0.5 * dot(&r, &r) / c,
            Covariance::Dense(ch) => {
                let w = ch.solve_l(&r);
                -0.5 * dot(&w, &w)
            }
        })
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn grad_logd(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("Gaussian gradient", self.dim(), x.len())?;
        let r = crate::linalg::sub(x, &self.mean);
        Ok(self.precision_times(&r).into_iter().map(|v| -v).collect())
    }
    fn has_sampler(&self) -> bool {
        true
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let z = standard_normal_vec(rng, self.dim());
        let dz = match &self.cov {
            Covariance::Scalar(c) => z.iter().map(|v| v * c.sqrt()).collect(),
            Covariance::Dense(ch) => ch.mul_l(&z),
        };
        Ok(crate::linalg::add(&self.mean, &dz))
    }
    fn gaussian_form(&self) -> Option<GaussianForm> {
        let n = self.dim();
        let sqrt_precision: SharedOperator = match &self.cov {
            Covariance::Scalar(c) => Arc::new(ScaledOperator {
                inner: Arc::new(IdentityOperator { dim: n }),
                scale: 1.0 / c.sqrt(),
            }),
            Covariance::Dense(ch) => Arc::new(CholeskyWhitening::new(ch.clone())),
        };
        Some(GaussianForm {
            mean: self.mean.clone(),
            sqrt_precision,
        })
    }
}

/// Gaussian Markov random field `-s/2 |D (x - mean)|^2` with first-order
/// differences `D`. Improper for Neumann boundaries (constants are free).
#[derive(Debug, Clone)]
pub struct Gmrf {
    mean: Vec<f64>,
    precision: f64,
    diff: Arc<FiniteDifference>,
    shape: Vec<usize>,
}

pub fn gmrf(shape: &[usize], precision_scale: f64, boundary: Boundary) -> Result<Gmrf> {
    if !(precision_scale > 0.0 && precision_scale.is_finite()) {
        return Err(Error::invalid("GMRF precision must be positive"));
    }
    let diff = finite_difference(shape, boundary)?;
    let n = diff.domain_dim();
    Ok(Gmrf {
        mean: vec![0.0; n],
        precision: precision_scale,
        diff: Arc::new(diff),
        shape: shape.to_vec(),
    })
}

impl Gmrf {
    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        check_dim("GMRF mean", self.mean.len(), mean.len())?;
        self.mean = mean;
        Ok(self)
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn difference_operator(&self) -> Arc<FiniteDifference> {
        self.diff.clone()
    }
}

impl Density for Gmrf {
    fn dim(&self) -> usize {
        self.mean.len()
    }
    fn name(&self) -> String {
        format!("gmrf({:?})", self.diff.boundary())
    }
    fn properness(&self) -> Properness {
        match self.diff.boundary() {
            Boundary::Neumann => Properness::Improper,
            Boundary::Zero => Properness::Proper,
        }
    }
    fn logd(&self, x: &[f64]) -> Result<f64> {
        check_dim("GMRF logd", self.dim(), x.len())?;
        let dx = self.diff.apply_unchecked(&crate::linalg::sub(x, &self.mean));
        Ok(-0.5 * self.precision * dot(&dx, &dx))
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn grad_logd(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("GMRF gradient", self.dim(), x.len())?;
        let dx = self.diff.apply_unchecked(&crate::linalg::sub(x, &self.mean));
        Ok(self
            .diff
            .adjoint_unchecked(&dx)
            .into_iter()
            .map(|v| -self.precision * v)
            .collect())
    }
    fn has_sampler(&self) -> bool {
        self.properness() == Properness::Proper
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        if self.properness() != Properness::Proper {
            return Err(Error::unsupported("an improper GMRF cannot be sampled directly"));
        }
        let s = self.precision.sqrt();
        let z = standard_normal_vec(rng, self.diff.range_dim());
        let dx = if self.shape.len() == 1 {
            // D is lower bidiagonal with unit diagonal: invert by a running sum
            let mut acc = 0.0;
            z.iter()
                .map(|v| {
                    acc += v / s;
                    acc
                })
                .collect::<Vec<f64>>()
        } else {
            // argmin |sqrt(s) D x - z|^2 has covariance (s D^T D)^{-1}
            let op: SharedOperator = Arc::new(ScaledOperator {
                inner: self.diff.clone(),
                scale: s,
            });
            let ls = crate::optim::StackedLeastSquares::new(vec![crate::optim::LsBlock::new(op, z, 1.0)])?;
            let (x, report) = crate::optim::cgls(&ls, &vec![0.0; self.dim()], 1e-10, 10 * self.dim())?;
            if !report.converged {
                return Err(Error::numerical("GMRF sampler did not converge", report.residual));
            }
            x
        };
        Ok(crate::linalg::add(&self.mean, &dx))
    }
    fn gaussian_form(&self) -> Option<GaussianForm> {
        Some(GaussianForm {
            mean: self.mean.clone(),
            sqrt_precision: Arc::new(ScaledOperator {
                inner: self.diff.clone(),
                scale: self.precision.sqrt(),
            }),
        })
    }
}

/// Uniform density on the box `[lower, upper]`.
#[derive(Debug, Clone)]
pub struct Uniform {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub fn uniform(lower: Vec<f64>, upper: Vec<f64>) -> Result<Uniform> {
    check_dim("uniform bounds", lower.len(), upper.len())?;
    if lower.is_empty() {
        return Err(Error::invalid("uniform needs dimension >= 1"));
    }
    if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
        return Err(Error::invalid("uniform bounds need finite lower < upper"));
    }
    Ok(Uniform { lower, upper })
}

impl Density for Uniform {
    fn dim(&self) -> usize {
        self.lower.len()
    }
    fn name(&self) -> String {
        "uniform".into()
    }
    fn properness(&self) -> Properness {
        Properness::Proper
    }
    fn logd(&self, x: &[f64]) -> Result<f64> {
        check_dim("uniform logd", self.dim(), x.len())?;
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u);
        Ok(if inside { 0.0 } else { f64::NEG_INFINITY })
    }
    fn has_sampler(&self) -> bool {
        true
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        use rand::Rng;
        Ok(self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect())
    }
}

/// The improper flat density on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct UnboundedUniform {
    dim: usize,
}

pub fn unbounded_uniform(dim: usize) -> Result<UnboundedUniform> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    Ok(UnboundedUniform { dim })
}

impl Density for UnboundedUniform {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> String {
        "unbounded-uniform".into()
    }
    fn properness(&self) -> Properness {
        Properness::Improper
    }
    fn logd(&self, x: &[f64]) -> Result<f64> {
        check_dim("unbounded uniform logd", self.dim, x.len())?;
        Ok(0.0)
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn grad_logd(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("unbounded uniform gradient", self.dim, x.len())?;
        Ok(vec![0.0; self.dim])
    }
}

/// Scalar Gamma density with shape `a` and rate `b`. A zero rate is allowed
/// as an improper hyperprior limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma {
    pub shape: f64,
    pub rate: f64,
}

pub fn gamma(shape_a: f64, rate_b: f64) -> Result<Gamma> {
    if !(shape_a > 0.0 && shape_a.is_finite()) || !(rate_b >= 0.0 && rate_b.is_finite()) {
        return Err(Error::invalid(format!("invalid Gamma({shape_a}, {rate_b})")));
    }
    Ok(Gamma {
        shape: shape_a,
        rate: rate_b,
    })
}

impl Gamma {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn draw(&self, rng: &mut dyn RngCore) -> Result<f64> {
        sample_gamma(rng, self.shape, self.rate)
    }
}

/// One draw from `Gamma(shape, rate)`.
pub fn sample_gamma(rng: &mut dyn RngCore, shape: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::unsupported("Gamma with zero rate is improper"));
    }
    let g = rand_distr::Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::invalid(format!("Gamma({shape}, {rate}): {e}")))?;
    Ok(g.sample(rng))
}

impl Density for Gamma {
    fn dim(&self) -> usize {
        1
    }
    fn name(&self) -> String {
        format!("gamma({}, {})", self.shape, self.rate)
    }
    fn properness(&self) -> Properness {
        if self.rate > 0.0 {
            Properness::Proper
        } else {
            Properness::Improper
        }
    }
    fn logd(&self, x: &[f64]) -> Result<f64> {
        check_dim("Gamma logd", 1, x.len())?;
        let t = x[0];
        if !(t > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((self.shape - 1.0) * t.ln() - self.rate * t)
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn grad_logd(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("Gamma gradient", 1, x.len())?;
        if !(x[0] > 0.0) {
            return Err(Error::invalid("Gamma gradient outside the support"));
        }
        Ok(vec![(self.shape - 1.0) / x[0] - self.rate])
    }
    fn has_sampler(&self) -> bool {
        self.rate > 0.0
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Ok(vec![self.draw(rng)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_examples() {
        let g = gaussian(vec![0.0, 0.0], CovForm::Scalar(10.0)).unwrap();
        assert_eq!(g.logd(&[0.0, 0.0]).unwrap(), 0.0);
        let gr = g.grad_logd(&[1.0, 0.0]).unwrap();
        assert!((gr[0] + 0.1).abs() < 1e-15 && gr[1] == 0.0);
        let g1 = gaussian(vec![0.0], CovForm::Scalar(1.0)).unwrap();
        assert_eq!(g1.logd(&[2.0]).unwrap(), -2.0);
        assert!(gaussian(vec![0.0], CovForm::Scalar(-1.0)).is_err());
        let not_spd = DenseMatrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(gaussian(vec![0.0; 2], CovForm::Matrix(not_spd)).is_err());
    }

    #[test]
    fn dense_covariance_matches_scalar() {
        let m = DenseMatrix::new(2, 2, vec![4.0, 0.0, 0.0, 4.0]).unwrap();
        let a = gaussian(vec![1.0, -1.0], CovForm::Matrix(m)).unwrap();
        let b = gaussian(vec![1.0, -1.0], CovForm::Scalar(4.0)).unwrap();
        let x = [0.3, 2.0];
        assert!((a.logd(&x).unwrap() - b.logd(&x).unwrap()).abs() < 1e-14);
        let (ga, gb) = (a.grad_logd(&x).unwrap(), b.grad_logd(&x).unwrap());
        assert!(crate::linalg::max_abs_diff(&ga, &gb) < 1e-14);
    }

    #[test]
    fn gmrf_examples() {
        let g = gmrf(&[3], 500.0, Boundary::Neumann).unwrap();
        assert_eq!(g.logd(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(g.properness(), Properness::Improper);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(g.sample(&mut rng), Err(Error::Unsupported(_))));
        let g2 = gmrf(&[3], 2.0, Boundary::Neumann).unwrap();
        assert_eq!(g2.logd(&[0.0, 1.0, 0.0]).unwrap(), -2.0);
    }

    #[test]
    fn proper_gmrf_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = gmrf(&[4], 2.0, Boundary::Zero).unwrap();
        assert_eq!(g.sample(&mut rng).unwrap().len(), 4);
        let g2 = gmrf(&[3, 3], 2.0, Boundary::Zero).unwrap();
        assert_eq!(g2.sample(&mut rng).unwrap().len(), 9);
    }

    #[test]
    fn uniform_examples() {
        let u = uniform(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        assert_eq!(u.logd(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(u.logd(&[3.0, 1.0]).unwrap(), f64::NEG_INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let s = u.sample(&mut rng).unwrap();
            assert!(s.iter().all(|v| (0.0..=2.0).contains(v)));
        }
        let ub = unbounded_uniform(2).unwrap();
        assert_eq!(ub.logd(&[1e9, -3.0]).unwrap(), 0.0);
        assert!(matches!(ub.sample(&mut rng), Err(Error::Unsupported(_))));
        assert!(uniform(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn gamma_examples() {
        let g = gamma(1.0, 1.0).unwrap();
        assert_eq!(g.logd(&[3.5]).unwrap(), -3.5);
        let g = gamma(2.0, 3.0).unwrap();
        assert_eq!(g.logd(&[1.0]).unwrap(), -3.0);
        assert_eq!(g.logd(&[0.0]).unwrap(), f64::NEG_INFINITY);
        let hyper = gamma(1.0, 1e-8).unwrap();
        assert_eq!(hyper.properness(), Properness::Proper);
        assert!(gamma(0.0, 1.0).is_err());
        let improper = gamma(1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(improper.sample(&mut rng).is_err());
    }
}
