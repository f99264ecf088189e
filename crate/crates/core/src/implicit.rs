//! Implicit priors: Gaussian-plus-regularization bundles for regularized RTO
//! and restorators with a smoothing strength for Langevin / plug-and-play.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::distributions::{GaussianForm, Properness};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Space;
use crate::operators::{finite_difference, Boundary, IdentityOperator, SharedOperator};
use crate::proximal::{haar_threshold_denoise, prox, soft_threshold, tv1d_denoise, tv_denoise_2d, ProxFn, ProxTerm};

/// Named constraint / regularization presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegPreset {
    NonNegativity,
    Box { lower: f64, upper: f64 },
    Increasing,
    Decreasing,
    Convex,
    Concave,
    L1,
    Tv,
}

impl RegPreset {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "nonnegativity" | "nonneg" => RegPreset::NonNegativity,
            "box" => RegPreset::Box { lower: 0.0, upper: 1.0 },
            "increasing" => RegPreset::Increasing,
            "decreasing" => RegPreset::Decreasing,
            "convex" => RegPreset::Convex,
            "concave" => RegPreset::Concave,
            "l1" => RegPreset::L1,
            "tv" => RegPreset::Tv,
            other => return Err(Error::invalid(format!("unknown regularization preset `{other}`"))),
        })
    }

    pub fn is_constraint(&self) -> bool {
        !matches!(self, RegPreset::L1 | RegPreset::Tv)
    }

    /// Expands the preset into a term `strength * f(L x)` on `space`.
    pub fn to_term(&self, space: &Space, strength: f64) -> Result<ProxTerm> {
        let n = space.dim();
        let ident: SharedOperator = Arc::new(IdentityOperator { dim: n });
        let f = match *self {
            RegPreset::NonNegativity => ProxFn::NonNeg,
            RegPreset::Box { lower, upper } => ProxFn::Box { lower, upper },
            RegPreset::Increasing => ProxFn::Increasing,
            RegPreset::Decreasing => ProxFn::Decreasing,
            RegPreset::Convex => ProxFn::Convex,
            RegPreset::Concave => ProxFn::Concave,
            RegPreset::L1 => ProxFn::L1,
            RegPreset::Tv => {
                if !space.has_grid() {
                    return Err(Error::invalid(
                        "TV regularization needs a space with grid structure (1-D signal or 2-D image)",
                    ));
                }
                let d = finite_difference(space.shape(), Boundary::Neumann)?;
                return ProxTerm::new(ProxFn::L1, Arc::new(d), strength);
            }
        };
        let s = if f.is_indicator() { 1.0 } else { strength };
        ProxTerm::new(f, ident, s)
    }
}

/// Gaussian part of a regularized Gaussian prior.
#[derive(Clone)]
pub enum RegBase {
    /// `-1/2 scale |Gamma (x - mean)|^2`; `scale` is the precision multiplier a
    /// hierarchical model may resample.
    Gaussian { form: GaussianForm, scale: f64 },
    /// The flat base `Gamma = 0`.
    UnboundedUniform { dim: usize },
}

impl fmt::Debug for RegBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegBase::Gaussian { scale, .. } => write!(f, "Gaussian(scale={scale})"),
            RegBase::UnboundedUniform { dim } => write!(f, "UnboundedUniform({dim})"),
        }
    }
}

impl RegBase {
    pub fn dim(&self) -> usize {
        match self {
            RegBase::Gaussian { form, .. } => form.mean.len(),
            RegBase::UnboundedUniform { dim } => *dim,
        }
    }
}

/// A Gaussian (or flat) base plus constraints and regularization. Exposes no
/// density: only the regularized RTO sampler can use it.
#[derive(Clone, Debug)]
pub struct RegularizedGaussian {
    base: RegBase,
    terms: Vec<ProxTerm>,
    space: Space,
}

impl RegularizedGaussian {
    pub fn new(base: RegBase, terms: Vec<ProxTerm>, space: Space) -> Result<Self> {
        check_dim("regularized Gaussian space", base.dim(), space.dim())?;
        for t in &terms {
            check_dim("regularizer operator", space.dim(), t.op.domain_dim())?;
        }
        if matches!(base, RegBase::UnboundedUniform { .. }) && terms.is_empty() {
            return Err(Error::invalid("a flat base needs at least one constraint or regularizer"));
        }
        if let RegBase::Gaussian { scale, .. } = base {
            if !(scale > 0.0) {
                return Err(Error::invalid("Gaussian base precision scale must be positive"));
            }
        }
        Ok(RegularizedGaussian { base, terms, space })
    }

    /// Convenience constructor from presets: an optional constraint plus an
    /// optional regularizer with its strength.
    pub fn from_presets(
        base: RegBase,
        constraint: Option<RegPreset>,
        regularization: Option<(RegPreset, f64)>,
        space: Space,
    ) -> Result<Self> {
        let mut terms = Vec::new();
        if let Some(c) = constraint {
            terms.push(c.to_term(&space, 1.0)?);
        }
        if let Some((r, s)) = regularization {
            terms.push(r.to_term(&space, s)?);
        }
        Self::new(base, terms, space)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn base(&self) -> &RegBase {
        &self.base
    }

    pub fn terms(&self) -> &[ProxTerm] {
        &self.terms
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn properness(&self) -> Properness {
        Properness::DataDependent
    }

    /// Always an error: the implied prior density is intractable.
    pub fn logd(&self, _x: &[f64]) -> Result<f64> {
        Err(Error::unsupported(
            "a regularized Gaussian prior has no tractable density; use the rlrto sampler",
        ))
    }

    /// Copy with every non-indicator term set to `strength`.
    pub fn with_strength(&self, strength: f64) -> Result<Self> {
        let mut out = self.clone();
        for t in out.terms.iter_mut().filter(|t| !t.f.is_indicator()) {
            *t = ProxTerm::new(t.f.clone(), t.op.clone(), strength)?;
        }
        Ok(out)
    }

    /// Copy with the Gaussian base precision multiplier replaced.
    pub fn with_precision_scale(&self, scale: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out.base {
            RegBase::Gaussian { scale: s, .. } if scale > 0.0 => *s = scale,
            RegBase::Gaussian { .. } => return Err(Error::invalid("precision scale must be positive")),
            RegBase::UnboundedUniform { .. } => {
                return Err(Error::unsupported("a flat base has no precision to rescale"))
            }
        }
        Ok(out)
    }

    /// Strength shared by the non-indicator terms, if any.
    pub fn strength(&self) -> Option<f64> {
        self.terms.iter().find(|t| !t.f.is_indicator()).map(|t| t.strength)
    }
}

/// A restored vector with an optional free-form diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Restored {
    pub x: Vec<f64>,
    pub info: Option<String>,
}

/// A denoiser `D_s` used in place of a proximal operator.
pub trait Restorator: Send + Sync {
    fn id(&self) -> String;

    /// Whether `restore(x, s)` is the exact prox of some `s R`.
    fn is_proximal(&self) -> bool {
        false
    }

    fn restore(&self, x: &[f64], strength: f64) -> Result<Restored>;

    /// A fresh instance for one chain when the restorator holds per-chain
    /// resources (a child process); `None` means the instance may be shared.
    fn instance_for_chain(&self) -> Result<Option<Arc<dyn Restorator>>> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestorationSource {
    Builtin,
    ExternalSubprocess,
}

/// A restorator bound to a parameter space.
#[derive(Clone)]
pub struct RestorationPrior {
    restorator: Arc<dyn Restorator>,
    space: Space,
    source: RestorationSource,
}

impl fmt::Debug for RestorationPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RestorationPrior({}, {:?})", self.restorator.id(), self.source)
    }
}

pub fn restoration_prior(restorator: Arc<dyn Restorator>, space: Space) -> RestorationPrior {
    RestorationPrior {
        restorator,
        space,
        source: RestorationSource::Builtin,
    }
}

impl RestorationPrior {
    pub fn external(restorator: Arc<dyn Restorator>, space: Space) -> Self {
        RestorationPrior {
            restorator,
            space,
            source: RestorationSource::ExternalSubprocess,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn source(&self) -> RestorationSource {
        self.source
    }

    pub fn restorator(&self) -> &Arc<dyn Restorator> {
        &self.restorator
    }

    pub fn id(&self) -> String {
        self.restorator.id()
    }

    pub fn properness(&self) -> Properness {
        if self.restorator.is_proximal() {
            Properness::Improper
        } else {
            Properness::PurelyImplicit
        }
    }

    /// Same prior with the restorator swapped for a per-chain instance when needed.
    pub fn for_chain(&self) -> Result<RestorationPrior> {
        Ok(match self.restorator.instance_for_chain()? {
            Some(r) => RestorationPrior {
                restorator: r,
                space: self.space.clone(),
                source: self.source,
            },
            None => self.clone(),
        })
    }

    pub fn restore(&self, x: &[f64], strength: f64) -> Result<Restored> {
        check_dim("restoration input", self.dim(), x.len())?;
        if !(strength > 0.0) {
            return Err(Error::invalid("restoration strength must be positive"));
        }
        let out = self.restorator.restore(x, strength)?;
        if out.x.len() != x.len() {
            return Err(Error::Restoration(format!(
                "{} returned {} values for an input of length {}",
                self.restorator.id(),
                out.x.len(),
                x.len()
            )));
        }
        Ok(out)
    }
}

/// Euclidean projection onto the nonnegative orthant.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonnegRestorator;

impl Restorator for NonnegRestorator {
    fn id(&self) -> String {
        "nonneg".into()
    }
    fn is_proximal(&self) -> bool {
        true
    }
    fn restore(&self, x: &[f64], _s: f64) -> Result<Restored> {
        Ok(Restored {
            x: x.iter().map(|v| v.max(0.0)).collect(),
            info: None,
        })
    }
}

/// Soft thresholding at `gamma = factor * strength`.
#[derive(Debug, Clone, Copy)]
pub struct L1Restorator {
    pub factor: f64,
}

impl Default for L1Restorator {
    fn default() -> Self {
        L1Restorator { factor: 10.0 }
    }
}

impl Restorator for L1Restorator {
    fn id(&self) -> String {
        format!("l1(gamma={}*s)", self.factor)
    }
    fn is_proximal(&self) -> bool {
        true
    }
    fn restore(&self, x: &[f64], s: f64) -> Result<Restored> {
        let gamma = self.factor * s;
        Ok(Restored {
            x: x.iter().map(|v| soft_threshold(*v, gamma)).collect(),
            info: None,
        })
    }
}

/// Anisotropic TV denoising with weight `factor * strength`. Signals use the
/// exact 1-D solver; images use the iterative dual solver.
#[derive(Debug, Clone)]
pub struct TvRestorator {
    pub factor: f64,
    pub grid: Option<(usize, usize)>,
    pub max_iters: usize,
    pub tol: f64,
}

impl TvRestorator {
    pub fn for_space(space: &Space, factor: f64) -> Self {
        TvRestorator {
            factor,
            grid: space.grid_2d(),
            max_iters: 100,
            tol: crate::proximal::PROX_TOL,
        }
    }
}

impl Restorator for TvRestorator {
    fn id(&self) -> String {
        format!("tv(weight={}*s)", self.factor)
    }
    fn is_proximal(&self) -> bool {
        // the 2-D solver is truncated and thus only approximately a prox
        self.grid.is_none()
    }
    fn restore(&self, x: &[f64], s: f64) -> Result<Restored> {
        let w = self.factor * s;
        match self.grid {
            None => Ok(Restored {
                x: tv1d_denoise(x, w),
                info: None,
            }),
            Some((r, c)) => {
                check_dim("TV restorator image", r * c, x.len())?;
                let (out, iters) = tv_denoise_2d(x, r, c, w, self.max_iters, self.tol);
                Ok(Restored {
                    x: out,
                    info: Some(format!("iterations={iters}")),
                })
            }
        }
    }
}

/// Haar wavelet soft thresholding at `factor * strength`.
#[derive(Debug, Clone, Copy)]
pub struct HaarRestorator {
    pub rows: usize,
    pub cols: usize,
    pub factor: f64,
}

impl Restorator for HaarRestorator {
    fn id(&self) -> String {
        format!("haar(threshold={}*s)", self.factor)
    }
    fn is_proximal(&self) -> bool {
        self.rows.is_power_of_two() && self.cols.is_power_of_two()
    }
    fn restore(&self, x: &[f64], s: f64) -> Result<Restored> {
        Ok(Restored {
            x: haar_threshold_denoise(x, self.rows, self.cols, self.factor * s)?,
            info: None,
        })
    }
}

/// The exact prox of `factor * f`.
#[derive(Debug, Clone)]
pub struct ProxRestorator {
    pub f: ProxFn,
    pub factor: f64,
}

impl Restorator for ProxRestorator {
    fn id(&self) -> String {
        format!("prox({})", self.f.name())
    }
    fn is_proximal(&self) -> bool {
        true
    }
    fn restore(&self, x: &[f64], s: f64) -> Result<Restored> {
        Ok(Restored {
            x: prox(&self.f, x, self.factor * s)?,
            info: None,
        })
    }
}

pub type RestoreClosure = Box<dyn Fn(&[f64], f64) -> Result<Restored> + Send + Sync>;

/// A restorator from a user closure.
pub struct FnRestorator {
    pub name: String,
    pub restore: RestoreClosure,
}

impl Restorator for FnRestorator {
    fn id(&self) -> String {
        self.name.clone()
    }
    fn restore(&self, x: &[f64], s: f64) -> Result<Restored> {
        (self.restore)(x, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingAlias {
    MoreauYoshida,
    /// Same computation; names the plug-and-play reading with an MMSE denoiser.
    Tweedie,
}

/// A restoration prior with smoothing strength `alpha`; its log-density
/// gradient is approximated by `(D_alpha(x) - x) / alpha`.
#[derive(Clone, Debug)]
pub struct SmoothedPrior {
    pub inner: RestorationPrior,
    pub alpha: f64,
    pub alias: SmoothingAlias,
}

pub fn smoothed_prior(inner: RestorationPrior, alpha: f64) -> Result<SmoothedPrior> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("smoothing strength must be positive"));
    }
    Ok(SmoothedPrior {
        inner,
        alpha,
        alias: SmoothingAlias::MoreauYoshida,
    })
}

pub fn tweedie_prior(inner: RestorationPrior, alpha: f64) -> Result<SmoothedPrior> {
    let mut p = smoothed_prior(inner, alpha)?;
    p.alias = SmoothingAlias::Tweedie;
    Ok(p)
}

impl SmoothedPrior {
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn properness(&self) -> Properness {
        self.inner.properness()
    }

    pub fn for_chain(&self) -> Result<SmoothedPrior> {
        Ok(SmoothedPrior {
            inner: self.inner.for_chain()?,
            alpha: self.alpha,
            alias: self.alias,
        })
    }

    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        smoothed_drift(self, x)
    }
}

/// `(restore(x, alpha) - x) / alpha`
pub fn smoothed_drift(sp: &SmoothedPrior, x: &[f64]) -> Result<Vec<f64>> {
    let r = sp.inner.restore(x, sp.alpha)?;
    Ok(r.x.iter().zip(x).map(|(d, v)| (d - v) / sp.alpha).collect())
}
