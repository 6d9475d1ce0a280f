//! The two nuisance functions of the estimating equation: the propensity
//! odds `pi(x) = P(T=1|x) / P(T=0|x)` and the conditional score CDF
//! `m(theta, x) = P(R <= theta | x)`.

mod cond_cdf;
mod logistic;
mod rearrange;

pub use cond_cdf::{fit_cond_cdf, CondCdfModel, DEFAULT_GRID_SIZE};
pub use logistic::{fit_logistic, LogisticFit, LogisticModel, IRLS_TOLERANCE, MAX_IRLS_ITERATIONS};
pub use rearrange::monotone_rearrange;

use std::fmt;
use std::sync::Arc;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_CLIP: f64 = 0.99;

/// A positive weight function `x -> pi(x)`.
pub trait PropensityRatio: Send + Sync {
    fn ratio(&self, x: &[f64]) -> f64;
}

/// A conditional CDF `m(theta, x)`, nondecreasing in `theta`.
pub trait CondCdf: Send + Sync {
    fn cdf(&self, theta: f64, x: &[f64]) -> f64;

    /// Points where `m(., x)` may jump, for every `x`. Empty when the
    /// function has no finite step structure.
    fn breakpoints(&self) -> &[f64] {
        &[]
    }

    /// `theta -> m(theta, x)` for a fixed `x`; implementations may
    /// precompute per-`x` state here.
    fn bind<'a>(&'a self, x: &'a [f64]) -> Box<dyn Fn(f64) -> f64 + 'a> {
        Box::new(move |theta| self.cdf(theta, x))
    }
}

/// Logistic propensity model with probabilities clipped to `[1 - c, c]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PropensityModel {
    pub logit: LogisticModel,
    pub clip: f64,
}

impl PropensityModel {
    /// Clipped `P(T = 1 | x)`.
    pub fn probability(&self, x: &[f64]) -> f64 {
        clip_probability(self.logit.probability(x), self.clip)
    }

    pub fn pi_hat(&self, x: &[f64]) -> f64 {
        let p = self.probability(x);
        p / (1.0 - p)
    }

    /// `[(1 - c) / c, c / (1 - c)]`.
    pub fn ratio_bounds(&self) -> (f64, f64) {
        ((1.0 - self.clip) / self.clip, self.clip / (1.0 - self.clip))
    }
}

pub fn clip_probability(p: f64, clip: f64) -> f64 {
    p.clamp(1.0 - clip, clip)
}

impl PropensityRatio for PropensityModel {
    fn ratio(&self, x: &[f64]) -> f64 {
        self.pi_hat(x)
    }
}

/// Logistic regression of the target flag on covariates.
pub fn fit_propensity(ds: &Dataset, clip: f64) -> Result<PropensityModel> {
    fit_propensity_on(ds, None, clip)
}

pub(crate) fn fit_propensity_on(ds: &Dataset, idx: Option<&[usize]>, clip: f64) -> Result<PropensityModel> {
    if !(clip > 0.5 && clip < 1.0) {
        return Err(Error::Domain(format!("propensity clip {clip} must lie in (0.5, 1)")));
    }
    let units: Vec<_> = match idx {
        Some(idx) => idx.iter().map(|&i| &ds.units()[i]).collect(),
        None => ds.units().iter().collect(),
    };
    let xs: Vec<&[f64]> = units.iter().map(|u| u.x()).collect();
    let t: Vec<bool> = units.iter().map(|u| u.is_target()).collect();
    let n_target = t.iter().filter(|&&v| v).count();
    if n_target == 0 || n_target == t.len() {
        return Err(Error::Config("propensity fit needs both source and target units".into()));
    }
    let fit = fit_logistic(&xs, &t)?;
    if fit.separated {
        log::warn!("propensity fit is perfectly separated; returning the clipped model");
    }
    Ok(PropensityModel { logit: fit.model, clip })
}

type RatioFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type CdfFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;

/// Closure-backed propensity odds, e.g. the true `pi*` of a simulation.
#[derive(Clone)]
pub struct FnRatio(pub Arc<RatioFn>);

impl FnRatio {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl PropensityRatio for FnRatio {
    fn ratio(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

impl fmt::Debug for FnRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnRatio(..)")
    }
}

/// Closure-backed conditional CDF, e.g. the true `m*` of a simulation.
#[derive(Clone)]
pub struct FnCdf(pub Arc<CdfFn>);

impl FnCdf {
    pub fn new(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl CondCdf for FnCdf {
    fn cdf(&self, theta: f64, x: &[f64]) -> f64 {
        (self.0)(theta, x)
    }
}

impl fmt::Debug for FnCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnCdf(..)")
    }
}

/// `pi(x) = c` for every `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstRatio(pub f64);

impl PropensityRatio for ConstRatio {
    fn ratio(&self, _x: &[f64]) -> f64 {
        self.0
    }
}

/// `m(theta, x) = c` for every `theta` and `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstCdf(pub f64);

impl CondCdf for ConstCdf {
    fn cdf(&self, _theta: f64, _x: &[f64]) -> f64 {
        self.0
    }
}

/// Exact nuisance functions of a known data-generating process.
#[derive(Clone)]
pub struct OraclePair {
    pub pi: Arc<dyn PropensityRatio>,
    pub m: Arc<dyn CondCdf>,
}

impl fmt::Debug for OraclePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("OraclePair(..)")
    }
}
