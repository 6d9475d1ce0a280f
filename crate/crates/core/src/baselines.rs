//! Weighted split conformal prediction: calibration residuals weighted by
//! the estimated propensity odds, plus a point mass at `+inf` carrying the
//! test point's own weight.

use crate::data::{split::split_n, Dataset, Rng};
use crate::error::{Error, Result};
use crate::influence::check_alpha;
use crate::nuisance::{fit_propensity_on, PropensityModel, DEFAULT_CLIP};
use crate::scores::{fit_ridge, PredictionSet, RidgeModel};

/// Relative slack on the cumulative-weight comparison, so that a level hit
/// exactly in exact arithmetic is not missed through rounding.
const CUM_SLACK: f64 = 1e-12;

/// Smallest `v` whose cumulative normalized weight `P(V <= v)` reaches `q`.
/// `+inf` values sort last.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::Domain("weighted quantile needs matching nonempty inputs".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::Domain(format!("weight {w} must be positive and finite")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("weighted quantile of NaN".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let level = q * total - CUM_SLACK * total;
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= level {
            return Ok(values[i]);
        }
    }
    Ok(values[*order.last().expect("nonempty")])
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WcpConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub clip: f64,
    /// Width cap used when averaging widths; never applied to the set itself.
    pub w_max: f64,
}

impl WcpConfig {
    pub fn new(alpha: f64, w_max: f64) -> Self {
        Self { alpha, lambda: 1.0, clip: DEFAULT_CLIP, w_max }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct WcpModel {
    pub mu: RidgeModel,
    pub propensity: PropensityModel,
    pub alpha: f64,
    pub w_max: f64,
    // calibration residuals ascending, with prefix sums of their weights
    residuals: Vec<f64>,
    cum_weights: Vec<f64>,
}

impl WcpModel {
    /// Model from explicit calibration pairs `(residual, weight)`.
    pub fn from_calibration(
        mu: RidgeModel,
        propensity: PropensityModel,
        alpha: f64,
        w_max: f64,
        mut calibration: Vec<(f64, f64)>,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if calibration.is_empty() {
            return Err(Error::Config("weighted conformal needs labeled calibration units".into()));
        }
        calibration.sort_by(|a, b| a.0.total_cmp(&b.0));
        let residuals = calibration.iter().map(|c| c.0).collect();
        let cum_weights = calibration
            .iter()
            .scan(0.0, |s, c| {
                *s += c.1;
                Some(*s)
            })
            .collect();
        Ok(Self { mu, propensity, alpha, w_max, residuals, cum_weights })
    }

    pub fn calibration_size(&self) -> usize {
        self.residuals.len()
    }

    /// Half-width at `x`: the weighted `1 - alpha` quantile of the
    /// calibration residuals with mass `pi_hat(x)` at `+inf`.
    pub fn quantile(&self, x: &[f64]) -> f64 {
        self.quantile_with_test_weight(self.propensity.pi_hat(x))
    }

    pub(crate) fn quantile_with_test_weight(&self, test_weight: f64) -> f64 {
        let total = self.cum_weights.last().copied().unwrap_or(0.0) + test_weight;
        let level = (1.0 - self.alpha) * total - CUM_SLACK * total;
        let k = self.cum_weights.partition_point(|c| *c < level);
        self.residuals.get(k).copied().unwrap_or(f64::INFINITY)
    }

    /// Normalized weight of the point mass at `+inf`.
    pub fn test_mass(&self, x: &[f64]) -> f64 {
        let p = self.propensity.pi_hat(x);
        p / (self.cum_weights.last().copied().unwrap_or(0.0) + p)
    }

    pub fn predict(&self, x: &[f64]) -> PredictionSet {
        wcp_predict(self, x)
    }
}

/// Split in half: ridge and propensity on part 1, residuals of part 2's
/// labeled units calibrate.
pub fn fit_wcp(ds: &Dataset, cfg: &WcpConfig, rng: &mut Rng) -> Result<WcpModel> {
    check_alpha(cfg.alpha)?;
    let plan = split_n(ds.len(), &[0.5, 0.5], rng)?;
    let (train, calib) = (plan.part(0), plan.part(1));
    if ds.labeled_at(train).next().is_none() {
        return Err(Error::Config("training half has no labeled units".into()));
    }
    let mu = fit_ridge(ds.labeled_at(train), cfg.lambda)?;
    let propensity = fit_propensity_on(ds, Some(train), cfg.clip)?;
    let calibration = ds
        .labeled_at(calib)
        .map(|(x, y)| ((y - mu.predict(x)).abs(), propensity.pi_hat(x)))
        .collect();
    WcpModel::from_calibration(mu, propensity, cfg.alpha, cfg.w_max, calibration)
}

/// `mu(x) +- q(x)`; the whole line when `q(x) = +inf`.
pub fn wcp_predict(model: &WcpModel, x: &[f64]) -> PredictionSet {
    let q = model.quantile(x);
    if q == f64::INFINITY {
        return PredictionSet::WholeLine;
    }
    let mu = model.mu.predict(x);
    PredictionSet::Interval { lower: mu - q, upper: mu + q }
}
