//! Conformal scores `R(x, y)` and their sub-level sets
//! `C(theta; x) = {y : R(x, y) <= theta}`.

mod quantile;
mod ridge;

pub use quantile::{fit_quantile, pinball, pinball_objective, QuantileModel};
pub use ridge::{fit_ridge, RidgeModel};

use crate::error::Result;

/// A prediction set on the real line.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum PredictionSet {
    Empty,
    Interval { lower: f64, upper: f64 },
    WholeLine,
}

impl PredictionSet {
    /// Interval length; 0 for the empty set, `+inf` for the whole line.
    pub fn width(&self) -> f64 {
        match *self {
            Self::Empty => 0.0,
            Self::Interval { lower, upper } => upper - lower,
            Self::WholeLine => f64::INFINITY,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        match *self {
            Self::Empty => false,
            Self::Interval { lower, upper } => lower <= y && y <= upper,
            Self::WholeLine => true,
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Empty => None,
            Self::Interval { lower, upper } => Some((lower, upper)),
            Self::WholeLine => Some((f64::NEG_INFINITY, f64::INFINITY)),
        }
    }

    pub fn is_subset_of(&self, other: &PredictionSet) -> bool {
        match (self.bounds(), other.bounds()) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((l1, u1)), Some((l2, u2))) => l2 <= l1 && u1 <= u2,
        }
    }
}

/// How to train a score on labeled data.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScoreSpec {
    /// `|y - mu(x)|` with a ridge fit of `mu`.
    AbsResidual { lambda: f64 },
    /// Conformalized quantile regression at levels `lo` and `hi`.
    Cqr { lo: f64, hi: f64 },
}

impl ScoreSpec {
    pub fn ridge(lambda: f64) -> Self {
        Self::AbsResidual { lambda }
    }

    /// CQR with the usual `alpha / 2`, `1 - alpha / 2` quantile levels.
    pub fn cqr(alpha: f64) -> Self {
        Self::Cqr { lo: alpha / 2.0, hi: 1.0 - alpha / 2.0 }
    }

    pub fn fit<'a, I>(&self, labeled: I) -> Result<ScoreModel>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        match *self {
            Self::AbsResidual { lambda } => Ok(ScoreModel::AbsResidual(fit_ridge(labeled, lambda)?)),
            Self::Cqr { lo, hi } => {
                let pairs: Vec<(&[f64], f64)> = labeled.into_iter().collect();
                let lo = fit_quantile(pairs.iter().copied(), lo)?;
                let hi = fit_quantile(pairs.iter().copied(), hi)?;
                Ok(ScoreModel::Cqr { lo, hi })
            }
        }
    }
}

/// A fitted score together with its set map.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum ScoreModel {
    AbsResidual(RidgeModel),
    Cqr { lo: QuantileModel, hi: QuantileModel },
}

impl ScoreModel {
    pub fn score(&self, x: &[f64], y: f64) -> f64 {
        match self {
            Self::AbsResidual(m) => ridge_score(m, x, y),
            Self::Cqr { lo, hi } => cqr_score(lo, hi, x, y),
        }
    }

    pub fn interval(&self, x: &[f64], theta: f64) -> PredictionSet {
        match self {
            Self::AbsResidual(m) => ridge_interval(m, x, theta),
            Self::Cqr { lo, hi } => cqr_interval(lo, hi, x, theta),
        }
    }
}

pub fn ridge_score(model: &RidgeModel, x: &[f64], y: f64) -> f64 {
    (y - model.predict(x)).abs()
}

/// `[mu(x) - theta, mu(x) + theta]`; empty for negative `theta`.
pub fn ridge_interval(model: &RidgeModel, x: &[f64], theta: f64) -> PredictionSet {
    if theta < 0.0 || theta.is_nan() {
        return PredictionSet::Empty;
    }
    if theta == f64::INFINITY {
        return PredictionSet::WholeLine;
    }
    let mu = model.predict(x);
    PredictionSet::Interval { lower: mu - theta, upper: mu + theta }
}

/// `max(q_lo(x) - y, y - q_hi(x))`; negative inside the quantile band.
pub fn cqr_score(lo: &QuantileModel, hi: &QuantileModel, x: &[f64], y: f64) -> f64 {
    (lo.predict(x) - y).max(y - hi.predict(x))
}

/// `[q_lo(x) - theta, q_hi(x) + theta]`, empty when the endpoints cross.
pub fn cqr_interval(lo: &QuantileModel, hi: &QuantileModel, x: &[f64], theta: f64) -> PredictionSet {
    if theta.is_nan() || theta == f64::NEG_INFINITY {
        return PredictionSet::Empty;
    }
    if theta == f64::INFINITY {
        return PredictionSet::WholeLine;
    }
    let lower = lo.predict(x) - theta;
    let upper = hi.predict(x) + theta;
    if upper < lower {
        PredictionSet::Empty
    } else {
        PredictionSet::Interval { lower, upper }
    }
}
