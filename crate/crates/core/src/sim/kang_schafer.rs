//! The four-covariate linear Gaussian design with a logistic selection
//! model, as in Kang and Schafer's missing-data benchmark.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

use super::{normal_cdf, Simulated};
use crate::data::{apply_missingness, expit, Dataset, Rng, Unit};
use crate::drp::CdfFactory;
use crate::error::Result;
use crate::linalg::dot;
use crate::nuisance::{CondCdf, FnCdf, FnRatio};
use crate::scores::ScoreModel;

pub const KS_DIM: usize = 4;
pub const KS_INTERCEPT: f64 = 210.0;
pub const KS_OUTCOME: [f64; KS_DIM] = [27.4, 13.7, 13.7, 13.7];
pub const KS_SELECTION: [f64; KS_DIM] = [-1.0, 0.5, -0.25, -0.1];

pub fn ks_mean(x: &[f64]) -> f64 {
    KS_INTERCEPT + dot(&KS_OUTCOME, x)
}

/// `P(T = 1 | x)`.
pub fn ks_propensity(x: &[f64]) -> f64 {
    expit(dot(&KS_SELECTION, x))
}

/// Exact propensity odds `P(T = 1 | x) / P(T = 0 | x)`.
pub fn ks_pi_star(x: &[f64]) -> f64 {
    dot(&KS_SELECTION, x).exp()
}

pub fn ks_covariates(rng: &mut Rng) -> Vec<f64> {
    (0..KS_DIM).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn ks_outcome(x: &[f64], rng: &mut Rng) -> f64 {
    ks_mean(x) + Distribution::<f64>::sample(&StandardNormal, rng)
}

/// `n` draws from the full population; outcomes of target draws are sealed.
pub fn gen_kang_schafer(n: usize, rng: &mut Rng) -> Result<Simulated> {
    let units = (0..n)
        .map(|_| {
            let x = ks_covariates(rng);
            let y = ks_outcome(&x, rng);
            Unit::labeled(x, y)
        })
        .collect();
    let full = Dataset::new(units)?;
    let (observed, hidden) = apply_missingness(&full, ks_propensity, rng)?;
    Ok(Simulated { observed, hidden })
}

/// Fresh `(x, y)` pairs from the target population, by rejection on the
/// selection indicator.
pub fn ks_target_draws(n: usize, rng: &mut Rng) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = ks_covariates(rng);
        let y = ks_outcome(&x, rng);
        if rng.random::<f64>() < ks_propensity(&x) {
            out.push((x, y));
        }
    }
    out
}

pub fn ks_oracle_pi() -> FnRatio {
    FnRatio::new(ks_pi_star)
}

/// `m*(theta, x) = P(Y in C(theta; x) | x)` for the fitted score, from the
/// Gaussian outcome law.
pub fn ks_oracle_cdf() -> CdfFactory {
    Arc::new(|score: &ScoreModel| gaussian_score_cdf(score.clone(), ks_mean, 1.0))
}

/// Conditional CDF of `R(x, Y)` when `Y | x ~ N(mean(x), sd^2)`, read off
/// the nested sets: `P(R <= theta | x) = P(Y in C(theta; x) | x)`.
pub fn gaussian_score_cdf(
    score: ScoreModel,
    mean: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    sd: f64,
) -> Arc<dyn CondCdf> {
    Arc::new(FnCdf::new(move |theta, x| match score.interval(x, theta).bounds() {
        None => 0.0,
        Some((lo, hi)) => {
            let mu = mean(x);
            (normal_cdf((hi - mu) / sd) - normal_cdf((lo - mu) / sd)).max(0.0)
        }
    }))
}
