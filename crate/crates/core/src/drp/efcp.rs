//! Selection among several scores at each query point, and the
//! cross-validated single-score comparison arm.

use rand::seq::SliceRandom;

use super::{eval_units, fit_cdf_part, fit_on, fit_propensity_part, fit_score, DrpConfig, FitIndices, FittedDrp, Variant};
use crate::data::{split::split_n, Dataset, Rng};
use crate::error::{Error, Result};
use crate::influence::{check_alpha, solve_quantile};
use crate::scores::{fit_ridge, PredictionSet, ScoreSpec};

pub const CV_FOLDS: usize = 5;

/// Candidate fits sharing one split and one propensity model. Each
/// candidate carries its own conditional score CDF, since that nuisance is
/// a property of the score.
#[derive(Debug, Clone)]
pub struct EfcpModel {
    pub members: Vec<FittedDrp>,
}

impl EfcpModel {
    /// Index of the narrowest candidate set at `x` (ties go to the first)
    /// and that set.
    pub fn select(&self, x: &[f64]) -> (usize, PredictionSet) {
        let mut best = (0, self.members[0].predict(x));
        for (k, m) in self.members.iter().enumerate().skip(1) {
            let set = m.predict(x);
            if set.width() < best.1.width() {
                best = (k, set);
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> PredictionSet {
        self.select(x).1
    }
}

/// Train every candidate score on part 1 with shared nuisance data, solve
/// each threshold on part 2. The split consumes `rng` exactly like
/// [`super::fit_split2`].
pub fn fit_efcp(ds: &Dataset, candidates: &[ScoreSpec], cfg: &DrpConfig, rng: &mut Rng) -> Result<EfcpModel> {
    if candidates.is_empty() {
        return Err(Error::Config("selection needs at least one candidate score".into()));
    }
    check_alpha(cfg.alpha)?;
    let plan = split_n(ds.len(), &cfg.fractions_for(Variant::Split2)?, rng)?;
    let (train, eval) = (plan.part(0), plan.part(1));
    let pi = fit_propensity_part(ds, train, &cfg.nuisance.propensity)?;
    let members = candidates
        .iter()
        .map(|spec| {
            let score = fit_score(ds, train, spec, "score-training")?;
            let m = fit_cdf_part(ds, train, &score, &cfg.nuisance.cdf)?;
            let units = eval_units(ds, eval, &score);
            let solution = solve_quantile(&units, pi.as_ref(), m.as_ref(), cfg.alpha)?;
            Ok(FittedDrp {
                score,
                pi: pi.clone(),
                m,
                solution,
                alpha: cfg.alpha,
                variant: Variant::Split2,
                indices: FitIndices { score: train.to_vec(), nuisance: train.to_vec(), eval: eval.to_vec() },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EfcpModel { members })
}

/// Ridge penalty with the smallest `folds`-fold cross-validated squared
/// error over the labeled units among `idx`; ties go to the earlier entry.
pub fn cv_select_lambda(ds: &Dataset, idx: &[usize], lambdas: &[f64], folds: usize, rng: &mut Rng) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::Config("cross-validation needs at least one penalty".into()));
    }
    let mut labeled: Vec<(&[f64], f64)> = ds.labeled_at(idx).collect();
    if labeled.len() < folds || folds < 2 {
        return Err(Error::Config(format!("{folds}-fold cross-validation on {} labeled units", labeled.len())));
    }
    labeled.shuffle(rng);
    let fold_of = |i: usize| i * folds / labeled.len();
    let mut best = (f64::INFINITY, lambdas[0]);
    for &lambda in lambdas {
        let mut sse = 0.0;
        for k in 0..folds {
            let train = labeled.iter().enumerate().filter(|(i, _)| fold_of(*i) != k).map(|(_, p)| *p);
            let model = fit_ridge(train, lambda)?;
            sse += labeled
                .iter()
                .enumerate()
                .filter(|(i, _)| fold_of(*i) == k)
                .map(|(_, (x, y))| (y - model.predict(x)).powi(2))
                .sum::<f64>();
        }
        let mse = sse / labeled.len() as f64;
        if mse < best.0 {
            best = (mse, lambda);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone)]
pub struct CvFit {
    pub lambda: f64,
    pub fitted: FittedDrp,
}

/// Two-split prediction with the ridge penalty chosen by cross-validation
/// on the training half.
pub fn fit_cv(ds: &Dataset, lambdas: &[f64], cfg: &DrpConfig, rng: &mut Rng) -> Result<CvFit> {
    let plan = split_n(ds.len(), &cfg.fractions_for(Variant::Split2)?, rng)?;
    let lambda = cv_select_lambda(ds, plan.part(0), lambdas, CV_FOLDS, rng)?;
    let cfg = DrpConfig { score: ScoreSpec::ridge(lambda), ..cfg.clone() };
    let indices = FitIndices { score: plan.part(0).to_vec(), nuisance: plan.part(0).to_vec(), eval: plan.part(1).to_vec() };
    Ok(CvFit { lambda, fitted: fit_on(ds, &cfg, Variant::Split2, indices)? })
}
