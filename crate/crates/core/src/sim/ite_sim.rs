//! Confounded treatment assignment with both potential outcomes simulated,
//! so that effect intervals can be checked against the hidden truth.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{ks_covariates, ks_mean, ks_propensity};
use crate::data::{Rng, Seed};
use crate::drp::DrpConfig;
use crate::error::{Error, Result};
use crate::ite::{fit_counterfactual, ite_interval_future, ite_interval_insample, CausalUnit};

/// Potential outcomes `(Y(0), Y(1))` of one unit.
pub type Potentials = (f64, f64);

fn potentials(x: &[f64], rng: &mut Rng) -> Potentials {
    let e0: f64 = StandardNormal.sample(rng);
    let e1: f64 = StandardNormal.sample(rng);
    let mu = ks_mean(x);
    (mu + e0, mu + 10.0 + 5.0 * x[1] + e1)
}

/// Covariates and outcome model as in the missing-data design; treatment
/// follows its selection model. `Y(1)` has mean `mu(x) + 10 + 5 x_2`, and
/// the two potential outcomes have independent unit-variance noise.
pub fn gen_confounded(n: usize, rng: &mut Rng) -> (Vec<CausalUnit>, Vec<Potentials>) {
    (0..n)
        .map(|_| {
            let x = ks_covariates(rng);
            let pot = potentials(&x, rng);
            let treated = rng.random::<f64>() < ks_propensity(&x);
            let y_obs = if treated { pot.1 } else { pot.0 };
            (CausalUnit { x, treated, y_obs }, pot)
        })
        .unzip()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IteRecord {
    pub run: usize,
    pub share_treated: f64,
    /// Fraction of treated units with `Y(0)` in the control-arm set.
    pub cov_c0_treated: f64,
    /// Fraction of control units with `Y(1)` in the treated-arm set.
    pub cov_c1_control: f64,
    pub insample_coverage: f64,
    pub insample_width: f64,
    pub future_coverage: f64,
    pub future_width: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IteMcResult {
    pub runs: usize,
    pub insample_coverage: f64,
    pub insample_se: f64,
    pub future_coverage: f64,
    pub future_se: f64,
    pub records: Vec<IteRecord>,
}

fn mean_se(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn frac(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// One run: in-sample intervals for all `n` study units from sets at level
/// `1 - alpha`, and future-subject intervals for `test_size` fresh draws
/// from the whole population from sets at level `1 - alpha / 2`. Widths are
/// truncated at `w_trunc`; a unit with an empty set counts as uncovered.
pub fn ite_run(cfg: &DrpConfig, n: usize, test_size: usize, w_trunc: f64, run: usize, seed: Seed) -> Result<IteRecord> {
    let (units, pots) = gen_confounded(n, &mut seed.child(0).rng());
    let half = DrpConfig { alpha: cfg.alpha / 2.0, ..cfg.clone() };
    let c0 = fit_counterfactual(&units, false, cfg, &mut seed.child(1).rng())?;
    let c1 = fit_counterfactual(&units, true, cfg, &mut seed.child(2).rng())?;
    let c0_half = fit_counterfactual(&units, false, &half, &mut seed.child(3).rng())?;
    let c1_half = fit_counterfactual(&units, true, &half, &mut seed.child(4).rng())?;

    let (mut hit, mut width) = (0usize, 0.0);
    let (mut n_t, mut hit_t, mut hit_c) = (0usize, 0usize, 0usize);
    for (u, &(y0, y1)) in units.iter().zip(&pots) {
        if u.treated {
            n_t += 1;
            hit_t += usize::from(c0.predict(&u.x).contains(y0));
        } else {
            hit_c += usize::from(c1.predict(&u.x).contains(y1));
        }
        if let Some(iv) = ite_interval_insample(&c0, &c1, u) {
            hit += usize::from(iv.contains(y1 - y0));
            width += iv.width().min(w_trunc);
        }
    }

    let mut rng = seed.child(5).rng();
    let (mut f_hit, mut f_width) = (0usize, 0.0);
    for _ in 0..test_size {
        let x = ks_covariates(&mut rng);
        let (y0, y1) = potentials(&x, &mut rng);
        if let Some(iv) = ite_interval_future(&c0_half, &c1_half, &x) {
            f_hit += usize::from(iv.contains(y1 - y0));
            f_width += iv.width().min(w_trunc);
        }
    }

    Ok(IteRecord {
        run,
        share_treated: frac(n_t, n),
        cov_c0_treated: frac(hit_t, n_t),
        cov_c1_control: frac(hit_c, n - n_t),
        insample_coverage: frac(hit, n),
        insample_width: width / n as f64,
        future_coverage: frac(f_hit, test_size),
        future_width: f_width / test_size.max(1) as f64,
    })
}

/// Parallel replications of [`ite_run`], returned in run order.
pub fn run_ite(cfg: &DrpConfig, n: usize, runs: usize, test_size: usize, w_trunc: f64, seed: Seed) -> Result<IteMcResult> {
    if runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    let records = (0..runs)
        .into_par_iter()
        .map(|r| ite_run(cfg, n, test_size, w_trunc, r, seed.child(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let (insample_coverage, insample_se) = mean_se(records.iter().map(|r| r.insample_coverage));
    let (future_coverage, future_se) = mean_se(records.iter().map(|r| r.future_coverage));
    Ok(IteMcResult { runs, insample_coverage, insample_se, future_coverage, future_se, records })
}
