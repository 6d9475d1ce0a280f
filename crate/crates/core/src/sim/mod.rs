//! Data-generating processes, coverage evaluation and Monte Carlo drivers.

mod conditional;
mod discrete;
mod ite_sim;
mod kang_schafer;
mod mc;
mod mnar;
mod real;
mod report;

pub use conditional::{run_conditional, CondConfig, CondCovRecord};
pub use discrete::{DiscreteLaw, OUTCOMES};
pub use ite_sim::{gen_confounded, ite_run, run_ite, IteMcResult, IteRecord, Potentials};
pub use kang_schafer::{
    gaussian_score_cdf, gen_kang_schafer, ks_covariates, ks_mean, ks_oracle_cdf, ks_oracle_pi, ks_outcome,
    ks_pi_star, ks_propensity, ks_target_draws, KS_DIM, KS_INTERCEPT, KS_OUTCOME, KS_SELECTION,
};
pub use mc::{aggregate, run_mc, DgpKind, DgpSpec, Fitted, McResult, Method, RunRecord, LAMBDA_GRID, METHOD_NAMES};
pub use mnar::{run_sensitivity, MnarGaussian, SensConfig, SensRecord};
pub use real::{real_propensity, run_real, REAL_SELECTION};
pub use report::{write_csv, write_summary, Summary, SummaryRow};

use statrs::function::erf::erfc;

use crate::data::{Dataset, SealedLabels};
use crate::scores::PredictionSet;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Observed data together with the outcomes hidden from the fits.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub observed: Dataset,
    pub hidden: SealedLabels,
}

impl Simulated {
    /// Target units with their hidden outcomes. Evaluation only.
    pub fn hidden_pairs(&self) -> Vec<(Vec<f64>, f64)> {
        self.hidden
            .entries()
            .iter()
            .map(|&(i, y)| (self.observed.units()[i].x().to_vec(), y))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Coverage {
    pub coverage: f64,
    /// Mean of `min(width, w_trunc)`.
    pub width: f64,
    pub infinite_fraction: f64,
}

/// Fraction of `(x, y)` pairs with `y` in the set at `x`, and the mean
/// truncated width.
pub fn eval_coverage(predict: &dyn Fn(&[f64]) -> PredictionSet, test: &[(Vec<f64>, f64)], w_trunc: f64) -> Coverage {
    let mut covered = 0usize;
    let mut width = 0.0;
    let mut infinite = 0usize;
    for (x, y) in test {
        let set = predict(x);
        covered += usize::from(set.contains(*y));
        let w = set.width();
        infinite += usize::from(w.is_infinite());
        width += w.min(w_trunc);
    }
    let n = test.len().max(1) as f64;
    Coverage { coverage: covered as f64 / n, width: width / n, infinite_fraction: infinite as f64 / n }
}
