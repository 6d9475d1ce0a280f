//! Semi-synthetic shift on a fully labeled real dataset: covariates and
//! outcomes are real, the labeled/target split is drawn from a known
//! selection model.

use rayon::prelude::*;

use super::{aggregate, eval_coverage, McResult, Method, Simulated};
use crate::data::{apply_missingness, expit, Dataset, Seed};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Selection coefficients on z-scored features.
pub const REAL_SELECTION: [f64; 5] = [-1.0, 0.5, -0.25, -0.1, 0.0];

/// `P(T = 1 | x) = expit(b . z(x))` where `z` standardizes each feature by
/// its mean and sample standard deviation in `ds`.
pub fn real_propensity(ds: &Dataset) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static> {
    if ds.dim() != REAL_SELECTION.len() {
        return Err(Error::Schema(format!("expected {} features, got {}", REAL_SELECTION.len(), ds.dim())));
    }
    if ds.len() < 2 {
        return Err(Error::Schema("need at least two rows to standardize".into()));
    }
    let n = ds.len() as f64;
    let d = ds.dim();
    let mean: Vec<f64> = (0..d).map(|j| ds.units().iter().map(|u| u.x()[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| (ds.units().iter().map(|u| (u.x()[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    if let Some(j) = sd.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::Domain(format!("feature {j} is constant")));
    }
    Ok(move |x: &[f64]| {
        let z: Vec<f64> = x.iter().zip(&mean).zip(&sd).map(|((v, m), s)| (v - m) / s).collect();
        expit(dot(&REAL_SELECTION, &z))
    })
}

/// Per run: hide outcomes by the selection model, fit every method on the
/// observed part, and score it on the hidden target outcomes.
pub fn run_real(ds: &Dataset, methods: &[Method], runs: usize, w_trunc: f64, seed: Seed) -> Result<Vec<McResult>> {
    if methods.is_empty() || runs == 0 {
        return Err(Error::Config("need at least one method and one run".into()));
    }
    if ds.n_labeled() != ds.len() {
        return Err(Error::Schema("the real-data study needs every outcome".into()));
    }
    let p = real_propensity(ds)?;
    let per_run: Vec<Vec<_>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = seed.child(run as u64);
            let (observed, hidden) = apply_missingness(ds, &p, &mut run_seed.child(0).rng())?;
            let sim = Simulated { observed, hidden };
            let test = sim.hidden_pairs();
            let xs: Vec<&[f64]> = test.iter().map(|t| t.0.as_slice()).collect();
            methods
                .iter()
                .enumerate()
                .map(|(k, method)| {
                    let method_seed = run_seed.child(2 + k as u64);
                    let fitted = method.fit(&sim.observed, &mut method_seed.rng())?;
                    let cov = eval_coverage(&|x| fitted.predict(x), &test, w_trunc);
                    Ok(super::mc::record(method, &fitted, run, method_seed, cov, &xs))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, m)| aggregate(m.label(), per_run.iter().map(|r| r[k].clone()).collect()))
        .collect())
}
