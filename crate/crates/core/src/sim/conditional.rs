//! Coverage at fixed covariate points rather than on average over the
//! target population.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{gen_kang_schafer, ks_covariates, ks_mean, Method};
use crate::data::Seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CondConfig {
    /// Training sample size per fit.
    pub n: usize,
    /// Number of fixed test points.
    pub points: usize,
    /// Outcome draws per point and fit.
    pub draws: usize,
    /// Independent training sets; per-point results are averaged over them.
    pub fits: usize,
    pub alpha: f64,
    pub w_trunc: f64,
}

impl Default for CondConfig {
    fn default() -> Self {
        Self { n: 2000, points: 200, draws: 100, fits: 100, alpha: 0.1, w_trunc: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CondCovRecord {
    pub method: String,
    pub x: Vec<f64>,
    pub norm: f64,
    pub coverage: f64,
    /// Mean truncated width over fits.
    pub width: f64,
}

/// Draw `points` standard normal test points once, then for each of `fits`
/// fresh training sets fit every method and score it on `draws` outcomes at
/// every point. Output is grouped by method, points in draw order.
pub fn run_conditional(methods: &[Method], cfg: &CondConfig, seed: Seed) -> Result<Vec<CondCovRecord>> {
    if methods.is_empty() || cfg.points == 0 || cfg.draws == 0 || cfg.fits == 0 {
        return Err(Error::Config("conditional study needs methods, points, draws and fits".into()));
    }
    let mut point_rng = seed.child(0).rng();
    let points: Vec<Vec<f64>> = (0..cfg.points).map(|_| ks_covariates(&mut point_rng)).collect();

    // per fit: [method][point] -> (covered fraction, truncated width)
    let per_fit: Vec<Vec<Vec<(f64, f64)>>> = (0..cfg.fits)
        .into_par_iter()
        .map(|f| {
            let fit_seed = seed.child(1 + f as u64);
            let sim = gen_kang_schafer(cfg.n, &mut fit_seed.child(0).rng())?;
            let mut y_rng = fit_seed.child(1).rng();
            let ys: Vec<Vec<f64>> = points
                .iter()
                .map(|x| {
                    let mu = ks_mean(x);
                    (0..cfg.draws).map(|_| mu + Distribution::<f64>::sample(&StandardNormal, &mut y_rng)).collect()
                })
                .collect();
            methods
                .iter()
                .enumerate()
                .map(|(k, method)| {
                    let fitted = method.fit(&sim.observed, &mut fit_seed.child(2 + k as u64).rng())?;
                    Ok(points
                        .iter()
                        .zip(&ys)
                        .map(|(x, y)| {
                            let set = fitted.predict(x);
                            let hit = y.iter().filter(|&&v| set.contains(v)).count();
                            (hit as f64 / cfg.draws as f64, set.width().min(cfg.w_trunc))
                        })
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let fits = cfg.fits as f64;
    let mut out = Vec::with_capacity(methods.len() * cfg.points);
    for (k, method) in methods.iter().enumerate() {
        for (p, x) in points.iter().enumerate() {
            let (cov, wid) = per_fit.iter().fold((0.0, 0.0), |acc, f| (acc.0 + f[k][p].0, acc.1 + f[k][p].1));
            out.push(CondCovRecord {
                method: method.label().to_string(),
                norm: x.iter().map(|v| v * v).sum::<f64>().sqrt(),
                x: x.clone(),
                coverage: cov / fits,
                width: wid / fits,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drp::{CdfSpec, DrpConfig, NuisanceSpec, PropensitySpec, Variant};
    use crate::scores::ScoreSpec;
    use crate::sim::{ks_oracle_cdf, ks_oracle_pi};
    use std::sync::Arc;

    fn small() -> CondConfig {
        CondConfig { n: 400, points: 30, draws: 50, fits: 3, ..CondConfig::default() }
    }

    #[test]
    fn one_record_per_point_and_method() {
        let methods: Vec<_> = ["split3", "wcp"].iter().map(|n| Method::from_name(n, 0.1, 10.0).unwrap()).collect();
        let recs = run_conditional(&methods, &small(), Seed(3)).unwrap();
        assert_eq!(recs.len(), 60);
        assert!(recs.iter().all(|r| (0.0..=1.0).contains(&r.coverage)));
        assert_eq!(recs[0].x, recs[30].x);
    }

    #[test]
    fn deterministic() {
        let methods = vec![Method::from_name("split2", 0.1, 10.0).unwrap()];
        assert_eq!(run_conditional(&methods, &small(), Seed(9)).unwrap(), run_conditional(&methods, &small(), Seed(9)).unwrap());
    }

    #[test]
    fn norms_concentrate_near_two() {
        let methods = vec![Method::from_name("split2", 0.1, 10.0).unwrap()];
        let cfg = CondConfig { n: 300, points: 200, draws: 1, fits: 1, ..CondConfig::default() };
        let recs = run_conditional(&methods, &cfg, Seed(4)).unwrap();
        let mean = recs.iter().map(|r| r.norm).sum::<f64>() / 200.0;
        // E|Z| for a 4-dimensional standard normal is 3 sqrt(pi/2) / 2
        let truth = 1.5 * (std::f64::consts::PI / 2.0).sqrt();
        assert!((mean - truth).abs() < 0.15, "{mean}");
    }

    #[test]
    fn oracle_nuisances_cover_every_point() {
        let nuisance = NuisanceSpec {
            propensity: PropensitySpec::Given(Arc::new(ks_oracle_pi())),
            cdf: CdfSpec::Given(ks_oracle_cdf()),
        };
        let cfg = DrpConfig::new(0.1, Variant::Full, ScoreSpec::ridge(1.0)).with_nuisance(nuisance);
        let methods = vec![Method::drp("oracle", cfg)];
        let cc = CondConfig { n: 2000, points: 20, draws: 400, fits: 2, ..CondConfig::default() };
        for r in run_conditional(&methods, &cc, Seed(5)).unwrap() {
            assert!((r.coverage - 0.9).abs() < 0.06, "{} at norm {}", r.coverage, r.norm);
        }
    }
}
