use rayon::prelude::*;

use super::{eval_coverage, gen_kang_schafer, ks_target_draws, Coverage};
use crate::baselines::{fit_wcp, WcpConfig, WcpModel};
use crate::data::{Dataset, Rng, Seed};
use crate::drp::{fit, fit_cv, fit_efcp, DrpConfig, EfcpModel, FittedDrp, Variant};
use crate::error::{Error, Result};
use crate::scores::{PredictionSet, ScoreSpec};

pub const METHOD_NAMES: &[&str] = &["full", "split3", "split2", "wcp", "efcp", "cv"];

/// Ridge penalties used by the selection and cross-validation arms.
pub const LAMBDA_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgpKind {
    KangSchafer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub n: usize,
}

impl DgpSpec {
    pub fn kang_schafer(n: usize) -> Result<Self> {
        if n < 50 {
            return Err(Error::Config(format!("simulation size {n} is below 50")));
        }
        Ok(Self { kind: DgpKind::KangSchafer, n })
    }
}

#[derive(Debug, Clone)]
pub enum Method {
    Drp { label: String, cfg: DrpConfig },
    Wcp { label: String, cfg: WcpConfig },
    Efcp { label: String, candidates: Vec<ScoreSpec>, cfg: DrpConfig },
    Cv { label: String, lambdas: Vec<f64>, cfg: DrpConfig },
}

impl Method {
    /// One of [`METHOD_NAMES`] with ridge scores and fitted nuisances.
    pub fn from_name(name: &str, alpha: f64, w_max: f64) -> Result<Self> {
        let drp = |variant| DrpConfig::new(alpha, variant, ScoreSpec::ridge(1.0));
        let label = name.to_string();
        Ok(match name {
            "full" => Self::Drp { label, cfg: drp(Variant::Full) },
            "split3" => Self::Drp { label, cfg: drp(Variant::Split3) },
            "split2" => Self::Drp { label, cfg: drp(Variant::Split2) },
            "wcp" => Self::Wcp { label, cfg: WcpConfig::new(alpha, w_max) },
            "efcp" => Self::Efcp {
                label,
                candidates: LAMBDA_GRID.iter().map(|&l| ScoreSpec::ridge(l)).collect(),
                cfg: drp(Variant::Split2),
            },
            "cv" => Self::Cv { label, lambdas: LAMBDA_GRID.to_vec(), cfg: drp(Variant::Split2) },
            other => {
                return Err(Error::Config(format!(
                    "unknown method '{other}'; valid names: {}",
                    METHOD_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn drp(label: impl Into<String>, cfg: DrpConfig) -> Self {
        Self::Drp { label: label.into(), cfg }
    }

    pub fn label(&self) -> &str {
        match self {
            Self::Drp { label, .. } | Self::Wcp { label, .. } | Self::Efcp { label, .. } | Self::Cv { label, .. } => label,
        }
    }

    pub fn fit(&self, ds: &Dataset, rng: &mut Rng) -> Result<Fitted> {
        Ok(match self {
            Self::Drp { cfg, .. } => Fitted::Drp(fit(ds, cfg, rng)?),
            Self::Wcp { cfg, .. } => Fitted::Wcp(fit_wcp(ds, cfg, rng)?),
            Self::Efcp { candidates, cfg, .. } => Fitted::Efcp(fit_efcp(ds, candidates, cfg, rng)?),
            Self::Cv { lambdas, cfg, .. } => Fitted::Drp(fit_cv(ds, lambdas, cfg, rng)?.fitted),
        })
    }
}

#[derive(Debug, Clone)]
pub enum Fitted {
    Drp(FittedDrp),
    Wcp(WcpModel),
    Efcp(EfcpModel),
}

impl Fitted {
    pub fn predict(&self, x: &[f64]) -> PredictionSet {
        match self {
            Self::Drp(f) => f.predict(x),
            Self::Wcp(w) => w.predict(x),
            Self::Efcp(e) => e.predict(x),
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            Self::Drp(f) => Some(f.theta()),
            _ => None,
        }
    }

    /// For a selection model: whether the chosen set has exactly the
    /// smallest candidate width at every `x`.
    pub fn dominance(&self, xs: &[&[f64]]) -> Option<bool> {
        let Self::Efcp(e) = self else { return None };
        Some(xs.iter().all(|x| {
            let min = e.members.iter().map(|m| m.predict(x).width()).fold(f64::INFINITY, f64::min);
            e.predict(x).width() == min
        }))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunRecord {
    pub method: String,
    pub run: usize,
    pub coverage: f64,
    pub width: f64,
    pub infinite_fraction: f64,
    pub seed: u64,
    pub theta: Option<f64>,
    pub dominance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct McResult {
    pub method: String,
    pub runs: usize,
    pub coverage: f64,
    pub coverage_se: f64,
    pub width: f64,
    pub width_se: f64,
    pub infinite_fraction: f64,
    pub records: Vec<RunRecord>,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Exact means and Monte Carlo standard errors of per-run records.
pub fn aggregate(method: &str, records: Vec<RunRecord>) -> McResult {
    let cov: Vec<f64> = records.iter().map(|r| r.coverage).collect();
    let wid: Vec<f64> = records.iter().map(|r| r.width).collect();
    let inf: Vec<f64> = records.iter().map(|r| r.infinite_fraction).collect();
    let (coverage, coverage_se) = mean_se(&cov);
    let (width, width_se) = mean_se(&wid);
    McResult {
        method: method.to_string(),
        runs: records.len(),
        coverage,
        coverage_se,
        width,
        width_se,
        infinite_fraction: mean_se(&inf).0,
        records,
    }
}

pub(crate) fn record(method: &Method, fitted: &Fitted, run: usize, seed: Seed, cov: Coverage, xs: &[&[f64]]) -> RunRecord {
    RunRecord {
        method: method.label().to_string(),
        run,
        coverage: cov.coverage,
        width: cov.width,
        infinite_fraction: cov.infinite_fraction,
        seed: seed.0,
        theta: fitted.theta(),
        dominance: fitted.dominance(xs),
    }
}

/// Replicate: fresh data, every method fitted on it, coverage on
/// `test_size` fresh target draws. Replications run in parallel; each owns
/// the stream `seed.child(run)`, and results come back in run order.
pub fn run_mc(
    dgp: &DgpSpec,
    methods: &[Method],
    runs: usize,
    test_size: usize,
    w_trunc: f64,
    seed: Seed,
) -> Result<Vec<McResult>> {
    if methods.is_empty() || runs == 0 {
        return Err(Error::Config("need at least one method and one run".into()));
    }
    let per_run: Vec<Vec<RunRecord>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = seed.child(run as u64);
            let sim = match dgp.kind {
                super::DgpKind::KangSchafer => gen_kang_schafer(dgp.n, &mut run_seed.child(0).rng())?,
            };
            // fresh draws, never part of the training data
            let test = ks_target_draws(test_size, &mut run_seed.child(1).rng());
            let xs: Vec<&[f64]> = test.iter().map(|t| t.0.as_slice()).collect();
            methods
                .iter()
                .enumerate()
                .map(|(k, method)| {
                    let method_seed = run_seed.child(2 + k as u64);
                    let fitted = method.fit(&sim.observed, &mut method_seed.rng())?;
                    let cov = eval_coverage(&|x| fitted.predict(x), &test, w_trunc);
                    Ok(record(method, &fitted, run, method_seed, cov, &xs))
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_method_lists_valid_names() {
        let err = Method::from_name("jackknife", 0.1, 10.0).unwrap_err().to_string();
        for name in METHOD_NAMES {
            assert!(err.contains(name));
        }
    }

    #[test]
    fn single_run_record_is_the_aggregate() {
        let methods = vec![Method::from_name("split3", 0.1, 10.0).unwrap()];
        let out = run_mc(&DgpSpec::kang_schafer(600).unwrap(), &methods, 1, 200, 10.0, Seed(1)).unwrap();
        let r = &out[0];
        assert_eq!(r.runs, 1);
        assert_eq!(r.coverage, r.records[0].coverage);
        assert_eq!(r.width, r.records[0].width);
        assert_eq!(r.coverage_se, 0.0);
    }

    #[test]
    fn reproducible_and_ordered() {
        let methods: Vec<_> = ["split2", "wcp"].iter().map(|n| Method::from_name(n, 0.1, 10.0).unwrap()).collect();
        let dgp = DgpSpec::kang_schafer(500).unwrap();
        let a = run_mc(&dgp, &methods, 4, 100, 10.0, Seed(7)).unwrap();
        let b = run_mc(&dgp, &methods, 4, 100, 10.0, Seed(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].records.iter().map(|r| r.run).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let mean = a[1].records.iter().map(|r| r.coverage).sum::<f64>() / 4.0;
        assert_eq!(a[1].coverage, mean);
    }

    #[test]
    fn small_dgp_is_rejected() {
        assert!(DgpSpec::kang_schafer(10).is_err());
    }
}
