//! Doubly robust prediction: fit a score, the two nuisances and the
//! calibrated threshold, then return `{y : R(x, y) <= theta_hat}`.

mod efcp;

pub use efcp::{cv_select_lambda, fit_cv, fit_efcp, CvFit, EfcpModel, CV_FOLDS};

use std::fmt;
use std::sync::Arc;

use crate::data::{split::split_n, Dataset, Rng};
use crate::error::{Error, Result};
use crate::influence::{check_alpha, solve_quantile, QuantileSolution, ScoredUnit};
use crate::nuisance::{
    fit_cond_cdf, fit_propensity_on, CondCdf, ConstCdf, ConstRatio, PropensityRatio, DEFAULT_CLIP,
    DEFAULT_GRID_SIZE,
};
use crate::scores::{PredictionSet, ScoreModel, ScoreSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Score and nuisances on one half, threshold on the other.
    Split2,
    /// Score, nuisances and threshold on three disjoint parts.
    Split3,
    /// Everything on the full data.
    Full,
}

impl Variant {
    pub fn default_fractions(self) -> Vec<f64> {
        match self {
            Self::Split2 => vec![0.5, 0.5],
            Self::Split3 => vec![1.0 / 3.0; 3],
            Self::Full => vec![1.0],
        }
    }
}

/// Builds `m(theta, x)` for a given fitted score, e.g. the exact conditional
/// score CDF of a simulation.
pub type CdfFactory = Arc<dyn Fn(&ScoreModel) -> Arc<dyn CondCdf> + Send + Sync>;

#[derive(Clone)]
pub enum PropensitySpec {
    Fitted { clip: f64 },
    Given(Arc<dyn PropensityRatio>),
}

#[derive(Clone)]
pub enum CdfSpec {
    Fitted { grid_size: usize },
    Given(CdfFactory),
}

impl PropensitySpec {
    pub fn constant(pi: f64) -> Self {
        Self::Given(Arc::new(ConstRatio(pi)))
    }
}

impl CdfSpec {
    pub fn constant(m: f64) -> Self {
        Self::Given(Arc::new(move |_: &ScoreModel| Arc::new(ConstCdf(m)) as Arc<dyn CondCdf>))
    }

    pub fn from_factory(f: impl Fn(&ScoreModel) -> Arc<dyn CondCdf> + Send + Sync + 'static) -> Self {
        Self::Given(Arc::new(f))
    }
}

impl fmt::Debug for PropensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fitted { clip } => write!(f, "Fitted {{ clip: {clip} }}"),
            Self::Given(_) => f.write_str("Given(..)"),
        }
    }
}

impl fmt::Debug for CdfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fitted { grid_size } => write!(f, "Fitted {{ grid_size: {grid_size} }}"),
            Self::Given(_) => f.write_str("Given(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NuisanceSpec {
    pub propensity: PropensitySpec,
    pub cdf: CdfSpec,
}

impl Default for NuisanceSpec {
    fn default() -> Self {
        Self {
            propensity: PropensitySpec::Fitted { clip: DEFAULT_CLIP },
            cdf: CdfSpec::Fitted { grid_size: DEFAULT_GRID_SIZE },
        }
    }
}

#[derive(Debug, Clone)]
pub struct DrpConfig {
    pub alpha: f64,
    pub variant: Variant,
    pub score: ScoreSpec,
    pub nuisance: NuisanceSpec,
    /// `None` uses [`Variant::default_fractions`].
    pub fractions: Option<Vec<f64>>,
}

impl DrpConfig {
    pub fn new(alpha: f64, variant: Variant, score: ScoreSpec) -> Self {
        Self { alpha, variant, score, nuisance: NuisanceSpec::default(), fractions: None }
    }

    pub fn with_nuisance(mut self, nuisance: NuisanceSpec) -> Self {
        self.nuisance = nuisance;
        self
    }

    pub fn with_fractions(mut self, fractions: Vec<f64>) -> Self {
        self.fractions = Some(fractions);
        self
    }

    pub(crate) fn fractions_for(&self, variant: Variant) -> Result<Vec<f64>> {
        let f = self.fractions.clone().unwrap_or_else(|| variant.default_fractions());
        let want = variant.default_fractions().len();
        if f.len() != want {
            return Err(Error::Config(format!("{variant:?} needs {want} split fractions, got {}", f.len())));
        }
        Ok(f)
    }
}

/// Index sets used by a fit.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct FitIndices {
    pub score: Vec<usize>,
    pub nuisance: Vec<usize>,
    pub eval: Vec<usize>,
}

#[derive(Clone)]
pub struct FittedDrp {
    pub score: ScoreModel,
    pub pi: Arc<dyn PropensityRatio>,
    pub m: Arc<dyn CondCdf>,
    pub solution: QuantileSolution,
    pub alpha: f64,
    pub variant: Variant,
    pub indices: FitIndices,
}

impl fmt::Debug for FittedDrp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FittedDrp")
            .field("score", &self.score)
            .field("solution", &self.solution)
            .field("alpha", &self.alpha)
            .field("variant", &self.variant)
            .finish_non_exhaustive()
    }
}

impl FittedDrp {
    pub fn theta(&self) -> f64 {
        self.solution.theta
    }

    pub fn predict(&self, x: &[f64]) -> PredictionSet {
        predict(self, x)
    }
}

/// The score's sub-level set at `theta_hat`; the whole line when
/// `theta_hat = +inf`.
pub fn predict(fitted: &FittedDrp, x: &[f64]) -> PredictionSet {
    fitted.score.interval(x, fitted.solution.theta)
}

pub(crate) fn fit_score(ds: &Dataset, idx: &[usize], spec: &ScoreSpec, what: &str) -> Result<ScoreModel> {
    if ds.labeled_at(idx).next().is_none() {
        return Err(Error::Config(format!("{what} part has no labeled units")));
    }
    spec.fit(ds.labeled_at(idx))
}

pub(crate) fn fit_propensity_part(ds: &Dataset, idx: &[usize], spec: &PropensitySpec) -> Result<Arc<dyn PropensityRatio>> {
    Ok(match spec {
        PropensitySpec::Fitted { clip } => Arc::new(fit_propensity_on(ds, Some(idx), *clip)?),
        PropensitySpec::Given(pi) => Arc::clone(pi),
    })
}

pub(crate) fn fit_cdf_part(ds: &Dataset, idx: &[usize], score: &ScoreModel, spec: &CdfSpec) -> Result<Arc<dyn CondCdf>> {
    Ok(match spec {
        CdfSpec::Fitted { grid_size } => {
            let scored: Vec<(&[f64], f64)> = ds.labeled_at(idx).map(|(x, y)| (x, score.score(x, y))).collect();
            if scored.is_empty() {
                return Err(Error::Config("nuisance part has no labeled units".into()));
            }
            Arc::new(fit_cond_cdf(scored, *grid_size)?)
        }
        CdfSpec::Given(factory) => factory(score),
    })
}

pub(crate) fn eval_units(ds: &Dataset, idx: &[usize], score: &ScoreModel) -> Vec<ScoredUnit> {
    idx.iter()
        .map(|&i| {
            let u = &ds.units()[i];
            match u.y() {
                Some(y) => ScoredUnit::labeled(u.x().to_vec(), score.score(u.x(), y)),
                None => ScoredUnit::target(u.x().to_vec()),
            }
        })
        .collect()
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    // both sorted
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

fn fit_on(ds: &Dataset, cfg: &DrpConfig, variant: Variant, indices: FitIndices) -> Result<FittedDrp> {
    check_alpha(cfg.alpha)?;
    if variant != Variant::Full {
        assert!(disjoint(&indices.score, &indices.eval), "score training and calibration overlap");
    }
    let score = fit_score(ds, &indices.score, &cfg.score, "score-training")?;
    let pi = fit_propensity_part(ds, &indices.nuisance, &cfg.nuisance.propensity)?;
    let m = fit_cdf_part(ds, &indices.nuisance, &score, &cfg.nuisance.cdf)?;
    let units = eval_units(ds, &indices.eval, &score);
    let solution = solve_quantile(&units, pi.as_ref(), m.as_ref(), cfg.alpha)?;
    Ok(FittedDrp { score, pi, m, solution, alpha: cfg.alpha, variant, indices })
}

/// Three-way split: score on part A, nuisances on part B, threshold on part C.
pub fn fit_split3(ds: &Dataset, cfg: &DrpConfig, rng: &mut Rng) -> Result<FittedDrp> {
    let plan = split_n(ds.len(), &cfg.fractions_for(Variant::Split3)?, rng)?;
    let indices = FitIndices {
        score: plan.part(0).to_vec(),
        nuisance: plan.part(1).to_vec(),
        eval: plan.part(2).to_vec(),
    };
    fit_on(ds, cfg, Variant::Split3, indices)
}

/// Two-way split: score and nuisances on part 1, threshold on part 2.
pub fn fit_split2(ds: &Dataset, cfg: &DrpConfig, rng: &mut Rng) -> Result<FittedDrp> {
    let plan = split_n(ds.len(), &cfg.fractions_for(Variant::Split2)?, rng)?;
    let indices = FitIndices {
        score: plan.part(0).to_vec(),
        nuisance: plan.part(0).to_vec(),
        eval: plan.part(1).to_vec(),
    };
    fit_on(ds, cfg, Variant::Split2, indices)
}

/// No splitting; deterministic given the data.
pub fn fit_full(ds: &Dataset, cfg: &DrpConfig) -> Result<FittedDrp> {
    let all: Vec<usize> = (0..ds.len()).collect();
    let indices = FitIndices { score: all.clone(), nuisance: all.clone(), eval: all };
    fit_on(ds, cfg, Variant::Full, indices)
}

/// Dispatch on `cfg.variant`.
pub fn fit(ds: &Dataset, cfg: &DrpConfig, rng: &mut Rng) -> Result<FittedDrp> {
    match cfg.variant {
        Variant::Split2 => fit_split2(ds, cfg, rng),
        Variant::Split3 => fit_split3(ds, cfg, rng),
        Variant::Full => fit_full(ds, cfg),
    }
}
