//! Individual treatment effect intervals. Each potential outcome is a
//! covariate-shift problem: the arm that reveals it is the labeled source,
//! the other arm is the target.

use crate::data::{Dataset, Rng, Unit};
use crate::drp::{fit_split3, DrpConfig, FittedDrp};
use crate::error::{Error, Result};
use crate::scores::PredictionSet;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CausalUnit {
    pub x: Vec<f64>,
    pub treated: bool,
    /// `Y(1)` if treated, `Y(0)` otherwise.
    pub y_obs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IteInterval {
    pub lower: f64,
    pub upper: f64,
}

impl IteInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, tau: f64) -> bool {
        self.lower <= tau && tau <= self.upper
    }
}

/// The source arm as labeled units, the other arm as unlabeled target units.
pub fn counterfactual_dataset(units: &[CausalUnit], source_treated: bool) -> Result<Dataset> {
    let n_source = units.iter().filter(|u| u.treated == source_treated).count();
    if n_source == 0 || n_source == units.len() {
        return Err(Error::Config("both treatment arms must be present".into()));
    }
    Dataset::new(
        units
            .iter()
            .map(|u| {
                if u.treated == source_treated {
                    Unit::labeled(u.x.clone(), u.y_obs)
                } else {
                    Unit::target(u.x.clone())
                }
            })
            .collect(),
    )
}

/// Prediction set for the potential outcome revealed by `source_treated`,
/// calibrated for the covariates of the other arm.
pub fn fit_counterfactual(units: &[CausalUnit], source_treated: bool, cfg: &DrpConfig, rng: &mut Rng) -> Result<FittedDrp> {
    fit_split3(&counterfactual_dataset(units, source_treated)?, cfg, rng)
}

fn endpoints(set: PredictionSet) -> Option<(f64, f64)> {
    set.bounds()
}

/// Treated unit: `y_obs - C0(x)`. Control unit: `C1(x) - y_obs`. `None`
/// when the relevant set is empty.
pub fn ite_interval_insample(c0: &FittedDrp, c1: &FittedDrp, unit: &CausalUnit) -> Option<IteInterval> {
    if unit.treated {
        let (l0, u0) = endpoints(c0.predict(&unit.x))?;
        Some(IteInterval { lower: unit.y_obs - u0, upper: unit.y_obs - l0 })
    } else {
        let (l1, u1) = endpoints(c1.predict(&unit.x))?;
        Some(IteInterval { lower: l1 - unit.y_obs, upper: u1 - unit.y_obs })
    }
}

/// `[L1 - U0, U1 - L0]` from sets fitted at level `1 - alpha / 2` each.
pub fn ite_interval_future(c0_half: &FittedDrp, c1_half: &FittedDrp, x: &[f64]) -> Option<IteInterval> {
    difference(c1_half.predict(x), c0_half.predict(x))
}

/// `C1 - C0` as an interval.
pub fn difference(c1: PredictionSet, c0: PredictionSet) -> Option<IteInterval> {
    let (l1, u1) = endpoints(c1)?;
    let (l0, u0) = endpoints(c0)?;
    Some(IteInterval { lower: l1 - u0, upper: u1 - l0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Seed;
    use crate::drp::{FitIndices, Variant};
    use crate::influence::QuantileSolution;
    use crate::nuisance::{ConstCdf, ConstRatio};
    use std::sync::Arc;
    use crate::scores::{RidgeModel, ScoreModel, ScoreSpec};
    use rand::Rng as _;

    fn fixed(mu: f64, theta: f64) -> FittedDrp {
        // a constant mean and a chosen threshold
        FittedDrp {
            score: ScoreModel::AbsResidual(RidgeModel { coef: vec![0.0], intercept: mu, lambda: 1.0 }),
            pi: Arc::new(ConstRatio(1.0)),
            m: Arc::new(ConstCdf(0.0)),
            solution: QuantileSolution { theta, mean: 0.0 },
            alpha: 0.1,
            variant: Variant::Split3,
            indices: FitIndices { score: vec![], nuisance: vec![], eval: vec![] },
        }
    }

    fn confounded(n: usize, seed: u64, randomized: bool) -> Vec<CausalUnit> {
        let mut rng = Seed(seed).rng();
        (0..n)
            .map(|_| {
                let x = rng.random_range(-2.0..2.0);
                let p = if randomized { 0.5 } else { crate::data::expit(x) };
                let treated = rng.random::<f64>() < p;
                let y0 = x + rng.random_range(-1.0..1.0);
                let y1 = y0 + 2.0;
                CausalUnit { x: vec![x], treated, y_obs: if treated { y1 } else { y0 } }
            })
            .collect()
    }

    #[test]
    fn insample_arithmetic() {
        let c0 = fixed(2.0, 1.0); // [1, 3]
        let c1 = fixed(0.0, 1.0); // [-1, 1]
        let t = CausalUnit { x: vec![0.0], treated: true, y_obs: 5.0 };
        assert_eq!(ite_interval_insample(&c0, &c1, &t), Some(IteInterval { lower: 2.0, upper: 4.0 }));
        let c = CausalUnit { x: vec![0.0], treated: false, y_obs: 0.0 };
        assert_eq!(ite_interval_insample(&c0, &c1, &c), Some(IteInterval { lower: -1.0, upper: 1.0 }));
    }

    #[test]
    fn future_arithmetic() {
        let c1 = fixed(1.0, 1.0); // [0, 2]
        let c0 = fixed(0.0, 1.0); // [-1, 1]
        let iv = ite_interval_future(&c0, &c1, &[0.0]).unwrap();
        assert_eq!(iv, IteInterval { lower: -1.0, upper: 3.0 });
        assert_eq!(iv.width(), c0.predict(&[0.0]).width() + c1.predict(&[0.0]).width());
        let inf = fixed(0.0, f64::INFINITY);
        let iv = ite_interval_future(&inf, &c1, &[0.0]).unwrap();
        assert_eq!((iv.lower, iv.upper), (f64::NEG_INFINITY, f64::INFINITY));
        assert!(ite_interval_future(&fixed(0.0, -1.0), &c1, &[0.0]).is_none());
    }

    #[test]
    fn missing_arm() {
        let units: Vec<_> = confounded(50, 2, true).into_iter().map(|u| CausalUnit { treated: true, ..u }).collect();
        let cfg = DrpConfig::new(0.1, Variant::Split3, ScoreSpec::ridge(1.0));
        assert!(matches!(fit_counterfactual(&units, false, &cfg, &mut Seed(0).rng()), Err(Error::Config(_))));
    }

    #[test]
    fn randomized_assignment_looks_like_split_conformal() {
        let units = confounded(3000, 3, true);
        let cfg = DrpConfig::new(0.1, Variant::Split3, ScoreSpec::ridge(1.0));
        let f = fit_counterfactual(&units, false, &cfg, &mut Seed(4).rng()).unwrap();
        // the propensity odds are flat near 1
        for x in [-1.5, 0.0, 1.5] {
            assert!((f.pi.ratio(&[x]) - 1.0).abs() < 0.25);
        }
        // the threshold is close to the plain split conformal order statistic
        let ds = counterfactual_dataset(&units, false).unwrap();
        let mut resid: Vec<f64> = f
            .indices
            .eval
            .iter()
            .filter_map(|&i| ds.units()[i].y().map(|y| f.score.score(ds.units()[i].x(), y)))
            .collect();
        resid.sort_by(f64::total_cmp);
        let k = ((resid.len() + 1) as f64 * 0.9).ceil() as usize;
        assert!((f.theta() - resid[k - 1]).abs() < 0.05, "{} vs {}", f.theta(), resid[k - 1]);
    }

    #[test]
    fn deterministic() {
        let units = confounded(600, 5, false);
        let cfg = DrpConfig::new(0.1, Variant::Split3, ScoreSpec::ridge(1.0));
        let a = fit_counterfactual(&units, true, &cfg, &mut Seed(6).rng()).unwrap();
        let b = fit_counterfactual(&units, true, &cfg, &mut Seed(6).rng()).unwrap();
        assert_eq!(a.theta(), b.theta());
    }
}
