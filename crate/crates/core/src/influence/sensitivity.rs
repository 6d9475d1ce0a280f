//! Estimating equation under a departure from missing-at-random encoded
//! by a log odds-ratio function `gamma(x, y)` with `gamma(x, 0) = 0`.
//!
//! The labeled weight becomes `exp(-eta(x) - gamma(x, y))` and `m` is the
//! conditional score CDF of the target population.

use std::fmt;
use std::sync::Arc;

use super::{candidate_set, if_term, solve_terms, QuantileSolution, Term};
use crate::error::{Error, Result};
use crate::nuisance::CondCdf;

type GammaFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type EtaFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SensitivitySpec {
    gamma: GammaFn,
    eta: EtaFn,
}

impl SensitivitySpec {
    pub fn new(
        gamma: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        eta: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { gamma: Arc::new(gamma), eta: Arc::new(eta) }
    }

    /// `gamma = 0`: outcomes are missing at random.
    pub fn mar(eta: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(|_, _| 0.0, eta)
    }

    pub fn gamma(&self, x: &[f64], y: f64) -> f64 {
        (self.gamma)(x, y)
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        (self.eta)(x)
    }

    pub fn weight(&self, x: &[f64], y: f64) -> f64 {
        (-self.eta(x) - self.gamma(x, y)).exp()
    }
}

impl fmt::Debug for SensitivitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SensitivitySpec(..)")
    }
}

/// Evaluation unit carrying `(y, r)` exactly when labeled.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SensUnit {
    pub x: Vec<f64>,
    pub obs: Option<(f64, f64)>,
}

impl SensUnit {
    pub fn labeled(x: Vec<f64>, y: f64, score: f64) -> Self {
        Self { x, obs: Some((y, score)) }
    }

    pub fn target(x: Vec<f64>) -> Self {
        Self { x, obs: None }
    }
}

pub fn sens_if_value(
    theta: f64,
    x: &[f64],
    obs: Option<(f64, f64)>,
    spec: &SensitivitySpec,
    m: &dyn CondCdf,
    alpha: f64,
) -> f64 {
    let weight = obs.map_or(0.0, |(y, _)| spec.weight(x, y));
    if_term(theta, obs.map(|o| o.1), weight, m.cdf(theta, x), alpha)
}

fn prepare<'a>(units: &'a [SensUnit], spec: &SensitivitySpec, m: &'a dyn CondCdf) -> Result<Vec<Term<'a>>> {
    units
        .iter()
        .map(|u| {
            let weight = match u.obs {
                Some((y, _)) => {
                    let base = spec.gamma(&u.x, 0.0);
                    if base != 0.0 {
                        return Err(Error::Domain(format!("gamma(x, 0) = {base}; the baseline must be 0")));
                    }
                    spec.weight(&u.x, y)
                }
                None => 0.0,
            };
            Ok(Term { score: u.obs.map(|o| o.1), weight, m: m.bind(&u.x) })
        })
        .collect()
}

pub fn empirical_sens_if_mean(
    theta: f64,
    units: &[SensUnit],
    spec: &SensitivitySpec,
    m: &dyn CondCdf,
    alpha: f64,
) -> Result<f64> {
    if units.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    Ok(super::mean_at(&prepare(units, spec, m)?, theta, alpha))
}

/// Smallest candidate with nonnegative mean of [`sens_if_value`].
pub fn solve_quantile_sens(
    units: &[SensUnit],
    spec: &SensitivitySpec,
    m: &dyn CondCdf,
    alpha: f64,
) -> Result<QuantileSolution> {
    let terms = prepare(units, spec, m)?;
    let candidates = candidate_set(units.iter().filter_map(|u| u.obs.map(|o| o.1)), m.breakpoints());
    solve_terms(&terms, &candidates, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Seed;
    use crate::influence::{if_value, solve_quantile, ScoredUnit};
    use crate::nuisance::{ConstCdf, FnCdf, FnRatio, PropensityRatio};
    use rand::Rng;

    fn eta(x: &[f64]) -> f64 {
        0.4 * x[0] - 0.2
    }

    fn units(seed: u64, n: usize) -> (Vec<SensUnit>, Vec<ScoredUnit>) {
        let mut rng = Seed(seed).rng();
        let mut sens = Vec::new();
        let mut plain = Vec::new();
        for _ in 0..n {
            let x = vec![rng.random_range(-2.0..2.0)];
            if rng.random::<bool>() {
                sens.push(SensUnit::target(x.clone()));
                plain.push(ScoredUnit::target(x));
            } else {
                let y: f64 = rng.random_range(-3.0..3.0);
                sens.push(SensUnit::labeled(x.clone(), y, y.abs()));
                plain.push(ScoredUnit::labeled(x, y.abs()));
            }
        }
        (sens, plain)
    }

    fn m() -> FnCdf {
        FnCdf::new(|t, x| (t / (3.0 + x[0].abs())).clamp(0.0, 1.0))
    }

    #[test]
    fn weight_by_substitution() {
        let spec = SensitivitySpec::new(|_, _| 2f64.ln(), |_| 0.0);
        assert!((spec.weight(&[1.0], 3.0) - 0.5).abs() < 1e-15);
        let v = sens_if_value(1.0, &[1.0], Some((3.0, 0.2)), &spec, &ConstCdf(0.0), 0.1);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_gamma_reduces_exactly() {
        let spec = SensitivitySpec::mar(eta);
        let pi = FnRatio::new(|x| (-eta(x)).exp());
        let (sens, plain) = units(11, 200);
        for (s, p) in sens.iter().zip(&plain) {
            for theta in [-1.0, 0.3, 1.7, 2.9, f64::INFINITY] {
                let a = sens_if_value(theta, &s.x, s.obs, &spec, &m(), 0.1);
                let b = if_value(theta, &p.x, p.score, &pi, &m(), 0.1);
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        for alpha in [0.05, 0.1, 0.3] {
            let a = solve_quantile_sens(&sens, &spec, &m(), alpha).unwrap();
            let b = solve_quantile(&plain, &pi, &m(), alpha).unwrap();
            assert_eq!(a.theta.to_bits(), b.theta.to_bits());
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        }
    }

    #[test]
    fn log_parametrized_ratio_agrees_to_rounding() {
        // eta = -ln(pi) reproduces pi only up to one rounding of exp(ln(.))
        let pi = FnRatio::new(|x| 0.5 + x[0] * x[0]);
        let pi_for_eta = pi.clone();
        let spec = SensitivitySpec::mar(move |x| -pi_for_eta.ratio(x).ln());
        let (sens, plain) = units(12, 200);
        for (s, p) in sens.iter().zip(&plain) {
            let a = sens_if_value(1.1, &s.x, s.obs, &spec, &m(), 0.1);
            let b = if_value(1.1, &p.x, p.score, &pi, &m(), 0.1);
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
        let a = solve_quantile_sens(&sens, &spec, &m(), 0.1).unwrap();
        let b = solve_quantile(&plain, &pi, &m(), 0.1).unwrap();
        assert_eq!(a.theta, b.theta);
    }

    #[test]
    fn solution_is_a_candidate_under_any_gamma() {
        let (sens, _) = units(13, 150);
        let scores: Vec<f64> = sens.iter().filter_map(|u| u.obs.map(|o| o.1)).collect();
        let mut last = f64::NEG_INFINITY;
        for k in 0..5 {
            let s = 0.3 * k as f64;
            let spec = SensitivitySpec::new(move |_, y| -s * y, eta);
            let sol = solve_quantile_sens(&sens, &spec, &m(), 0.1).unwrap();
            assert!(sol.is_infinite() || scores.contains(&sol.theta));
            assert!(sol.theta.is_finite());
            last = last.max(sol.theta);
        }
        assert!(last.is_finite());
    }

    #[test]
    fn nonzero_baseline_is_rejected() {
        let spec = SensitivitySpec::new(|_, y| y + 1.0, |_| 0.0);
        let (sens, _) = units(14, 20);
        assert!(solve_quantile_sens(&sens, &spec, &m(), 0.1).is_err());
    }
}
