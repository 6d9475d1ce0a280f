//! The influence function of the target quantile and the estimating
//! equation built from it.
//!
//! For a labeled (source) unit the term is `pi(x) [1{r <= theta} - m(theta, x)]`,
//! for a target unit `m(theta, x) - (1 - alpha)`. The estimate `theta_hat`
//! is the smallest candidate at which the empirical mean is nonnegative.

mod sensitivity;

pub use sensitivity::{
    empirical_sens_if_mean, sens_if_value, solve_quantile_sens, SensUnit, SensitivitySpec,
};

use crate::error::{Error, Result};
use crate::nuisance::{CondCdf, PropensityRatio};

/// A unit of the estimating-equation evaluation set. A score is attached
/// exactly when the unit is labeled, so a labeled unit without a score
/// cannot be built.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScoredUnit {
    pub x: Vec<f64>,
    pub score: Option<f64>,
}

impl ScoredUnit {
    pub fn labeled(x: Vec<f64>, score: f64) -> Self {
        Self { x, score: Some(score) }
    }

    pub fn target(x: Vec<f64>) -> Self {
        Self { x, score: None }
    }

    pub fn is_target(&self) -> bool {
        self.score.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuantileSolution {
    /// `+inf` when no finite candidate satisfies the equation.
    pub theta: f64,
    /// Empirical influence-function mean at `theta`.
    pub mean: f64,
}

impl QuantileSolution {
    pub fn is_infinite(&self) -> bool {
        self.theta == f64::INFINITY
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("miscoverage level {alpha} must lie in (0, 1)")))
    }
}

#[inline]
fn indicator(r: f64, theta: f64) -> f64 {
    if r <= theta {
        1.0
    } else {
        0.0
    }
}

/// One influence-function term. `weight` multiplies the labeled branch;
/// `m_val` is `m(theta, x)`.
#[inline]
pub(crate) fn if_term(theta: f64, score: Option<f64>, weight: f64, m_val: f64, alpha: f64) -> f64 {
    match score {
        Some(r) => weight * (indicator(r, theta) - m_val),
        None => m_val - (1.0 - alpha),
    }
}

/// Influence function at one unit; `r = None` marks a target unit.
pub fn if_value(
    theta: f64,
    x: &[f64],
    r: Option<f64>,
    pi: &dyn PropensityRatio,
    m: &dyn CondCdf,
    alpha: f64,
) -> f64 {
    let weight = if r.is_some() { pi.ratio(x) } else { 0.0 };
    if_term(theta, r, weight, m.cdf(theta, x), alpha)
}

/// A unit prepared for repeated evaluation across candidates.
pub(crate) struct Term<'a> {
    pub score: Option<f64>,
    pub weight: f64,
    pub m: Box<dyn Fn(f64) -> f64 + 'a>,
}

pub(crate) fn mean_at(terms: &[Term<'_>], theta: f64, alpha: f64) -> f64 {
    let total: f64 = terms.iter().map(|t| if_term(theta, t.score, t.weight, (t.m)(theta), alpha)).sum();
    total / terms.len() as f64
}

/// Sorted, deduplicated candidate thresholds: the labeled scores and the
/// breakpoints of `m`, followed by `+inf`.
pub(crate) fn candidate_set(scores: impl Iterator<Item = f64>, breakpoints: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = scores.chain(breakpoints.iter().copied()).filter(|v| v.is_finite()).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c.push(f64::INFINITY);
    c
}

/// Smallest candidate whose empirical mean is nonnegative.
pub(crate) fn solve_terms(terms: &[Term<'_>], candidates: &[f64], alpha: f64) -> Result<QuantileSolution> {
    if terms.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    check_alpha(alpha)?;
    for &theta in candidates.iter().filter(|c| c.is_finite()) {
        let mean = mean_at(terms, theta, alpha);
        if mean >= 0.0 {
            return Ok(QuantileSolution { theta, mean });
        }
    }
    let mean = mean_at(terms, f64::INFINITY, alpha);
    Ok(QuantileSolution { theta: f64::INFINITY, mean })
}

fn prepare<'a>(units: &'a [ScoredUnit], pi: &'a dyn PropensityRatio, m: &'a dyn CondCdf) -> Vec<Term<'a>> {
    units
        .iter()
        .map(|u| Term {
            score: u.score,
            weight: if u.score.is_some() { pi.ratio(&u.x) } else { 0.0 },
            m: m.bind(&u.x),
        })
        .collect()
}

/// Arithmetic mean of [`if_value`] over the evaluation set.
pub fn empirical_if_mean(
    theta: f64,
    units: &[ScoredUnit],
    pi: &dyn PropensityRatio,
    m: &dyn CondCdf,
    alpha: f64,
) -> Result<f64> {
    if units.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    Ok(mean_at(&prepare(units, pi, m), theta, alpha))
}

/// The candidates scanned by [`solve_quantile`], ascending and ending in `+inf`.
pub fn candidates(units: &[ScoredUnit], m: &dyn CondCdf) -> Vec<f64> {
    candidate_set(units.iter().filter_map(|u| u.score), m.breakpoints())
}

/// Solve the estimating equation: the smallest candidate `theta` with
/// nonnegative empirical influence-function mean, or `+inf`.
pub fn solve_quantile(
    units: &[ScoredUnit],
    pi: &dyn PropensityRatio,
    m: &dyn CondCdf,
    alpha: f64,
) -> Result<QuantileSolution> {
    let terms = prepare(units, pi, m);
    solve_terms(&terms, &candidates(units, m), alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Seed;
    use crate::nuisance::{fit_cond_cdf, ConstCdf, ConstRatio, FnCdf, FnRatio};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn target_term_vanishes_at_the_nominal_level() {
        let v = if_value(0.7, &[0.0], None, &ConstRatio(3.0), &ConstCdf(0.9), 0.1);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn labeled_term_by_substitution() {
        let v = if_value(1.0, &[0.0], Some(0.5), &ConstRatio(2.0), &ConstCdf(0.3), 0.1);
        assert!((v - 1.4).abs() < 1e-15);
        let v = if_value(1.0, &[0.0], Some(0.5), &ConstRatio(0.0), &ConstCdf(0.3), 0.1);
        assert_eq!(v, 0.0);
        // closed indicator
        let v = if_value(0.5, &[0.0], Some(0.5), &ConstRatio(1.0), &ConstCdf(0.0), 0.1);
        assert_eq!(v, 1.0);
    }

    fn four_units() -> Vec<ScoredUnit> {
        vec![
            ScoredUnit::labeled(vec![0.0], 1.0),
            ScoredUnit::labeled(vec![0.0], 2.0),
            ScoredUnit::target(vec![0.0]),
            ScoredUnit::target(vec![0.0]),
        ]
    }

    #[test]
    fn hand_computed_instance() {
        let units = four_units();
        for (theta, want) in [(0.5, -0.25), (1.0, 0.0), (1.5, 0.0), (2.0, 0.25)] {
            let got = empirical_if_mean(theta, &units, &ConstRatio(1.0), &ConstCdf(0.0), 0.5).unwrap();
            assert!((got - want).abs() < 1e-15, "theta {theta}: {got}");
        }
        let sol = solve_quantile(&units, &ConstRatio(1.0), &ConstCdf(0.0), 0.5).unwrap();
        assert_eq!(sol.theta, 1.0);
        assert_eq!(sol.mean, 0.0);
    }

    #[test]
    fn all_target_with_calibrated_m() {
        let units = vec![ScoredUnit::target(vec![1.0]), ScoredUnit::target(vec![-1.0])];
        let v = empirical_if_mean(3.0, &units, &ConstRatio(1.0), &ConstCdf(0.8), 0.2).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn no_finite_solution_gives_infinity() {
        // m = 0 everywhere, tiny alpha, few labels: the target terms dominate
        let mut units = vec![ScoredUnit::labeled(vec![0.0], 1e9)];
        units.extend((0..5).map(|_| ScoredUnit::target(vec![0.0])));
        let sol = solve_quantile(&units, &ConstRatio(1.0), &ConstCdf(0.0), 1e-6).unwrap();
        assert!(sol.is_infinite());
        assert!(sol.mean < 0.0);
    }

    #[test]
    fn empty_eval_set_is_rejected() {
        assert!(matches!(
            solve_quantile(&[], &ConstRatio(1.0), &ConstCdf(0.0), 0.1),
            Err(Error::EmptyEvalSet)
        ));
        assert!(empirical_if_mean(0.0, &[], &ConstRatio(1.0), &ConstCdf(0.0), 0.1).is_err());
    }

    #[test]
    fn bad_alpha_is_rejected() {
        assert!(solve_quantile(&four_units(), &ConstRatio(1.0), &ConstCdf(0.0), 1.0).is_err());
    }

    fn random_instance(seed: u64, n: usize) -> Vec<ScoredUnit> {
        let mut rng = Seed(seed).rng();
        (0..n)
            .map(|_| {
                let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                if rng.random::<f64>() < 0.4 {
                    ScoredUnit::target(x)
                } else {
                    // coarse scores so that ties occur
                    ScoredUnit::labeled(x, (rng.random_range(0.0..3.0f64) * 4.0).round() / 4.0)
                }
            })
            .collect()
    }

    fn shift_pi() -> FnRatio {
        FnRatio::new(|x| (0.8 * x[0] - 0.3 * x[1]).exp())
    }

    fn smooth_m() -> FnCdf {
        FnCdf::new(|t, x| 1.0 / (1.0 + (-(2.0 * t - 2.0 - x[0])).exp()))
    }

    // straight-line reimplementation of the display, no shared helpers
    fn naive_mean(theta: f64, units: &[ScoredUnit], alpha: f64) -> f64 {
        let (pi, m) = (shift_pi(), smooth_m());
        let mut s = 0.0;
        for u in units {
            let mv = m.cdf(theta, &u.x);
            s += match u.score {
                Some(r) => pi.ratio(&u.x) * ((if r <= theta { 1.0 } else { 0.0 }) - mv),
                None => mv - (1.0 - alpha),
            };
        }
        s / units.len() as f64
    }

    #[test]
    fn mean_matches_naive_loop() {
        let units = random_instance(50, 50);
        for theta in [-1.0, 0.0, 0.25, 0.9, 1.5, 2.75, 10.0] {
            let a = empirical_if_mean(theta, &units, &shift_pi(), &smooth_m(), 0.1).unwrap();
            let b = naive_mean(theta, &units, 0.1);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unweighted_ecdf_gives_order_statistic() {
        // pi = 1 and m = empirical CDF of the labeled scores (free of x):
        // the labeled terms cancel and the target terms leave F(theta) >= 1 - alpha
        let mut rng = Seed(9).rng();
        let scores: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..5.0)).collect();
        let mut units: Vec<_> = scores.iter().map(|&r| ScoredUnit::labeled(vec![0.0], r)).collect();
        units.extend((0..15).map(|_| ScoredUnit::target(vec![rng.random_range(-1.0..1.0)])));
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let ecdf = {
            let sorted = sorted.clone();
            FnCdf::new(move |t, _| sorted.iter().filter(|r| **r <= t).count() as f64 / sorted.len() as f64)
        };
        for alpha in [0.13, 0.27, 0.51] {
            let sol = solve_quantile(&units, &ConstRatio(1.0), &ecdf, alpha).unwrap();
            let k = (40.0 * (1.0 - alpha)).ceil() as usize;
            assert_eq!(sol.theta, sorted[k - 1]);
            let scan = candidates(&units, &ecdf).into_iter().find(|&t| {
                empirical_if_mean(t, &units, &ConstRatio(1.0), &ecdf, alpha).unwrap() >= 0.0
            });
            assert_eq!(Some(sol.theta), scan);
        }
    }

    #[test]
    fn breakpoints_enter_the_candidate_set() {
        let mut rng = Seed(4).rng();
        let xs: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let rs: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..1.0)).collect();
        let m = fit_cond_cdf(xs.iter().map(Vec::as_slice).zip(rs.iter().copied()), 10).unwrap();
        let units = vec![ScoredUnit::labeled(vec![0.0], 5.0), ScoredUnit::target(vec![0.0])];
        let c = candidates(&units, &m);
        assert!(m.grid().iter().all(|g| c.contains(g)));
        assert!(c.contains(&5.0));
        assert_eq!(*c.last().unwrap(), f64::INFINITY);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn solution_is_minimal(seed in 0u64..10_000, n in 1usize..40, alpha in 0.02..0.98f64) {
            let units = random_instance(seed, n);
            let (pi, m) = (shift_pi(), smooth_m());
            let sol = solve_quantile(&units, &pi, &m, alpha).unwrap();
            for &c in candidates(&units, &m).iter().filter(|c| **c < sol.theta) {
                prop_assert!(naive_mean(c, &units, alpha) < 0.0);
            }
            if !sol.is_infinite() {
                prop_assert!(sol.mean >= 0.0);
                prop_assert_eq!(sol.mean, empirical_if_mean(sol.theta, &units, &pi, &m, alpha).unwrap());
            }
        }

        #[test]
        fn smaller_alpha_never_shrinks_theta(seed in 0u64..10_000, a1 in 0.02..0.5f64, da in 0.0..0.45f64) {
            let units = random_instance(seed, 30);
            let (pi, m) = (shift_pi(), smooth_m());
            let t1 = solve_quantile(&units, &pi, &m, a1).unwrap().theta;
            let t2 = solve_quantile(&units, &pi, &m, a1 + da).unwrap().theta;
            prop_assert!(t1 >= t2);
        }
    }
}
