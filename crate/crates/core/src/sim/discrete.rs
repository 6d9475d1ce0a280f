//! A two-point covariate, four-point outcome law whose population
//! quantities are computed by exact enumeration.

use rand::Rng as _;

use crate::data::Rng;
use crate::influence::{if_term, SensUnit, SensitivitySpec};
use crate::nuisance::{CondCdf, FnCdf, FnRatio, PropensityRatio};

pub const OUTCOMES: usize = 4;

/// `X in {0, 1}`, `T | X`, and outcome laws `Y | X, T` on `{0, 1, 2, 3}`.
/// The score is the outcome itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    pub p_x: [f64; 2],
    /// `P(T = 1 | X = x)`.
    pub p_target: [f64; 2],
    /// `P(Y = y | X = x, T = 0)`.
    pub source: [[f64; OUTCOMES]; 2],
    /// `P(Y = y | X = x, T = 1)`.
    pub target: [[f64; OUTCOMES]; 2],
}

fn x_index(x: &[f64]) -> usize {
    usize::from(x[0] > 0.5)
}

fn cdf_row(row: &[f64; OUTCOMES], theta: f64) -> f64 {
    (0..OUTCOMES).filter(|&y| y as f64 <= theta).map(|y| row[y]).sum()
}

impl DiscreteLaw {
    /// Missing at random: the outcome law does not depend on `T`.
    pub fn mar() -> Self {
        let y = [[0.4, 0.3, 0.2, 0.1], [0.1, 0.2, 0.3, 0.4]];
        Self { p_x: [0.6, 0.4], p_target: [0.3, 0.7], source: y, target: y }
    }

    /// Target outcomes tilted upwards relative to the source.
    pub fn mnar() -> Self {
        Self {
            p_x: [0.55, 0.45],
            p_target: [0.35, 0.6],
            source: [[0.4, 0.3, 0.2, 0.1], [0.25, 0.25, 0.25, 0.25]],
            target: [[0.2, 0.3, 0.3, 0.2], [0.1, 0.2, 0.3, 0.4]],
        }
    }

    pub fn p(&self, x: usize, t: bool, y: usize) -> f64 {
        let (pt, row) = if t { (self.p_target[x], &self.target[x]) } else { (1.0 - self.p_target[x], &self.source[x]) };
        self.p_x[x] * pt * row[y]
    }

    pub fn p_source_x(&self, x: usize) -> f64 {
        self.p_x[x] * (1.0 - self.p_target[x])
    }

    pub fn p_target_x(&self, x: usize) -> f64 {
        self.p_x[x] * self.p_target[x]
    }

    pub fn pi_star(&self, x: usize) -> f64 {
        self.p_target[x] / (1.0 - self.p_target[x])
    }

    /// Target conditional CDF `P(Y <= theta | x, T = 1)`.
    pub fn m_star(&self, theta: f64, x: usize) -> f64 {
        cdf_row(&self.target[x], theta)
    }

    /// `P(T=1 | x, y) / P(T=0 | x, y) = exp(-eta(x) - gamma(x, y))`.
    pub fn odds(&self, x: usize, y: usize) -> f64 {
        self.p(x, true, y) / self.p(x, false, y)
    }

    pub fn eta_star(&self, x: usize) -> f64 {
        -self.odds(x, 0).ln()
    }

    pub fn gamma_star(&self, x: usize, y: usize) -> f64 {
        -(self.odds(x, y) / self.odds(x, 0)).ln()
    }

    /// Marginal target CDF of the score.
    pub fn target_cdf(&self, theta: f64) -> f64 {
        let pt = self.p_target_x(0) + self.p_target_x(1);
        (0..2).map(|x| self.p_target_x(x) * self.m_star(theta, x)).sum::<f64>() / pt
    }

    /// Smallest support point with target CDF at least `1 - alpha`.
    pub fn target_quantile(&self, alpha: f64) -> f64 {
        (0..OUTCOMES)
            .map(|y| y as f64)
            .find(|&y| self.target_cdf(y) >= 1.0 - alpha - 1e-12)
            .unwrap_or((OUTCOMES - 1) as f64)
    }

    pub fn oracle_pi(&self) -> FnRatio {
        let law = self.clone();
        FnRatio::new(move |x| law.pi_star(x_index(x)))
    }

    pub fn oracle_m(&self) -> FnCdf {
        let law = self.clone();
        FnCdf::new(move |theta, x| law.m_star(theta, x_index(x)))
    }

    pub fn oracle_sensitivity(&self) -> SensitivitySpec {
        let (a, b) = (self.clone(), self.clone());
        SensitivitySpec::new(move |x, y| a.gamma_star(x_index(x), y as usize), move |x| b.eta_star(x_index(x)))
    }

    /// Population mean of the influence function under this law.
    pub fn if_mean(&self, theta: f64, pi: &dyn PropensityRatio, m: &dyn CondCdf, alpha: f64) -> f64 {
        let mut total = 0.0;
        for x in 0..2 {
            let xv = [x as f64];
            let mv = m.cdf(theta, &xv);
            let w = pi.ratio(&xv);
            for y in 0..OUTCOMES {
                total += self.p(x, false, y) * if_term(theta, Some(y as f64), w, mv, alpha);
            }
            total += self.p_target_x(x) * if_term(theta, None, 0.0, mv, alpha);
        }
        total
    }

    /// Population mean of the sensitivity influence function.
    pub fn sens_if_mean(&self, theta: f64, spec: &SensitivitySpec, m: &dyn CondCdf, alpha: f64) -> f64 {
        let mut total = 0.0;
        for x in 0..2 {
            let xv = [x as f64];
            let mv = m.cdf(theta, &xv);
            for y in 0..OUTCOMES {
                let w = spec.weight(&xv, y as f64);
                total += self.p(x, false, y) * if_term(theta, Some(y as f64), w, mv, alpha);
            }
            total += self.p_target_x(x) * if_term(theta, None, 0.0, mv, alpha);
        }
        total
    }

    /// i.i.d. observed units; outcomes of target draws are dropped.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Vec<SensUnit> {
        (0..n)
            .map(|_| {
                let x = usize::from(rng.random::<f64>() >= self.p_x[0]);
                let t = rng.random::<f64>() < self.p_target[x];
                let row = if t { &self.target[x] } else { &self.source[x] };
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut y = OUTCOMES - 1;
                for (k, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        y = k;
                        break;
                    }
                }
                if t {
                    SensUnit::target(vec![x as f64])
                } else {
                    SensUnit::labeled(vec![x as f64], y as f64, y as f64)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn law_is_normalized() {
        for law in [DiscreteLaw::mar(), DiscreteLaw::mnar()] {
            let total: f64 = (0..2)
                .flat_map(|x| [false, true].into_iter().flat_map(move |t| (0..OUTCOMES).map(move |y| (x, t, y))))
                .map(|(x, t, y)| law.p(x, t, y))
                .sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mar_law_has_no_outcome_tilt() {
        let law = DiscreteLaw::mar();
        for x in 0..2 {
            for y in 0..OUTCOMES {
                assert!(law.gamma_star(x, y).abs() < 1e-14);
            }
            assert!(((-law.eta_star(x)).exp() - law.pi_star(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn tilt_reproduces_the_odds() {
        let law = DiscreteLaw::mnar();
        for x in 0..2 {
            assert_eq!(law.gamma_star(x, 0), 0.0);
            for y in 0..OUTCOMES {
                let w = (-law.eta_star(x) - law.gamma_star(x, y)).exp();
                assert!((w - law.odds(x, y)).abs() < 1e-12);
            }
        }
    }
}
