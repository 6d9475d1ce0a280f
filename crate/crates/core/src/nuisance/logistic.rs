use nalgebra::{DMatrix, DVector};

use crate::data::expit;
use crate::error::{Error, Result};
use crate::linalg::{design, dot, solve_spd};

pub const MAX_IRLS_ITERATIONS: usize = 100;
pub const IRLS_TOLERANCE: f64 = 1e-8;

/// `P(label = 1 | x) = expit(b + x.beta)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn linear(&self, x: &[f64]) -> f64 {
        if self.intercept.is_infinite() {
            return self.intercept;
        }
        self.intercept + dot(&self.coef, x)
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        expit(self.linear(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub iterations: usize,
    pub converged: bool,
    /// Labels are (numerically) perfectly separated; coefficients diverge.
    pub separated: bool,
    /// Standard errors from the inverse Fisher information, intercept first.
    pub std_errors: Vec<f64>,
}

fn deviance(y: &[bool], eta: &DVector<f64>) -> f64 {
    // -2 log-likelihood, computed stably from the linear predictor
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| {
            let s = if yi { -e } else { e };
            2.0 * if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() }
        })
        .sum()
}

/// Logistic regression by iteratively reweighted least squares (Newton's
/// method with step halving), stopping when the relative deviance change
/// drops below [`IRLS_TOLERANCE`] or after [`MAX_IRLS_ITERATIONS`].
pub fn fit_logistic(xs: &[&[f64]], y: &[bool]) -> Result<LogisticFit> {
    let n = xs.len();
    if n == 0 || n != y.len() {
        return Err(Error::Domain("logistic regression needs matching nonempty inputs".into()));
    }
    let d = xs[0].len();
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == n {
        let intercept = if positives == 0 { f64::NEG_INFINITY } else { f64::INFINITY };
        return Ok(LogisticFit {
            model: LogisticModel { coef: vec![0.0; d], intercept },
            iterations: 0,
            converged: true,
            separated: true,
            std_errors: vec![f64::INFINITY; d + 1],
        });
    }

    let x = design(xs.iter().copied(), d, true);
    let yv = DVector::from_iterator(n, y.iter().map(|&v| f64::from(u8::from(v))));
    let mean = positives as f64 / n as f64;
    let mut beta = DVector::zeros(d + 1);
    beta[0] = (mean / (1.0 - mean)).ln();
    let mut eta = &x * &beta;
    let mut dev = deviance(y, &eta);
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=MAX_IRLS_ITERATIONS {
        iterations = it;
        let p = eta.map(expit);
        let wts = p.map(|v| (v * (1.0 - v)).max(1e-300));
        let xw = DMatrix::from_fn(n, d + 1, |i, j| x[(i, j)] * wts[i]);
        let info = x.transpose() * xw;
        let grad = x.transpose() * (&yv - &p);
        let Some(step) = solve_spd(info, &grad) else { break };

        let mut t = 1.0;
        let (mut new_beta, mut new_eta, mut new_dev);
        loop {
            new_beta = &beta + t * &step;
            new_eta = &x * &new_beta;
            new_dev = deviance(y, &new_eta);
            if new_dev <= dev * (1.0 + 1e-12) || t < 1e-6 {
                break;
            }
            t *= 0.5;
        }
        let change = (dev - new_dev).abs() / (new_dev.abs() + 0.1);
        beta = new_beta;
        eta = new_eta;
        dev = new_dev;
        if change < IRLS_TOLERANCE {
            converged = true;
            break;
        }
    }

    let coef_norm = beta.rows(1, d).norm();
    let separated = dev < 1e-6 * n as f64 && coef_norm > 10.0;

    let p = eta.map(expit);
    let xw = DMatrix::from_fn(n, d + 1, |i, j| x[(i, j)] * (p[i] * (1.0 - p[i])));
    let info = x.transpose() * xw;
    let std_errors = info
        .try_inverse()
        .map(|inv| (0..=d).map(|j| inv[(j, j)].max(0.0).sqrt()).collect())
        .unwrap_or_else(|| vec![f64::INFINITY; d + 1]);

    Ok(LogisticFit {
        model: LogisticModel { coef: beta.iter().skip(1).copied().collect(), intercept: beta[0] },
        iterations,
        converged,
        separated,
        std_errors,
    })
}
