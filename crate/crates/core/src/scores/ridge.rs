use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Ridge regression fit with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RidgeModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl RidgeModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coef, x)
    }
}

/// Minimize `sum (y - b - x.beta)^2 + lambda * |beta|^2` through the
/// centered normal equations.
pub fn fit_ridge<'a, I>(labeled: I, lambda: f64) -> Result<RidgeModel>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("ridge penalty {lambda} must be nonnegative")));
    }
    let pairs: Vec<(&[f64], f64)> = labeled.into_iter().collect();
    let n = pairs.len();
    if n == 0 {
        return Err(Error::Domain("ridge regression needs labeled units".into()));
    }
    let d = pairs[0].0.len();
    let nf = n as f64;
    let mut x_mean = vec![0.0; d];
    let mut y_mean = 0.0;
    for (x, y) in &pairs {
        for (m, v) in x_mean.iter_mut().zip(x.iter()) {
            *m += v / nf;
        }
        y_mean += y / nf;
    }

    let xc = DMatrix::from_fn(n, d, |i, j| pairs[i].0[j] - x_mean[j]);
    let yc = DVector::from_iterator(n, pairs.iter().map(|(_, y)| y - y_mean));
    let mut gram = xc.transpose() * &xc;
    for j in 0..d {
        gram[(j, j)] += lambda;
    }
    let rhs = xc.transpose() * yc;

    // relative pivot size flags numerically singular systems that the
    // factorization itself lets through
    let scale = (0..d).map(|j| gram[(j, j)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let beta = gram
        .cholesky()
        .filter(|ch| (0..d).all(|j| ch.l_dirty()[(j, j)].powi(2) > 1e-12 * scale))
        .map(|ch| ch.solve(&rhs))
        .filter(|b| b.iter().all(|v| v.is_finite()))
        .ok_or_else(|| {
            Error::Numeric(format!(
                "normal equations are singular with lambda = {lambda}; use a positive penalty"
            ))
        })?;

    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - dot(&coef, &x_mean);
    Ok(RidgeModel { coef, intercept, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use crate::data::Seed;

    fn fit(xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> Result<RidgeModel> {
        fit_ridge(xs.iter().map(Vec::as_slice).zip(ys.iter().copied()), lambda)
    }

    #[test]
    fn exact_line() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..6).map(|i| 2.0 * i as f64).collect();
        let m = fit(&xs, &ys, 0.0).unwrap();
        assert_abs_diff_eq!(m.coef[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn huge_penalty_shrinks_to_mean() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let ys = [1.0, 3.0, 2.0, 5.0, 4.0, 9.0];
        let m = fit(&xs, &ys, 1e12).unwrap();
        assert!(m.coef.iter().all(|c| c.abs() < 1e-8));
        assert_abs_diff_eq!(m.intercept, 4.0, epsilon = 1e-6);
    }

    #[test]
    fn singular_without_penalty() {
        let xs = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let err = fit(&xs, &[1.0, 2.0, 3.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert!(fit(&xs, &[1.0, 2.0, 3.0], 1.0).is_ok());
    }

    fn objective(xs: &[Vec<f64>], ys: &[f64], lambda: f64, coef: &[f64], b: f64) -> f64 {
        let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - b - dot(coef, x)).powi(2)).sum();
        sse + lambda * coef.iter().map(|c| c * c).sum::<f64>()
    }

    /// Plain gradient descent on the penalized least-squares objective.
    fn gradient_descent(xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> (Vec<f64>, f64) {
        let d = xs[0].len();
        let mut coef = vec![0.0; d];
        let mut b = 0.0;
        let step = 1e-3;
        for _ in 0..2_000_000 {
            let mut g = vec![0.0; d];
            let mut gb = 0.0;
            for (x, y) in xs.iter().zip(ys) {
                let r = b + dot(&coef, x) - y;
                for j in 0..d {
                    g[j] += 2.0 * r * x[j];
                }
                gb += 2.0 * r;
            }
            for j in 0..d {
                g[j] += 2.0 * lambda * coef[j];
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>() + gb * gb;
            for j in 0..d {
                coef[j] -= step * g[j];
            }
            b -= step * gb;
            if norm.sqrt() < 1e-10 {
                break;
            }
        }
        (coef, b)
    }

    #[test]
    fn matches_gradient_descent_oracle() {
        let mut rng = Seed(20).rng();
        let xs: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + x[0] - 2.0 * x[2] + rng.random_range(-0.5..0.5)).collect();
        let m = fit(&xs, &ys, 1.0).unwrap();
        let (coef, b) = gradient_descent(&xs, &ys, 1.0);
        for j in 0..3 {
            assert_abs_diff_eq!(m.coef[j], coef[j], epsilon = 1e-8);
        }
        assert_abs_diff_eq!(m.intercept, b, epsilon = 1e-8);
        assert!(objective(&xs, &ys, 1.0, &m.coef, m.intercept) <= objective(&xs, &ys, 1.0, &coef, b) + 1e-12);
    }
}
