//! Linear quantile regression.
//!
//! The pinball-loss problem is solved through its dual linear program
//!
//! ```text
//! max  y'a   s.t.  X'a = (1 - tau) X'1,  0 <= a <= 1
//! ```
//!
//! with a Mehrotra predictor-corrector interior point method. The primal
//! coefficients are the (negated) equality multipliers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{design, dot, solve_spd};

pub const MAX_ITERATIONS: usize = 100;
const GAP_TOL: f64 = 1e-11;
const STEP_DAMPING: f64 = 0.99995;

/// A fitted linear conditional quantile `q(x) = b + x.beta` at level `tau`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QuantileModel {
    pub tau: f64,
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl QuantileModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coef, x)
    }
}

/// `rho_tau(u) = u (tau - 1{u < 0})`.
#[inline]
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Average pinball loss of `model` on `labeled`.
pub fn pinball_objective<'a, I>(labeled: I, tau: f64, coef: &[f64], intercept: f64) -> f64
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let (mut sum, mut n) = (0.0, 0usize);
    for (x, y) in labeled {
        sum += pinball(y - intercept - dot(coef, x), tau);
        n += 1;
    }
    sum / n as f64
}

pub fn fit_quantile<'a, I>(labeled: I, tau: f64) -> Result<QuantileModel>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("quantile level {tau} must lie in (0, 1)")));
    }
    let pairs: Vec<(&[f64], f64)> = labeled.into_iter().collect();
    let d = pairs.first().map(|p| p.0.len()).unwrap_or(0);
    if pairs.len() < d + 2 {
        return Err(Error::Domain(format!(
            "quantile regression needs at least {} labeled units, got {}",
            d + 2,
            pairs.len()
        )));
    }

    // Center and scale covariates for conditioning; map back at the end.
    let n = pairs.len();
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    for (x, _) in &pairs {
        for j in 0..d {
            mean[j] += x[j] / nf;
        }
    }
    let mut scale = vec![0.0; d];
    for (x, _) in &pairs {
        for j in 0..d {
            scale[j] += (x[j] - mean[j]).powi(2) / nf;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let z: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(x, _)| (0..d).map(|j| (x[j] - mean[j]) / scale[j]).collect())
        .collect();
    let xmat = design(z.iter().map(Vec::as_slice), d, true);
    let y = DVector::from_iterator(n, pairs.iter().map(|p| p.1));

    let beta = interior_point(&xmat, &y, tau)?;
    let coef: Vec<f64> = (0..d).map(|j| beta[j + 1] / scale[j]).collect();
    let intercept = beta[0] - dot(&coef, &mean);
    Ok(QuantileModel { tau, coef, intercept })
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut step = f64::INFINITY;
    for (a, da) in v.iter().zip(dv.iter()) {
        if *da < 0.0 {
            step = step.min(-a / da);
        }
    }
    step
}

struct Direction {
    dx: DVector<f64>,
    db: DVector<f64>,
    dz: DVector<f64>,
    dw: DVector<f64>,
}

/// Returns the coefficient vector (intercept first) minimizing the pinball
/// loss for design `x`.
fn interior_point(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    let n = x.nrows();
    let c = -y;
    let rhs = x.transpose() * DVector::from_element(n, 1.0 - tau);

    let mut a = DVector::from_element(n, 1.0 - tau);
    let mut s = DVector::from_element(n, tau);
    let gram = x.transpose() * x;
    let mut b = solve_spd(gram, &(x.transpose() * &c))
        .ok_or_else(|| Error::Numeric("quantile regression design is degenerate".into()))?;
    let r = &c - x * &b;
    let shift = 1e-3 * (r.iter().map(|v| v.abs()).sum::<f64>() / n as f64).max(1e-8);
    let mut z = r.map(|v| v.max(0.0) + shift);
    let mut w = r.map(|v| (-v).max(0.0) + shift);

    let solve = |a: &DVector<f64>,
                 s: &DVector<f64>,
                 z: &DVector<f64>,
                 w: &DVector<f64>,
                 r_p: &DVector<f64>,
                 r_d: &DVector<f64>,
                 r_az: &DVector<f64>,
                 r_sw: &DVector<f64>|
     -> Option<Direction> {
        let q = DVector::from_fn(n, |i, _| z[i] / a[i] + w[i] / s[i]);
        let rhs_n = DVector::from_fn(n, |i, _| r_d[i] - r_az[i] / a[i] + r_sw[i] / s[i]);
        let qinv = q.map(|v| 1.0 / v);
        let xq = DMatrix::from_fn(n, x.ncols(), |i, j| x[(i, j)] * qinv[i]);
        let normal = x.transpose() * &xq;
        let rhs_p = r_p + xq.transpose() * &rhs_n;
        let db = solve_spd(normal, &rhs_p)?;
        let xdb = x * &db;
        let dx = DVector::from_fn(n, |i, _| qinv[i] * (xdb[i] - rhs_n[i]));
        let dz = DVector::from_fn(n, |i, _| (r_az[i] - z[i] * dx[i]) / a[i]);
        let dw = DVector::from_fn(n, |i, _| (r_sw[i] + w[i] * dx[i]) / s[i]);
        Some(Direction { dx, db, dz, dw })
    };

    for _ in 0..MAX_ITERATIONS {
        let gap = a.dot(&z) + s.dot(&w);
        let r_p = &rhs - x.transpose() * &a;
        let r_d = &c - x * &b - &z + &w;
        let primal = c.dot(&a).abs();
        let feas = r_p.amax() + r_d.amax();
        if gap <= GAP_TOL * (1.0 + primal) && feas <= 1e-9 * (1.0 + y.amax()) {
            return Ok(-b);
        }

        let mu = gap / (2 * n) as f64;
        let r_az = -a.component_mul(&z);
        let r_sw = -s.component_mul(&w);
        let aff = solve(&a, &s, &z, &w, &r_p, &r_d, &r_az, &r_sw)
            .ok_or_else(|| Error::Numeric("interior point normal equations are singular".into()))?;
        let ds_aff = -&aff.dx;
        let ap = max_step(&a, &aff.dx).min(max_step(&s, &ds_aff)).min(1.0);
        let ad = max_step(&z, &aff.dz).min(max_step(&w, &aff.dw)).min(1.0);
        let mu_aff = ((&a + ap * &aff.dx).dot(&(&z + ad * &aff.dz))
            + (&s + ap * &ds_aff).dot(&(&w + ad * &aff.dw)))
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        let r_az = DVector::from_fn(n, |i, _| sigma * mu - a[i] * z[i] - aff.dx[i] * aff.dz[i]);
        let r_sw = DVector::from_fn(n, |i, _| sigma * mu - s[i] * w[i] - ds_aff[i] * aff.dw[i]);
        let dir = solve(&a, &s, &z, &w, &r_p, &r_d, &r_az, &r_sw)
            .ok_or_else(|| Error::Numeric("interior point normal equations are singular".into()))?;
        let ds = -&dir.dx;
        let ap = (STEP_DAMPING * max_step(&a, &dir.dx).min(max_step(&s, &ds))).min(1.0);
        let ad = (STEP_DAMPING * max_step(&z, &dir.dz).min(max_step(&w, &dir.dw))).min(1.0);

        a += ap * &dir.dx;
        s += ap * &ds;
        b += ad * &dir.db;
        z += ad * &dir.dz;
        w += ad * &dir.dw;
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS })
}
