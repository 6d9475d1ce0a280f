use super::logistic::{fit_logistic, LogisticModel};
use super::rearrange::monotone_rearrange;
use super::CondCdf;
use crate::error::{Error, Result};

pub const DEFAULT_GRID_SIZE: usize = 50;

/// Conditional CDF estimate on a grid of score thresholds.
///
/// Each threshold carries a logistic regression of `1{r <= theta_k}` on
/// `x`. At a query `x` the fitted values are rearranged into nondecreasing
/// order and read as a right-continuous step function of `theta`: 0 below
/// the first threshold, flat after the last.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CondCdfModel {
    grid: Vec<f64>,
    fits: Vec<LogisticModel>,
}

impl CondCdfModel {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Monotonized fitted values at `x`, one per grid point.
    pub fn profile(&self, x: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = self.fits.iter().map(|f| f.probability(x)).collect();
        monotone_rearrange(&raw)
    }

    fn lookup(&self, profile: &[f64], theta: f64) -> f64 {
        match self.grid.partition_point(|g| *g <= theta) {
            0 => 0.0,
            k => profile[k - 1],
        }
    }

    pub fn m_hat(&self, theta: f64, x: &[f64]) -> f64 {
        self.lookup(&self.profile(x), theta)
    }
}

impl CondCdf for CondCdfModel {
    fn cdf(&self, theta: f64, x: &[f64]) -> f64 {
        self.m_hat(theta, x)
    }

    fn breakpoints(&self) -> &[f64] {
        &self.grid
    }

    fn bind<'a>(&'a self, x: &'a [f64]) -> Box<dyn Fn(f64) -> f64 + 'a> {
        let profile = self.profile(x);
        Box::new(move |theta| self.lookup(&profile, theta))
    }
}

/// Fit `m(theta, x)` from labeled `(x, score)` pairs on a grid of
/// `grid_size` empirical score quantiles at levels `k / (grid_size + 1)`.
/// Duplicate thresholds collapse, so the grid may come out shorter.
pub fn fit_cond_cdf<'a, I>(labeled: I, grid_size: usize) -> Result<CondCdfModel>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let pairs: Vec<(&[f64], f64)> = labeled.into_iter().collect();
    let n = pairs.len();
    if grid_size == 0 {
        return Err(Error::Domain("grid size must be positive".into()));
    }
    if n < grid_size {
        return Err(Error::Domain(format!(
            "conditional CDF on {grid_size} thresholds needs at least that many labeled units, got {n}"
        )));
    }
    if let Some((_, r)) = pairs.iter().find(|(_, r)| !r.is_finite()) {
        return Err(Error::Domain(format!("score {r} is not finite")));
    }

    let mut sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = (1..=grid_size)
        .map(|k| {
            let level = k as f64 / (grid_size + 1) as f64;
            let idx = ((level * n as f64).ceil() as usize).clamp(1, n) - 1;
            sorted[idx]
        })
        .collect();
    grid.dedup();

    let xs: Vec<&[f64]> = pairs.iter().map(|p| p.0).collect();
    let fits = grid
        .iter()
        .map(|&theta| {
            let labels: Vec<bool> = pairs.iter().map(|p| p.1 <= theta).collect();
            let fit = fit_logistic(&xs, &labels)?;
            if fit.separated {
                log::debug!("threshold {theta}: indicator fit is separated");
            }
            Ok(fit.model)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CondCdfModel { grid, fits })
}
