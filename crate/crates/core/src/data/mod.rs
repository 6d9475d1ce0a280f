//! Observed data: covariates, the source/target flag, and outcomes that are
//! only visible on the source (labeled) side.

mod csv_io;
mod seed;
pub(crate) mod split;

pub use csv_io::{load_airfoil, load_csv, CsvSchema, AIRFOIL_ROWS};
pub use seed::{Rng, Seed};
pub use split::{split, PartRole, SplitPlan};

use rand::Rng as _;

use crate::error::{Error, Result};

/// Which population a unit was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Population {
    /// Labeled draw from the training distribution (`t = 0`).
    Source,
    /// Unlabeled draw from the target distribution (`t = 1`).
    Target,
}

/// One observed unit `(x, t, (1 - t) y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    x: Vec<f64>,
    population: Population,
    y: Option<f64>,
}

impl Unit {
    pub fn labeled(x: Vec<f64>, y: f64) -> Self {
        Self { x, population: Population::Source, y: Some(y) }
    }

    pub fn target(x: Vec<f64>) -> Self {
        Self { x, population: Population::Target, y: None }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> Option<f64> {
        self.y
    }

    pub fn population(&self) -> Population {
        self.population
    }

    pub fn is_target(&self) -> bool {
        self.population == Population::Target
    }

    /// `t` in the usual 0/1 encoding.
    pub fn t(&self) -> u8 {
        u8::from(self.is_target())
    }
}

/// An immutable collection of units sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    units: Vec<Unit>,
    d: usize,
}

impl Dataset {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        let first = units
            .first()
            .ok_or_else(|| Error::Domain("dataset must contain at least one unit".into()))?;
        let d = first.x.len();
        if d == 0 {
            return Err(Error::Domain("covariate dimension must be positive".into()));
        }
        if let Some(i) = units.iter().position(|u| u.x.len() != d) {
            return Err(Error::Schema(format!(
                "unit {i} has {} covariates, expected {d}",
                units[i].x.len()
            )));
        }
        Ok(Self { units, d })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_target(&self) -> usize {
        self.units.iter().filter(|u| u.is_target()).count()
    }

    pub fn n_labeled(&self) -> usize {
        self.len() - self.n_target()
    }

    /// `(x, y)` pairs of the labeled units, in dataset order.
    pub fn labeled(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.units.iter().filter_map(|u| u.y.map(|y| (u.x(), y)))
    }

    pub fn labeled_at<'a>(&'a self, idx: &'a [usize]) -> impl Iterator<Item = (&'a [f64], f64)> + 'a {
        idx.iter().filter_map(move |&i| {
            let u = &self.units[i];
            u.y.map(|y| (u.x(), y))
        })
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.units[i].clone()).collect())
    }
}

/// Outcomes of target units, withheld from every fitting routine.
///
/// Only the evaluation code in [`crate::sim`] reads these.
#[derive(Debug, Clone, Default)]
pub struct SealedLabels {
    // (unit index, hidden outcome), sorted by index
    entries: Vec<(usize, f64)>,
}

impl SealedLabels {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub(crate) fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }
}

/// Hide outcomes by drawing `t ~ Bernoulli(p(x))` independently per unit.
///
/// Every input unit must carry `y`. Hidden outcomes go to the returned
/// [`SealedLabels`].
pub fn apply_missingness<F>(ds: &Dataset, p: F, rng: &mut Rng) -> Result<(Dataset, SealedLabels)>
where
    F: Fn(&[f64]) -> f64,
{
    let mut units = Vec::with_capacity(ds.len());
    let mut sealed = Vec::new();
    for (i, u) in ds.units.iter().enumerate() {
        let y = u
            .y
            .ok_or_else(|| Error::Domain(format!("unit {i} has no outcome to hide")))?;
        let prob = p(&u.x);
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Domain(format!(
                "missingness probability {prob} at unit {i} is outside [0, 1]"
            )));
        }
        let draw: f64 = rng.random();
        if draw < prob {
            units.push(Unit::target(u.x.clone()));
            sealed.push((i, y));
        } else {
            units.push(Unit::labeled(u.x.clone(), y));
        }
    }
    Ok((Dataset { units, d: ds.d }, SealedLabels { entries: sealed }))
}

#[inline]
pub fn expit(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
