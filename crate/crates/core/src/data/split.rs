use rand::seq::SliceRandom;

use super::{Dataset, Rng};
use crate::error::{Error, Result};

/// What a part of a split is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PartRole {
    TrainScore,
    TrainNuisance,
    Calibrate,
}

/// A random partition of `0..N` into nonempty parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    parts: Vec<Vec<usize>>,
}

impl SplitPlan {
    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn part(&self, k: usize) -> &[usize] {
        &self.parts[k]
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// Uniform random partition with sizes `floor(f_k * N)`; the remainder goes
/// to the last part.
pub fn split(ds: &Dataset, fractions: &[f64], rng: &mut Rng) -> Result<SplitPlan> {
    split_n(ds.len(), fractions, rng)
}

pub(crate) fn split_n(n: usize, fractions: &[f64], rng: &mut Rng) -> Result<SplitPlan> {
    if fractions.is_empty() {
        return Err(Error::Domain("at least one split fraction is required".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0) || !f.is_finite()) {
        return Err(Error::Domain(format!("split fraction {f} must be positive")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("split fractions sum to {total}, expected 1")));
    }

    let mut sizes: Vec<usize> = fractions[..fractions.len() - 1]
        .iter()
        .map(|f| (f * n as f64).floor() as usize)
        .collect();
    let used: usize = sizes.iter().sum();
    if used > n {
        return Err(Error::Domain("split sizes exceed the dataset".into()));
    }
    sizes.push(n - used);
    if sizes.contains(&0) {
        return Err(Error::Domain(format!(
            "split of {n} units by {fractions:?} leaves an empty part"
        )));
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for s in sizes {
        let mut part = perm[start..start + s].to_vec();
        part.sort_unstable();
        parts.push(part);
        start += s;
    }
    Ok(SplitPlan { parts })
}
