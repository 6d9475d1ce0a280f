//! Doubly robust conformal prediction sets for an unlabeled target
//! population under covariate shift.
//!
//! A prediction set `{y : R(x, y) <= theta_hat}` is calibrated by solving an
//! influence-function estimating equation whose mean is zero at the target
//! quantile when either the propensity odds or the conditional score CDF is
//! correct.

pub mod baselines;
pub mod data;
pub mod drp;
pub mod error;
pub mod influence;
pub mod ite;
mod linalg;
pub mod nuisance;
pub mod scores;
pub mod sim;

pub use data::{Dataset, Seed, Unit};
pub use error::{Error, Result};
pub use scores::{PredictionSet, ScoreModel, ScoreSpec};
