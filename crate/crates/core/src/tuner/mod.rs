//! Tree-structured Parzen Estimator hyperparameter search.

mod space;
mod tpe;

pub use space::{gbdt_params_from, Assignment, Dimension, Domain, SearchSpace, Value};
pub use tpe::{random_search, suggest, tune, TpeConfig, Trial, TrialStatus, TuneResult};
