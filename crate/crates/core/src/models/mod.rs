//! Forecasting primitives: persistence and residential baselines, and
//! from-scratch tree ensembles (gradient boosting and random forest).

mod baseline;
mod ensemble;
mod grower;
mod tree;

pub use baseline::{predict_baseline, BaselineKind, BaselineParams};
pub(crate) use baseline::describe_lag;
pub use ensemble::{
    deserialize_model, fit_ensemble, predict_ensemble, serialize_model, EnsembleMode, GbdtParams,
    TreeEnsembleModel, MODEL_VERSION,
};
pub use tree::{Node, SplitRule, Tree};
