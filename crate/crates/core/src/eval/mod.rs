//! Accuracy metrics, threshold policy and rolling-origin evaluation.

mod compare;
mod metrics;
mod plot;
mod report;
mod rolling;

pub use compare::{compare_reports, comparisons_csv, Comparison};
pub use metrics::{mae, mape, mape_nonzero, quantitative_score, rmse, Metric};
pub use plot::{flagged_spans, mape_svg};
pub use report::{EvalReport, ForecastWindow, ThresholdPolicy};
pub use rolling::{rolling_15min, rolling_day_ahead, rolling_evaluate, score_predictions, DataSplit};
