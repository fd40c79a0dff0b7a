use serde::{Deserialize, Serialize};

use super::report::EvalReport;
use crate::error::{Error, Result};
use crate::features::Task;

/// Side-by-side scores of two forecasters for one consumer and task.
/// Deltas are `b - a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub consumer_id: String,
    pub task: Task,
    pub label_a: String,
    pub label_b: String,
    pub mape_threshold: f64,
    pub mape_a: Option<f64>,
    pub score_mape_a: f64,
    pub mape_b: Option<f64>,
    pub score_mape_b: f64,
    pub mae_threshold: f64,
    pub mae_a: f64,
    pub score_mae_a: f64,
    pub mae_b: f64,
    pub score_mae_b: f64,
}

impl Comparison {
    pub fn delta_mape(&self) -> Option<f64> {
        Some(self.mape_b? - self.mape_a?)
    }

    pub fn delta_score_mape(&self) -> f64 {
        self.score_mape_b - self.score_mape_a
    }

    pub fn delta_mae(&self) -> f64 {
        self.mae_b - self.mae_a
    }

    pub fn delta_score_mae(&self) -> f64 {
        self.score_mae_b - self.score_mae_a
    }

    pub const CSV_HEADER: &'static str = "consumer_id,task,model_a,model_b,mape_threshold,\
mape_a,score_mape_a,mape_b,score_mape_b,delta_mape,delta_score_mape,mae_threshold,\
mae_a,score_mae_a,mae_b,score_mae_b,delta_mae,delta_score_mae";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        format!(
            "{},{},{},{},{:.4},{},{:.4},{},{:.4},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.consumer_id,
            self.task,
            self.label_a,
            self.label_b,
            self.mape_threshold,
            opt(self.mape_a),
            self.score_mape_a,
            opt(self.mape_b),
            self.score_mape_b,
            opt(self.delta_mape()),
            self.delta_score_mape(),
            self.mae_threshold,
            self.mae_a,
            self.score_mae_a,
            self.mae_b,
            self.score_mae_b,
            self.delta_mae(),
            self.delta_score_mae()
        )
    }
}

/// Compares two reports for the same consumer, task and thresholds.
pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<Comparison> {
    if a.consumer_id != b.consumer_id {
        return Err(Error::Policy(format!(
            "reports are for different consumers ({} vs {})",
            a.consumer_id, b.consumer_id
        )));
    }
    if a.task != b.task {
        return Err(Error::Policy(format!("reports are for different tasks ({} vs {})", a.task, b.task)));
    }
    if a.mape_threshold != b.mape_threshold
        || a.mae_threshold != b.mae_threshold
        || a.score_target != b.score_target
    {
        return Err(Error::Policy("reports use different threshold policies".into()));
    }
    Ok(Comparison {
        consumer_id: a.consumer_id.clone(),
        task: a.task,
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        mape_threshold: a.mape_threshold,
        mape_a: a.aggregate_mape,
        score_mape_a: a.score_mape,
        mape_b: b.aggregate_mape,
        score_mape_b: b.score_mape,
        mae_threshold: a.mae_threshold,
        mae_a: a.aggregate_mae,
        score_mae_a: a.score_mae,
        mae_b: b.aggregate_mae,
        score_mae_b: b.score_mae,
    })
}

/// CSV table with one row per comparison.
pub fn comparisons_csv(rows: &[Comparison]) -> String {
    let mut out = String::from(Comparison::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
