use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_file, RunStatus};
use crate::classifier::ConsumerType;
use crate::error::{Error, Result};
use crate::eval::{compare_reports, comparisons_csv, Comparison, EvalReport};
use crate::features::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// The consumer's configured strategy; decides pass/fail.
    Primary,
    /// Single-model reference for the primary strategy.
    Reference,
    /// Persistence baseline.
    Baseline,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Primary => "primary",
            Role::Reference => "reference",
            Role::Baseline => "baseline",
        }
    }
}

/// One evaluation artifact: the report without its window vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub consumer_id: String,
    pub zone_id: String,
    pub consumer_type: ConsumerType,
    pub role: Role,
    pub n_windows: usize,
    pub report: EvalReport,
}

const INDEX: &str = "evaluation/index.csv";

/// Rebuilds `evaluation/index.csv` from the evaluation JSON files present.
pub(crate) fn write_index(out: &Path) -> Result<()> {
    let dir = out.join("evaluation");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    let mut csv = String::from("consumer_id,task,label,role,file\n");
    for name in names {
        let rec: EvaluationRecord = serde_json::from_str(&read_file(&dir.join(&name))?)?;
        writeln!(
            csv,
            "{},{},{},{},evaluation/{name}",
            rec.consumer_id,
            rec.report.task,
            rec.report.label,
            rec.role.as_str()
        )
        .expect("write to string");
    }
    write_file(&out.join(INDEX), csv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub status: RunStatus,
    pub exit_code: i32,
    pub consumers: usize,
    pub evaluations: usize,
    /// `(consumer_id, task)` pairs whose primary strategy missed a target.
    pub missed: Vec<(String, Task)>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

/// Builds `summary.csv`, `comparisons.csv`, `report.md` and `status.json`
/// from the evaluation artifacts under `out`.
pub fn report(out: impl AsRef<Path>) -> Result<ReportSummary> {
    let out = out.as_ref();
    let index = out.join(INDEX);
    if !index.exists() {
        return Err(Error::Report(format!(
            "missing artifacts in {}: {INDEX}; run `evaluate` first",
            out.display()
        )));
    }
    let text = read_file(&index)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut files = Vec::new();
    for row in rdr.records() {
        let row = row?;
        files.push(row.get(4).unwrap_or_default().to_string());
    }
    let missing: Vec<&str> = files
        .iter()
        .filter(|f| !out.join(f).exists())
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Report(format!("missing artifacts: {}", missing.join(", "))));
    }
    if files.is_empty() {
        return Err(Error::Report(format!("{INDEX} lists no evaluations")));
    }
    let mut records: Vec<EvaluationRecord> = files
        .iter()
        .map(|f| Ok(serde_json::from_str(&read_file(&out.join(f))?)?))
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| {
        (&a.consumer_id, a.report.task, a.role, &a.report.label).cmp(&(&b.consumer_id, b.report.task, b.role, &b.report.label))
    });

    let mut summary = String::from(
        "consumer_id,type,task,label,role,mape_threshold,mape,score_mape,mae_threshold,mae,score_mae,score_target,windows,excluded,pass\n",
    );
    for r in &records {
        let e = &r.report;
        writeln!(
            summary,
            "{},{},{},{},{},{:.2},{},{:.2},{:.4},{:.4},{:.2},{:.2},{},{},{}",
            r.consumer_id,
            r.consumer_type,
            e.task,
            e.label,
            r.role.as_str(),
            e.mape_threshold,
            e.aggregate_mape.map(|m| format!("{m:.4}")).unwrap_or_default(),
            e.score_mape,
            e.mae_threshold,
            e.aggregate_mae,
            e.score_mae,
            e.score_target,
            r.n_windows,
            e.excluded_windows,
            e.passed()
        )
        .expect("write to string");
    }
    write_file(&out.join("summary.csv"), &summary)?;

    let find = |id: &str, task: Task, role: Role| {
        records
            .iter()
            .find(|r| r.consumer_id == id && r.report.task == task && r.role == role)
    };
    let primaries: Vec<&EvaluationRecord> = records.iter().filter(|r| r.role == Role::Primary).collect();
    let mut comparisons: Vec<Comparison> = Vec::new();
    for p in &primaries {
        for role in [Role::Reference, Role::Baseline] {
            if let Some(r) = find(&p.consumer_id, p.report.task, role) {
                comparisons.push(compare_reports(&r.report, &p.report)?);
            }
        }
    }
    write_file(&out.join("comparisons.csv"), comparisons_csv(&comparisons))?;

    let missed: Vec<(String, Task)> = primaries
        .iter()
        .filter(|r| !r.report.passed())
        .map(|r| (r.consumer_id.clone(), r.report.task))
        .collect();
    let status = if missed.is_empty() {
        RunStatus::Passed
    } else {
        RunStatus::TargetMissed
    };
    let mut consumers: Vec<&str> = records.iter().map(|r| r.consumer_id.as_str()).collect();
    consumers.dedup();

    let mut md = String::from("# Forecast evaluation\n\n");
    writeln!(
        md,
        "{} consumers, {} evaluations; status: {} ({} target misses)\n",
        consumers.len(),
        records.len(),
        match status {
            RunStatus::Passed => "all targets met",
            RunStatus::TargetMissed => "targets missed",
        },
        missed.len()
    )
    .expect("write to string");
    md.push_str("## Primary strategy per consumer\n\n");
    md.push_str("| consumer | type | task | strategy | MAPE % | MAPE thr | score MAPE % | MAE kW | MAE thr | score MAE % | target % | pass |\n");
    md.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in &primaries {
        let e = &r.report;
        writeln!(
            md,
            "| {} | {} | {} | {} | {} | {:.0} | {:.1} | {:.3} | {:.3} | {:.1} | {:.0} | {} |",
            r.consumer_id,
            r.consumer_type,
            e.task,
            e.label,
            opt(e.aggregate_mape),
            e.mape_threshold,
            e.score_mape,
            e.aggregate_mae,
            e.mae_threshold,
            e.score_mae,
            e.score_target,
            if e.passed() { "yes" } else { "no" }
        )
        .expect("write to string");
    }
    md.push_str("\n## Comparison with the single model and the persistence baseline\n\n");
    md.push_str("| consumer | task | reference | MAPE ref % | score ref % | strategy | MAPE % | score % |\n");
    md.push_str("|---|---|---|---|---|---|---|---|\n");
    for c in &comparisons {
        writeln!(
            md,
            "| {} | {} | {} | {} | {:.1} | {} | {} | {:.1} |",
            c.consumer_id,
            c.task,
            c.label_a,
            opt(c.mape_a),
            c.score_mape_a,
            c.label_b,
            opt(c.mape_b),
            c.score_mape_b
        )
        .expect("write to string");
    }
    md.push_str("\n## MAPE evolution plots\n\n");
    for r in &primaries {
        writeln!(
            md,
            "- plots/{}__{}__{}.svg",
            r.consumer_id, r.report.task, r.report.label
        )
        .expect("write to string");
    }
    write_file(&out.join("report.md"), &md)?;

    let result = ReportSummary {
        status,
        exit_code: status.exit_code(),
        consumers: consumers.len(),
        evaluations: records.len(),
        missed,
    };
    write_file(&out.join("status.json"), serde_json::to_string_pretty(&result)?)?;
    Ok(result)
}
