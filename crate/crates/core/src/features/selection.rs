use std::collections::HashSet;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_matrix_with, FeatureMatrix, FeatureSpec, MatrixOptions, Task};
use crate::data::AlignedTable;
use crate::error::{Error, Result};
use crate::eval::Metric;
use crate::models::{fit_ensemble, EnsembleMode, GbdtParams};

/// A named tree-model configuration used in ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationModel {
    pub name: String,
    pub mode: EnsembleMode,
    pub params: GbdtParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationProtocol {
    pub task: Task,
    pub train: Range<usize>,
    pub valid: Range<usize>,
    pub models: Vec<AblationModel>,
    /// Relative error reduction a candidate must exceed to be selected.
    pub epsilon: f64,
}

impl AblationProtocol {
    /// Two boosted configurations: deep leaf-wise trees, and shallow trees
    /// with a stronger L2 penalty. Neither subsamples, so an uninformative
    /// column can only change the fit through the splits it wins.
    pub fn new(task: Task, train: Range<usize>, valid: Range<usize>, seed: u64) -> Self {
        Self {
            task,
            train,
            valid,
            models: vec![
                AblationModel {
                    name: "gbdt-leafwise".into(),
                    mode: EnsembleMode::Boosted,
                    params: GbdtParams {
                        n_trees: 150,
                        learning_rate: 0.08,
                        max_leaves: 31,
                        min_samples_leaf: 20,
                        seed,
                        ..Default::default()
                    },
                },
                AblationModel {
                    name: "gbdt-shallow".into(),
                    mode: EnsembleMode::Boosted,
                    params: GbdtParams {
                        n_trees: 150,
                        learning_rate: 0.1,
                        max_leaves: 8,
                        min_samples_leaf: 20,
                        l2_leaf_reg: 3.0,
                        seed: seed.wrapping_add(1),
                        ..Default::default()
                    },
                },
            ],
            epsilon: 0.005,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.len() < 2 {
            return Err(Error::Config(format!(
                "ablation needs at least 2 model configurations, got {}",
                self.models.len()
            )));
        }
        if self.train.is_empty() || self.valid.is_empty() {
            return Err(Error::Span("ablation needs non-empty training and validation rows".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// One (feature, model, metric) outcome. `None` errors mark a failed fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub feature: String,
    pub model: String,
    pub metric: Metric,
    /// Validation error of the base set, e_u.
    pub base_error: Option<f64>,
    /// Validation error of base plus the feature, e_i.
    pub with_error: Option<f64>,
    /// Failure message when either fit failed.
    pub failure: Option<String>,
}

impl AblationCell {
    /// e_i - e_u.
    pub fn delta(&self) -> Option<f64> {
        Some(self.with_error? - self.base_error?)
    }

    /// (e_i - e_u) / e_u.
    pub fn relative_delta(&self) -> Option<f64> {
        let base = self.base_error?;
        if base == 0.0 {
            return None;
        }
        Some(self.delta()? / base)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAblationReport {
    pub base: Vec<String>,
    pub candidates: Vec<String>,
    pub epsilon: f64,
    pub cells: Vec<AblationCell>,
    /// Mean relative delta per candidate over its valid cells.
    pub mean_relative_delta: Vec<(String, Option<f64>)>,
    pub selected_candidates: Vec<String>,
    /// Base features followed by the selected candidates.
    pub selected: FeatureSpec,
}

const METRICS: [Metric; 2] = [Metric::Mape, Metric::Mae];

impl FeatureAblationReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# base set: {}; candidates: {}; delta = e_i - e_u on validation; epsilon = {}\n",
            self.base.join(" "),
            self.candidates.join(" "),
            self.epsilon
        );
        out.push_str("feature,model,metric,e_base,e_with,delta,relative_delta\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.feature,
                c.model,
                c.metric.as_str(),
                opt(c.base_error),
                opt(c.with_error),
                opt(c.delta()),
                opt(c.relative_delta())
            ));
        }
        out
    }

    pub fn selected_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "base": self.base,
            "selected_candidates": self.selected_candidates,
            "selected": self.selected.names(),
        }))?)
    }
}

/// Validation errors (MAPE, MAE) of one model trained on `spec`.
fn evaluate_spec(
    table: &AlignedTable,
    spec: &FeatureSpec,
    rows: &HashSet<usize>,
    protocol: &AblationProtocol,
    model: &AblationModel,
) -> Result<[f64; 2]> {
    let h = protocol.task.horizon();
    let matrix = |range: &Range<usize>| -> Result<FeatureMatrix> {
        let m = build_matrix_with(
            table,
            spec,
            h,
            &MatrixOptions {
                require_target: true,
                rows: Some(range.clone()),
            },
        )?;
        let keep: Vec<usize> = (0..m.n_rows()).filter(|&i| rows.contains(&m.rows[i])).collect();
        Ok(m.select(&keep))
    };
    let train = matrix(&protocol.train)?;
    let valid = matrix(&protocol.valid)?;
    if valid.is_empty() {
        return Err(Error::EmptyMatrix("no validation row".into()));
    }
    let fitted = fit_ensemble(&model.params, model.mode, &train)?;
    let pred = fitted.predict(&valid)?;
    Ok([
        METRICS[0].evaluate(&valid.target, &pred)?,
        METRICS[1].evaluate(&valid.target, &pred)?,
    ])
}

/// Trains every model on `base` and on `base + s_i` for each candidate and
/// keeps the candidates whose mean relative error change is below
/// `-epsilon`.
///
/// All fits use the same rows: those where every base and candidate feature
/// is available.
pub fn ablate_features(
    candidates: &FeatureSpec,
    base: &FeatureSpec,
    table: &AlignedTable,
    protocol: &AblationProtocol,
) -> Result<FeatureAblationReport> {
    protocol.validate()?;
    let candidate_names: Vec<String> = candidates
        .features
        .iter()
        .filter(|f| !base.contains(&f.name))
        .map(|f| f.name.clone())
        .collect();
    if candidate_names.is_empty() {
        return Ok(FeatureAblationReport {
            base: base.names(),
            candidates: Vec::new(),
            epsilon: protocol.epsilon,
            cells: Vec::new(),
            mean_relative_delta: Vec::new(),
            selected_candidates: Vec::new(),
            selected: base.clone(),
        });
    }
    let mut union = base.union(candidates);
    union.fit_standardization(table, protocol.train.clone())?;
    let common = build_matrix_with(
        table,
        &union,
        protocol.task.horizon(),
        &MatrixOptions {
            require_target: true,
            rows: Some(protocol.train.start..protocol.valid.end),
        },
    )?;
    let rows: HashSet<usize> = common.rows.iter().copied().collect();
    let fitted_base = FeatureSpec {
        features: union.features[..base.len()].to_vec(),
    };
    let sub_spec = |name: &str| {
        let f = union
            .features
            .iter()
            .find(|f| f.name == name)
            .expect("candidate is in the union")
            .clone();
        fitted_base.with(f)
    };
    let n_models = protocol.models.len();
    // Job k < n_models is the base fit for model k; later jobs are candidates.
    let jobs: Vec<(Option<usize>, usize)> = (0..n_models)
        .map(|m| (None, m))
        .chain((0..candidate_names.len()).flat_map(|c| (0..n_models).map(move |m| (Some(c), m))))
        .collect();
    let results: Vec<Result<[f64; 2]>> = jobs
        .par_iter()
        .map(|&(c, m)| {
            let spec = match c {
                None => fitted_base.clone(),
                Some(c) => sub_spec(&candidate_names[c]),
            };
            evaluate_spec(table, &spec, &rows, protocol, &protocol.models[m])
        })
        .collect();
    let base_results = &results[..n_models];
    let mut cells = Vec::new();
    let mut mean_relative_delta = Vec::new();
    let mut selected_candidates = Vec::new();
    for (c, name) in candidate_names.iter().enumerate() {
        let mut rel = Vec::new();
        for (m, model) in protocol.models.iter().enumerate() {
            let with = &results[n_models + c * n_models + m];
            for (k, metric) in METRICS.iter().enumerate() {
                let failure = match (&base_results[m], with) {
                    (Err(e), _) => Some(format!("base fit failed: {e}")),
                    (_, Err(e)) => Some(format!("fit failed: {e}")),
                    _ => None,
                };
                let cell = AblationCell {
                    feature: name.clone(),
                    model: model.name.clone(),
                    metric: *metric,
                    base_error: base_results[m].as_ref().ok().map(|e| e[k]),
                    with_error: with.as_ref().ok().map(|e| e[k]),
                    failure,
                };
                if let Some(r) = cell.relative_delta() {
                    rel.push(r);
                }
                cells.push(cell);
            }
        }
        let mean = (!rel.is_empty()).then(|| rel.iter().sum::<f64>() / rel.len() as f64);
        if mean.is_some_and(|m| m < -protocol.epsilon) {
            selected_candidates.push(name.clone());
        }
        mean_relative_delta.push((name.clone(), mean));
    }
    let mut selected = base.clone();
    for name in &selected_candidates {
        let f = candidates.features.iter().find(|f| &f.name == name).expect("candidate exists");
        selected = selected.with(f.clone());
    }
    Ok(FeatureAblationReport {
        base: base.names(),
        candidates: candidate_names,
        epsilon: protocol.epsilon,
        cells,
        mean_relative_delta,
        selected_candidates,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_candidates_keep_base() {
        let cal = crate::data::HolidayCalendar::spain([2021]);
        let table = crate::testutil::table(vec![Some(1.0); 24 * 14], crate::data::Cadence::Hourly, &cal);
        let base = FeatureSpec::lags(&[24]);
        let protocol = AblationProtocol::new(Task::DayAhead, 24..200, 200..300, 0);
        let report = ablate_features(&FeatureSpec::default(), &base, &table, &protocol).unwrap();
        assert!(report.cells.is_empty());
        assert_eq!(report.selected, base);
    }

    #[test]
    fn needs_two_models() {
        let mut protocol = AblationProtocol::new(Task::DayAhead, 0..10, 10..20, 0);
        protocol.models.truncate(1);
        assert!(matches!(protocol.validate(), Err(Error::Config(_))));
    }
}
