//! End-to-end pipeline behind the `loadcast` binary.
//!
//! Each stage reads its inputs from the run configuration and earlier
//! artifacts in the output directory and writes its own artifacts there:
//!
//! ```text
//! classification.csv  confusion.csv
//! features/<id>__<task>.{csv,json,spec.json}
//! tuning/<id>__<task>.{csv,json}
//! models/<id>__<task>.json
//! forecasts/<id>__<task>.json     aggregate/<task>.csv
//! evaluation/<id>__<task>__<label>.{json,csv}   evaluation/index.csv
//! plots/<id>__<task>__<label>.svg
//! report.md  summary.csv  comparisons.csv  status.json
//! ```

mod config;
mod pipeline;
mod report;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{ConsumerOverride, Paths, RunConfig, SplitFractions, TunerSettings};
pub use pipeline::{
    classification_csv, classify_consumer, default_spec, evaluate_baseline, evaluate_strategies, fit_strategy, forecast_task, prepare_record, prepare_task,
    stream_seed,
    task_series, train_task, tune_task, validation_rmse, warmup_rows, Classification, ConsumerEntry,
    ForecastArtifact, Inputs, ModelSet, StrategyPlan, TaskContext, TaskData,
};
pub use report::{report, EvaluationRecord, ReportSummary, Role};

use crate::classifier::{evaluate_classifier, ConfusionMatrix, ConsumerType};
use crate::data::{ConsumerRecord, HolidayDefinition};
use crate::error::{Error, Result};
use crate::eval::{flagged_spans, mape_svg, rolling_evaluate};
use crate::features::{ablate_features, AblationProtocol, FeatureAblationReport, FeatureSpec, Task};
use crate::models::{BaselineParams, GbdtParams};
use crate::strategies::{aggregate_forecasts, BaselineForecaster, ConsumerForecast, LocationForecast};

/// Process exit status of a run or report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Every consumer met its score targets.
    Passed,
    /// At least one consumer missed a target.
    TargetMissed,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Passed => 0,
            RunStatus::TargetMissed => 2,
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn artifact(inputs: &Inputs, dir: &str, id: &str, task: Task, ext: &str) -> PathBuf {
    inputs.config.paths.output.join(dir).join(format!("{id}__{task}.{ext}"))
}

/// Feature spec chosen by `features select`, or the type default.
pub fn spec_for(inputs: &Inputs, id: &str, task: Task, t: ConsumerType) -> Result<FeatureSpec> {
    let path = artifact(inputs, "features", id, task, "spec.json");
    if path.exists() {
        let spec: FeatureSpec = serde_json::from_str(&read_file(&path)?)?;
        spec.validate()?;
        Ok(spec)
    } else {
        Ok(default_spec(task, t))
    }
}

/// Hyperparameters chosen by `tune`, or the configured defaults.
pub fn params_for(inputs: &Inputs, id: &str, task: Task) -> Result<GbdtParams> {
    let path = artifact(inputs, "tuning", id, task, "json");
    if path.exists() {
        let p: GbdtParams = serde_json::from_str(&read_file(&path)?)?;
        p.validate()?;
        Ok(p)
    } else {
        Ok(inputs.config.model.clone())
    }
}

fn consumer_type(inputs: &Inputs, entry: &ConsumerEntry) -> Result<ConsumerType> {
    Ok(classify_consumer(inputs, entry)?.effective)
}

/// Classifies every consumer and writes `classification.csv`.
pub fn stage_classify(inputs: &Inputs) -> Result<Vec<Classification>> {
    let entries = inputs.select(None)?;
    let rows = pipeline::for_each_consumer(&entries, |e| classify_consumer(inputs, e))?;
    write_file(&inputs.config.paths.output.join("classification.csv"), classification_csv(&rows))?;
    Ok(rows)
}

/// Scores the classifier against `labels.csv` on contiguous subsets of each
/// record and writes `confusion.csv`.
pub fn stage_confusion(inputs: &Inputs) -> Result<ConfusionMatrix> {
    let entries = inputs.select(None)?;
    let records = pipeline::for_each_consumer(&entries, |e| {
        let declared = inputs.labels.get(&e.consumer_id).copied().ok_or_else(|| {
            Error::Config(format!("no label for {}", e.consumer_id)).at_stage(e.consumer_id.clone(), "classify")
        })?;
        Ok(ConsumerRecord {
            consumer_id: e.consumer_id.clone(),
            zone_id: e.zone_id.clone(),
            declared_type: Some(declared),
            load: inputs.load_series(e)?,
        })
    })?;
    let confusion = evaluate_classifier(&records, &inputs.calendar, inputs.config.classifier_splits)
        .map_err(|e| e.at_stage("*", "classify"))?;
    write_file(&inputs.config.paths.output.join("confusion.csv"), confusion.to_csv())?;
    Ok(confusion)
}

/// Feature ablation: lag features as the base set, covariates as
/// candidates. Writes the per-cell CSV and the selected spec.
pub fn stage_select_features(inputs: &Inputs, only: Option<&str>, tasks: &[Task]) -> Result<Vec<FeatureAblationReport>> {
    let entries = inputs.select(only)?;
    let per_consumer = pipeline::for_each_consumer(&entries, |e| {
        let t = consumer_type(inputs, e)?;
        tasks
            .iter()
            .map(|&task| {
                let full = default_spec(task, t);
                let data = prepare_task(inputs, e, t, task, &full, false)?;
                let base = FeatureSpec::lags(&task.default_lags());
                let candidates = FeatureSpec {
                    features: full.features.iter().filter(|f| !f.kind.is_lag()).cloned().collect(),
                };
                let seed = stream_seed(inputs.config.seed, &format!("features/{}/{task}", e.consumer_id));
                let protocol = AblationProtocol::new(task, data.split.train.clone(), data.split.valid.clone(), seed);
                let report = ablate_features(&candidates, &base, &data.table, &protocol)
                    .map_err(|err| err.at_stage(e.consumer_id.clone(), "features"))?;
                write_file(&artifact(inputs, "features", &e.consumer_id, task, "csv"), report.to_csv())?;
                write_file(&artifact(inputs, "features", &e.consumer_id, task, "json"), report.selected_json()?)?;
                write_file(
                    &artifact(inputs, "features", &e.consumer_id, task, "spec.json"),
                    serde_json::to_string_pretty(&report.selected)?,
                )?;
                Ok(report)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_consumer.into_iter().flatten().collect())
}

/// TPE tuning of the GBDT hyperparameters. Writes the trial history and
/// the best parameters, which `train` then picks up.
pub fn stage_tune(inputs: &Inputs, only: Option<&str>, tasks: &[Task], budget: Option<usize>) -> Result<Vec<GbdtParams>> {
    let mut config = inputs.config.clone();
    if let Some(b) = budget {
        config.tuner.budget = b;
    }
    if config.tuner.budget == 0 {
        return Err(Error::Config("tuner budget is 0".into()));
    }
    let entries = inputs.select(only)?;
    let per_consumer = pipeline::for_each_consumer(&entries, |e| {
        let t = consumer_type(inputs, e)?;
        tasks
            .iter()
            .map(|&task| {
                let spec = spec_for(inputs, &e.consumer_id, task, t)?;
                let data = prepare_task(inputs, e, t, task, &spec, false)?;
                let result = tune_task(&data, &spec, &config.model, &config)
                    .map_err(|err| err.at_stage(e.consumer_id.clone(), "tune"))?;
                let space = crate::tuner::SearchSpace::gbdt_default();
                let best = crate::tuner::gbdt_params_from(&result.best.assignment, &config.model)?;
                let mut csv = format!("# budget: {}; objective: validation RMSE (kW)\n", config.tuner.budget);
                csv.push_str(&result.history_csv(&space));
                write_file(&artifact(inputs, "tuning", &e.consumer_id, task, "csv"), csv)?;
                write_file(
                    &artifact(inputs, "tuning", &e.consumer_id, task, "json"),
                    serde_json::to_string_pretty(&best)?,
                )?;
                Ok(best)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_consumer.into_iter().flatten().collect())
}

fn train_one(inputs: &Inputs, e: &ConsumerEntry, t: ConsumerType, task: Task) -> Result<ModelSet> {
    let spec = spec_for(inputs, &e.consumer_id, task, t)?;
    let data = prepare_task(inputs, e, t, task, &spec, false)?;
    let params = if inputs.config.tuner.budget > 0 && !artifact(inputs, "tuning", &e.consumer_id, task, "json").exists()
    {
        let result = tune_task(&data, &spec, &inputs.config.model, &inputs.config)
            .map_err(|err| err.at_stage(e.consumer_id.clone(), "tune"))?;
        crate::tuner::gbdt_params_from(&result.best.assignment, &inputs.config.model)?
    } else {
        params_for(inputs, &e.consumer_id, task)?
    };
    let set = train_task(&data, &spec, &params, inputs)?;
    let json = serde_json::to_string_pretty(&set)?;
    write_file(&artifact(inputs, "models", &e.consumer_id, task, "json"), json)?;
    Ok(set)
}

/// Fits the primary strategy (and the single-model reference when
/// `compare` is on) on training plus validation rows.
pub fn stage_train(inputs: &Inputs, only: Option<&str>, tasks: &[Task]) -> Result<Vec<ModelSet>> {
    let entries = inputs.select(only)?;
    let per_consumer = pipeline::for_each_consumer(&entries, |e| {
        let t = consumer_type(inputs, e)?;
        tasks.iter().map(|&task| train_one(inputs, e, t, task)).collect::<Result<Vec<_>>>()
    })?;
    Ok(per_consumer.into_iter().flatten().collect())
}

pub fn load_models(inputs: &Inputs, id: &str, task: Task) -> Result<ModelSet> {
    let path = artifact(inputs, "models", id, task, "json");
    if !path.exists() {
        return Err(Error::Report(format!("missing model file {}; run `train` first", path.display())));
    }
    let set: ModelSet = serde_json::from_str(&read_file(&path)?)?;
    for doc in &set.documents {
        // Re-validates every tree ensemble.
        crate::strategies::StrategyDocument::from_json(&doc.to_json()?)?;
    }
    Ok(set)
}

/// Issues one forecast per consumer and task after the last reading.
pub fn stage_forecast(inputs: &Inputs, only: Option<&str>, tasks: &[Task]) -> Result<Vec<ForecastArtifact>> {
    let entries = inputs.select(only)?;
    let per_consumer = pipeline::for_each_consumer(&entries, |e| {
        tasks
            .iter()
            .map(|&task| {
                let models = load_models(inputs, &e.consumer_id, task).map_err(|err| err.at_stage(e.consumer_id.clone(), "forecast"))?;
                let spec = match models.primary() {
                    crate::strategies::StrategyDocument::Single(m) => m.spec.clone(),
                    crate::strategies::StrategyDocument::Fusion { spec, .. } => spec.clone(),
                    crate::strategies::StrategyDocument::Hybrid(m) => m.spec.clone(),
                };
                let data = prepare_task(inputs, e, models.consumer_type, task, &spec, true)?;
                let f = forecast_task(&data, &models, &inputs.calendar)
                    .map_err(|err| err.at_stage(e.consumer_id.clone(), "forecast"))?;
                write_file(
                    &artifact(inputs, "forecasts", &e.consumer_id, task, "json"),
                    serde_json::to_string_pretty(&f)?,
                )?;
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_consumer.into_iter().flatten().collect())
}

/// Sums the stored forecasts per zone for each task.
pub fn stage_aggregate(inputs: &Inputs, tasks: &[Task]) -> Result<Vec<(Task, Vec<LocationForecast>)>> {
    let mut out = Vec::new();
    for &task in tasks {
        let mut forecasts = Vec::new();
        let mut locations = HashMap::new();
        for e in &inputs.consumers {
            let path = artifact(inputs, "forecasts", &e.consumer_id, task, "json");
            if !path.exists() {
                return Err(Error::Report(format!("missing forecast {}", path.display()))
                    .at_stage(e.consumer_id.clone(), "aggregate"));
            }
            let f: ForecastArtifact = serde_json::from_str(&read_file(&path)?)?;
            locations.insert(f.consumer_id.clone(), f.zone_id.clone());
            forecasts.push(ConsumerForecast {
                consumer_id: f.consumer_id,
                timestamps: f.timestamps,
                values: f.values_kw,
            });
        }
        let agg = aggregate_forecasts(&forecasts, &locations).map_err(|e| e.at_stage("*", "aggregate"))?;
        let mut csv = String::from("location,timestamp,kw,consumers\n");
        for loc in &agg {
            for (ts, v) in loc.timestamps.iter().zip(&loc.values) {
                csv.push_str(&format!(
                    "{},{},{v},{}\n",
                    loc.location,
                    crate::data::format_timestamp(*ts),
                    loc.consumers.len()
                ));
            }
        }
        write_file(&inputs.config.paths.output.join("aggregate").join(format!("{task}.csv")), csv)?;
        out.push((task, agg));
    }
    Ok(out)
}

fn evaluate_one(inputs: &Inputs, e: &ConsumerEntry, task: Task) -> Result<Vec<EvaluationRecord>> {
    let id = e.consumer_id.clone();
    let models = load_models(inputs, &id, task).map_err(|err| err.at_stage(id.clone(), "evaluate"))?;
    let spec = spec_for(inputs, &id, task, models.consumer_type)?;
    let data = prepare_task(inputs, e, models.consumer_type, task, &spec, false)?;
    let test = data.split.test.clone();
    let mut runs: Vec<(Role, Box<dyn crate::strategies::Forecaster>)> = Vec::new();
    for (i, doc) in models.documents.iter().enumerate() {
        let role = if i == 0 { Role::Primary } else { Role::Reference };
        runs.push((role, doc.clone().into_forecaster(&inputs.calendar)));
    }
    if inputs.config.compare {
        let baseline = BaselineForecaster::new(task, BaselineParams::new(task.persistence()))?;
        runs.push((Role::Baseline, Box::new(baseline)));
    }
    let holiday_def = match models.plan.kind {
        crate::strategies::StrategyKind::Fusion => models.plan.holiday_definition,
        _ => HolidayDefinition::PublicOnly,
    };
    let test_ts = &data.table.timestamps[test.clone()];
    let holidays = flagged_spans(test_ts, |i| data.table.is_holiday(test.start + i, holiday_def));
    let mut records = Vec::new();
    for (role, f) in runs {
        let report = rolling_evaluate(f.as_ref(), &data.table, test.clone(), &data.policy)
            .map_err(|err| err.at_stage(id.clone(), "evaluate"))?;
        let stem = format!("{id}__{task}__{}", report.label);
        let out = &inputs.config.paths.output;
        write_file(&out.join("evaluation").join(format!("{stem}.csv")), report.windows_csv())?;
        write_file(&out.join("plots").join(format!("{stem}.svg")), mape_svg(&report, &holidays))?;
        let n_windows = report.windows.len();
        let mut summary = report;
        summary.windows.clear();
        let record = EvaluationRecord {
            consumer_id: id.clone(),
            zone_id: e.zone_id.clone(),
            consumer_type: models.consumer_type,
            role,
            n_windows,
            report: summary,
        };
        write_file(
            &out.join("evaluation").join(format!("{stem}.json")),
            serde_json::to_string_pretty(&record)?,
        )?;
        records.push(record);
    }
    Ok(records)
}

/// Rolling-origin evaluation of every trained model on the test span, plus
/// the persistence reference. Rewrites `evaluation/index.csv` from the
/// evaluation files present.
pub fn stage_evaluate(inputs: &Inputs, only: Option<&str>, tasks: &[Task]) -> Result<Vec<EvaluationRecord>> {
    let entries = inputs.select(only)?;
    let per_consumer = pipeline::for_each_consumer(&entries, |e| {
        tasks
            .iter()
            .map(|&task| evaluate_one(inputs, e, task))
            .collect::<Result<Vec<_>>>()
    })?;
    report::write_index(&inputs.config.paths.output)?;
    Ok(per_consumer.into_iter().flatten().flatten().collect())
}

/// Classification, training, forecasting, evaluation, aggregation and the
/// report, in that order.
pub fn run(config: &RunConfig) -> Result<ReportSummary> {
    let inputs = Inputs::load(config)?;
    let tasks = config.tasks.clone();
    stage_classify(&inputs)?;
    if config.select_features {
        stage_select_features(&inputs, None, &tasks)?;
    }
    stage_train(&inputs, None, &tasks)?;
    stage_forecast(&inputs, None, &tasks)?;
    stage_evaluate(&inputs, None, &tasks)?;
    stage_aggregate(&inputs, &tasks)?;
    report(&config.paths.output)
}
