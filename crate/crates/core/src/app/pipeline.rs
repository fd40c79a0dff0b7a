use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::classifier::{classify_with_rule, profile_stats, ConsumerType, ProfileStats, Rule};
use crate::data::{
    align_covariates, ingest_load_csv, read_holidays, read_socio_csv, read_weather_csv, resample_to_hourly,
    AlignOptions, AlignedTable, Cadence, ConsumerRecord, HolidayCalendar, HolidayDefinition, LoadSeries, SocioEconomicRecord,
    WeatherSeries,
};
use crate::error::{Error, Result};
use crate::eval::{rmse, rolling_evaluate, DataSplit, EvalReport, ThresholdPolicy};
use crate::features::{FeatureSpec, ModelFamily, Task};
use crate::models::{BaselineKind, BaselineParams, EnsembleMode, GbdtParams};
use crate::strategies::{
    default_baseline, default_holiday_definition, fit_fusion, fit_hybrid, BaselineForecaster, FusionOptions, SingleModel,
    StrategyDocument, StrategyKind,
};
use crate::synth::derive_seed;
use crate::tuner::{gbdt_params_from, tune, SearchSpace, TpeConfig, TuneResult};

/// Seed of the named sub-stream of `master` (tuner, model, ...).
pub fn stream_seed(master: u64, name: &str) -> u64 {
    let digest = Sha256::digest(name.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    derive_seed(master, u64::from_le_bytes(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsumerEntry {
    pub consumer_id: String,
    pub zone_id: String,
    pub cadence: Cadence,
}

/// Run-wide inputs: the consumer listing, calendar and zone covariates.
/// Load and weather files are read per consumer by the stages that need them.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub config: RunConfig,
    pub calendar: HolidayCalendar,
    pub consumers: Vec<ConsumerEntry>,
    pub socio: Vec<SocioEconomicRecord>,
    pub labels: HashMap<String, ConsumerType>,
}

const RUN: &str = "*";

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Schema(format!(
            "{}: expected columns {header:?}, found {found:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, r) in rdr.records().enumerate() {
        let r = r.map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        rows.push(r.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

impl Inputs {
    pub fn load(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let paths = &config.paths;
        let calendar = read_holidays(&paths.holidays, "ES").map_err(|e| e.at_stage(RUN, "inputs"))?;
        let mut consumers = Vec::new();
        for row in read_table(&paths.consumers, &["consumer_id", "zone_id", "cadence_min"])
            .map_err(|e| e.at_stage(RUN, "inputs"))?
        {
            let minutes: i64 = row[2].parse().map_err(|_| {
                Error::Schema(format!("invalid cadence {:?}", row[2])).at_stage(row[0].clone(), "inputs")
            })?;
            consumers.push(ConsumerEntry {
                consumer_id: row[0].clone(),
                zone_id: row[1].clone(),
                cadence: Cadence::from_minutes(minutes).map_err(|e| e.at_stage(row[0].clone(), "inputs"))?,
            });
        }
        consumers.sort_by(|a, b| a.consumer_id.cmp(&b.consumer_id));
        if let Some(w) = consumers.windows(2).find(|w| w[0].consumer_id == w[1].consumer_id) {
            return Err(Error::Config(format!("duplicate consumer {}", w[0].consumer_id)).at_stage(RUN, "inputs"));
        }
        let socio = match &paths.socio {
            Some(p) => read_socio_csv(p).map_err(|e| e.at_stage(RUN, "inputs"))?,
            None => Vec::new(),
        };
        let mut labels = HashMap::new();
        if let Some(p) = paths.labels.as_ref().filter(|p| p.exists()) {
            for row in read_table(p, &["consumer_id", "type"]).map_err(|e| e.at_stage(RUN, "inputs"))? {
                labels.insert(row[0].clone(), row[1].parse().map_err(|e: Error| e.at_stage(RUN, "inputs"))?);
            }
        }
        Ok(Self {
            config: config.clone(),
            calendar,
            consumers,
            socio,
            labels,
        })
    }

    pub fn entry(&self, consumer_id: &str) -> Result<&ConsumerEntry> {
        self.consumers
            .iter()
            .find(|c| c.consumer_id == consumer_id)
            .ok_or_else(|| Error::Config(format!("unknown consumer {consumer_id}")))
    }

    /// Consumers named in `only`, or all of them.
    pub fn select(&self, only: Option<&str>) -> Result<Vec<&ConsumerEntry>> {
        match only {
            Some(id) => Ok(vec![self.entry(id)?]),
            None => Ok(self.consumers.iter().collect()),
        }
    }

    pub fn load_series(&self, entry: &ConsumerEntry) -> Result<LoadSeries> {
        let path = self.config.paths.load.join(format!("{}.csv", entry.consumer_id));
        ingest_load_csv(path, entry.cadence).map_err(|e| e.at_stage(entry.consumer_id.clone(), "ingest"))
    }

    fn weather(&self, zone_id: &str) -> Result<WeatherSeries> {
        read_weather_csv(self.config.paths.weather.join(format!("{zone_id}.csv")))
    }

    pub fn socio_for(&self, zone_id: &str) -> Option<&SocioEconomicRecord> {
        self.socio.iter().find(|s| s.zone_id == zone_id)
    }
}

/// Outcome of the rule-based classifier for one consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub consumer_id: String,
    pub zone_id: String,
    pub declared: Option<ConsumerType>,
    pub predicted: ConsumerType,
    pub rule: Rule,
    pub stats: ProfileStats,
    /// Type used downstream: the override if configured, else `predicted`.
    pub effective: ConsumerType,
}

pub fn classify_consumer(inputs: &Inputs, entry: &ConsumerEntry) -> Result<Classification> {
    let series = inputs.load_series(entry)?;
    let stats = profile_stats(&series, &inputs.calendar).map_err(|e| e.at_stage(entry.consumer_id.clone(), "classify"))?;
    let (predicted, rule) = classify_with_rule(&stats);
    Ok(Classification {
        consumer_id: entry.consumer_id.clone(),
        zone_id: entry.zone_id.clone(),
        declared: inputs.labels.get(&entry.consumer_id).copied(),
        predicted,
        rule,
        stats,
        effective: inputs.config.override_for(&entry.consumer_id).consumer_type.unwrap_or(predicted),
    })
}

pub fn classification_csv(rows: &[Classification]) -> String {
    let mut out = String::from("consumer_id,zone_id,declared,predicted,rule,effective,c_h,c_w,c_sat,c_sun,hourly_std\n");
    for c in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            c.consumer_id,
            c.zone_id,
            c.declared.map(|t| t.as_str()).unwrap_or(""),
            c.predicted,
            c.rule,
            c.effective,
            c.stats.c_h,
            c.stats.c_w,
            c.stats.c_sat,
            c.stats.c_sun,
            c.stats.hourly_std
        ));
    }
    out
}

/// Strategy and its settings for one consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyPlan {
    pub kind: StrategyKind,
    pub holiday_definition: HolidayDefinition,
    pub baseline: BaselineKind,
}

impl StrategyPlan {
    pub fn for_consumer(config: &RunConfig, consumer_id: &str, t: ConsumerType, task: Task) -> Self {
        let o = config.override_for(consumer_id);
        Self {
            kind: o.strategy.unwrap_or_else(|| StrategyKind::default_for(t)),
            holiday_definition: o.holiday_definition.unwrap_or_else(|| default_holiday_definition(t)),
            baseline: default_baseline(task, t),
        }
    }
}

/// Aligned table, split and plan for one consumer and task.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub consumer_id: String,
    pub zone_id: String,
    pub consumer_type: ConsumerType,
    pub task: Task,
    pub table: AlignedTable,
    pub split: DataSplit,
    pub plan: StrategyPlan,
    pub policy: ThresholdPolicy,
}

/// Rows every strategy of this consumer skips as lag history: the largest
/// lag of the feature spec or of the hybrid baseline.
pub fn warmup_rows(spec: &FeatureSpec, task: Task, baseline: BaselineKind) -> usize {
    let cadence = task.cadence();
    spec.max_lag(cadence).max(BaselineParams::new(baseline).max_lag(cadence))
}

/// Series at the task cadence.
pub fn task_series(series: &LoadSeries, task: Task) -> Result<LoadSeries> {
    match (series.cadence, task.cadence()) {
        (a, b) if a == b => Ok(series.clone()),
        (Cadence::QuarterHour, Cadence::Hourly) => resample_to_hourly(series),
        (a, b) => Err(Error::Config(format!(
            "{} task needs {} min data, consumer has {} min",
            task,
            b.minutes(),
            a.minutes()
        ))),
    }
}

/// Builds the aligned table for `task` from files named by `inputs`. With
/// `extend`, the grid continues one horizon past the last reading so that a
/// forecast can be issued.
pub fn prepare_task(
    inputs: &Inputs,
    entry: &ConsumerEntry,
    consumer_type: ConsumerType,
    task: Task,
    spec: &FeatureSpec,
    extend: bool,
) -> Result<TaskData> {
    let series = inputs.load_series(entry)?;
    let weather = inputs
        .weather(&entry.zone_id)
        .map_err(|e| e.at_stage(entry.consumer_id.clone(), "align_covariates"))?;
    let record = ConsumerRecord {
        consumer_id: entry.consumer_id.clone(),
        zone_id: entry.zone_id.clone(),
        declared_type: None,
        load: series,
    };
    let ctx = TaskContext {
        calendar: &inputs.calendar,
        weather: &weather,
        socio: inputs.socio_for(&entry.zone_id),
        config: &inputs.config,
    };
    prepare_record(&record, consumer_type, task, spec, extend, &ctx)
}

/// Covariates and settings for [`prepare_record`].
#[derive(Debug, Clone, Copy)]
pub struct TaskContext<'a> {
    pub calendar: &'a HolidayCalendar,
    pub weather: &'a WeatherSeries,
    pub socio: Option<&'a SocioEconomicRecord>,
    pub config: &'a RunConfig,
}

/// In-memory counterpart of [`prepare_task`].
pub fn prepare_record(
    record: &ConsumerRecord,
    consumer_type: ConsumerType,
    task: Task,
    spec: &FeatureSpec,
    extend: bool,
    ctx: &TaskContext<'_>,
) -> Result<TaskData> {
    let id = record.consumer_id.clone();
    let series = task_series(&record.load, task).map_err(|e| e.at_stage(id.clone(), "align_covariates"))?;
    let observed = series.len();
    let opts = AlignOptions {
        extend_to: extend.then(|| series.end() + series.cadence.duration() * task.horizon() as i32),
        ..Default::default()
    };
    let table = align_covariates(&series, ctx.weather, ctx.calendar, ctx.socio, opts)
        .map_err(|e| e.at_stage(id.clone(), "align_covariates"))?;
    let plan = StrategyPlan::for_consumer(ctx.config, &id, consumer_type, task);
    let warmup = warmup_rows(spec, task, plan.baseline);
    let split = DataSplit::chronological(observed, warmup, ctx.config.split.as_tuple())
        .map_err(|e| e.at_stage(id.clone(), "split"))?;
    Ok(TaskData {
        consumer_id: id.clone(),
        zone_id: record.zone_id.clone(),
        consumer_type,
        task,
        table,
        split,
        plan,
        policy: ctx.config.policy_for(&id, consumer_type),
    })
}

pub fn default_spec(task: Task, t: ConsumerType) -> FeatureSpec {
    FeatureSpec::default_for(task, t, ModelFamily::Tree)
}

/// Validation RMSE of a single model trained on the training rows.
pub fn validation_rmse(data: &TaskData, spec: &FeatureSpec, params: &GbdtParams) -> Result<f64> {
    let model = SingleModel::fit(&data.table, spec, data.task, params, EnsembleMode::Boosted, data.split.train.clone())?;
    let rows = data.split.valid.clone();
    let preds = crate::strategies::Forecaster::predict_rows(&model, &data.table, rows.clone())?;
    let (mut a, mut p) = (Vec::new(), Vec::new());
    for (r, pred) in rows.zip(preds) {
        if let (Some(y), Some(yhat)) = (data.table.target[r], pred) {
            a.push(y);
            p.push(yhat);
        }
    }
    if a.is_empty() {
        return Err(Error::Span("no labelled validation rows".into()));
    }
    rmse(&a, &p)
}

/// TPE search over the default GBDT space, minimizing validation RMSE.
pub fn tune_task(data: &TaskData, spec: &FeatureSpec, base: &GbdtParams, config: &RunConfig) -> Result<TuneResult> {
    let space = SearchSpace::gbdt_default();
    let tpe = TpeConfig {
        n_startup: config.tuner.n_startup,
        gamma: config.tuner.gamma,
        n_candidates: config.tuner.n_candidates,
        seed: stream_seed(config.seed, &format!("tuner/{}/{}", data.consumer_id, data.task)),
        ..TpeConfig::default()
    };
    tune(
        |a| validation_rmse(data, spec, &gbdt_params_from(a, base)?),
        &space,
        &tpe,
        config.tuner.budget,
    )
}

/// Fits `kind` on training plus validation rows.
pub fn fit_strategy(
    data: &TaskData,
    kind: StrategyKind,
    spec: &FeatureSpec,
    params: &GbdtParams,
    cal: &HolidayCalendar,
) -> Result<StrategyDocument> {
    let rows = data.split.train_and_valid();
    let mode = EnsembleMode::Boosted;
    Ok(match kind {
        StrategyKind::Single => StrategyDocument::Single(SingleModel::fit(&data.table, spec, data.task, params, mode, rows)?),
        StrategyKind::Fusion => fit_fusion(
            &data.table,
            spec,
            data.task,
            params,
            mode,
            rows,
            cal,
            &FusionOptions::new(data.plan.holiday_definition),
        )?
        .into(),
        StrategyKind::Hybrid => {
            StrategyDocument::Hybrid(fit_hybrid(&data.table, spec, data.task, params, mode, rows, data.plan.baseline)?)
        }
    })
}

/// Trained documents for one consumer and task; the first is the primary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    pub consumer_id: String,
    pub zone_id: String,
    pub consumer_type: ConsumerType,
    pub task: Task,
    pub plan: StrategyPlan,
    pub params: GbdtParams,
    pub documents: Vec<StrategyDocument>,
}

impl ModelSet {
    pub fn primary(&self) -> &StrategyDocument {
        &self.documents[0]
    }
}

pub fn train_task(data: &TaskData, spec: &FeatureSpec, params: &GbdtParams, inputs: &Inputs) -> Result<ModelSet> {
    let mut params = params.clone();
    params.seed = stream_seed(inputs.config.seed, &format!("model/{}/{}", data.consumer_id, data.task));
    let mut kinds = vec![data.plan.kind];
    if inputs.config.compare && data.plan.kind != StrategyKind::Single {
        kinds.push(StrategyKind::Single);
    }
    let documents = kinds
        .into_iter()
        .map(|k| fit_strategy(data, k, spec, &params, &inputs.calendar))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage(data.consumer_id.clone(), "train"))?;
    Ok(ModelSet {
        consumer_id: data.consumer_id.clone(),
        zone_id: data.zone_id.clone(),
        consumer_type: data.consumer_type,
        task: data.task,
        plan: data.plan,
        params,
        documents,
    })
}

/// A forecast issued after the last observed reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastArtifact {
    pub consumer_id: String,
    pub zone_id: String,
    pub task: Task,
    pub strategy: StrategyKind,
    pub issued_at: DateTime<Utc>,
    pub timestamps: Vec<DateTime<Utc>>,
    pub values_kw: Vec<f64>,
    /// SHA-256 of the serialized strategy document.
    pub model_fingerprint: String,
}

/// Forecasts the horizon following the observed data with the primary
/// strategy of `models`. `data` must be prepared with `extend`.
pub fn forecast_task(data: &TaskData, models: &ModelSet, cal: &HolidayCalendar) -> Result<ForecastArtifact> {
    let doc = models.primary().clone();
    let fingerprint = doc.fingerprint()?;
    let strategy = doc.kind();
    let observed = data.split.test.end;
    let rows = observed..data.table.len();
    if rows.len() != data.task.horizon() {
        return Err(Error::Span(format!(
            "{} rows past the data, expected {}",
            rows.len(),
            data.task.horizon()
        )));
    }
    let forecaster = doc.into_forecaster(cal);
    let values = forecaster
        .predict_rows(&data.table, rows.clone())?
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::Horizon {
                lag: "forecast input".into(),
                at: data.table.timestamps[observed + i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForecastArtifact {
        consumer_id: data.consumer_id.clone(),
        zone_id: data.zone_id.clone(),
        task: data.task,
        strategy,
        issued_at: data.table.timestamps[observed - 1],
        timestamps: data.table.timestamps[rows].to_vec(),
        values_kw: values,
        model_fingerprint: fingerprint,
    })
}

/// Runs `f` on every consumer in parallel and returns the results in
/// consumer order; the first error (in that order) wins.
pub fn for_each_consumer<T, F>(entries: &[&ConsumerEntry], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ConsumerEntry) -> Result<T> + Sync + Send,
{
    entries.par_iter().map(|e| f(e)).collect::<Vec<_>>().into_iter().collect()
}

/// Fits each of `kinds` on training plus validation rows and scores it on
/// the test span, in the order given.
pub fn evaluate_strategies(
    data: &TaskData,
    kinds: &[StrategyKind],
    spec: &FeatureSpec,
    params: &GbdtParams,
    cal: &HolidayCalendar,
) -> Result<Vec<EvalReport>> {
    kinds
        .iter()
        .map(|&k| {
            let doc = fit_strategy(data, k, spec, params, cal)?;
            rolling_evaluate(doc.into_forecaster(cal).as_ref(), &data.table, data.split.test.clone(), &data.policy)
        })
        .collect()
}

/// Scores a statistical baseline on the test span.
pub fn evaluate_baseline(data: &TaskData, kind: BaselineKind) -> Result<EvalReport> {
    let f = BaselineForecaster::new(data.task, BaselineParams::new(kind))?;
    rolling_evaluate(&f, &data.table, data.split.test.clone(), &data.policy)
}
