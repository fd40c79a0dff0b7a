//! Forecasting strategies: plain single model, holiday/workday fusion,
//! baseline-augmented hybrid, and per-location aggregation.

mod aggregate;
mod fusion;
mod hybrid;

use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate_forecasts, ConsumerForecast, LocationForecast};
pub use fusion::{fit_fusion, predict_fusion, FusionModel, FusionOptions, DEFAULT_PARTITION_FLOOR};
pub use hybrid::{fit_hybrid, predict_hybrid, HybridModel};

use crate::classifier::ConsumerType;
use crate::data::{AlignedTable, HolidayCalendar, HolidayDefinition};
use crate::error::{Error, Result};
use crate::features::{build_matrix_with, FeatureDescriptor, FeatureMatrix, FeatureSpec, MatrixOptions, Task};
use crate::models::{fit_ensemble, BaselineKind, BaselineParams, EnsembleMode, GbdtParams, TreeEnsembleModel};

/// Anything that maps feature rows of an aligned table to kW forecasts.
pub trait Forecaster: Send + Sync {
    fn label(&self) -> &str;

    fn task(&self) -> Task;

    fn feature_spec(&self) -> &FeatureSpec;

    fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>>;

    /// Forecast for every table row in `rows`; `None` where an input is
    /// unavailable (e.g. a lag falls into a data gap).
    fn predict_rows(&self, table: &AlignedTable, rows: Range<usize>) -> Result<Vec<Option<f64>>> {
        let mut out = vec![None; rows.len()];
        let opts = MatrixOptions {
            require_target: false,
            rows: Some(rows.clone()),
        };
        let matrix = match build_matrix_with(table, self.feature_spec(), self.task().horizon(), &opts) {
            Ok(m) => m,
            Err(Error::EmptyMatrix(_)) => return Ok(out),
            Err(e) => return Err(e),
        };
        let preds = self.predict_matrix(&matrix)?;
        for (r, p) in matrix.rows.iter().zip(preds) {
            out[r - rows.start] = Some(p);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Single,
    Fusion,
    Hybrid,
}

impl StrategyKind {
    /// Hybrid for residential consumers, fusion otherwise.
    pub fn default_for(t: ConsumerType) -> Self {
        match t {
            ConsumerType::Residential => StrategyKind::Hybrid,
            ConsumerType::Industrial | ConsumerType::Commercial => StrategyKind::Fusion,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Single => "single",
            StrategyKind::Fusion => "fusion",
            StrategyKind::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(StrategyKind::Single),
            "fusion" => Ok(StrategyKind::Fusion),
            "hybrid" => Ok(StrategyKind::Hybrid),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?} (expected single, fusion or hybrid)"
            ))),
        }
    }
}

/// Holiday definition for the fusion split: weekends count as holidays for
/// industrial consumers only.
pub fn default_holiday_definition(t: ConsumerType) -> HolidayDefinition {
    match t {
        ConsumerType::Industrial => HolidayDefinition::PublicPlusWeekends,
        _ => HolidayDefinition::PublicOnly,
    }
}

/// Baseline that a hybrid model consumes for `task` and consumer type.
pub fn default_baseline(task: Task, t: ConsumerType) -> BaselineKind {
    match t {
        ConsumerType::Residential => task.residential_baseline(),
        _ => task.persistence(),
    }
}

/// Fits standardization on `train` and returns the labelled training matrix.
pub(crate) fn training_matrix(
    table: &AlignedTable,
    spec: &mut FeatureSpec,
    task: Task,
    train: Range<usize>,
) -> Result<FeatureMatrix> {
    if train.end > table.len() || train.is_empty() {
        return Err(Error::Span(format!(
            "training rows {train:?} do not fit a table of {} rows",
            table.len()
        )));
    }
    spec.fit_standardization(table, train.clone())?;
    build_matrix_with(
        table,
        spec,
        task.horizon(),
        &MatrixOptions {
            require_target: true,
            rows: Some(train),
        },
    )
}

/// One tree ensemble for every timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleModel {
    pub label: String,
    pub task: Task,
    pub spec: FeatureSpec,
    pub model: TreeEnsembleModel,
}

impl SingleModel {
    pub fn fit(
        table: &AlignedTable,
        spec: &FeatureSpec,
        task: Task,
        params: &GbdtParams,
        mode: EnsembleMode,
        train: Range<usize>,
    ) -> Result<Self> {
        let mut spec = spec.clone();
        let matrix = training_matrix(table, &mut spec, task, train)?;
        let model = fit_ensemble(params, mode, &matrix)?;
        Ok(Self {
            label: StrategyKind::Single.as_str().to_string(),
            task,
            spec,
            model,
        })
    }
}

impl Forecaster for SingleModel {
    fn label(&self) -> &str {
        &self.label
    }

    fn task(&self) -> Task {
        self.task
    }

    fn feature_spec(&self) -> &FeatureSpec {
        &self.spec
    }

    fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.model.predict(matrix)
    }
}

/// A statistical baseline behind the [`Forecaster`] interface.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineForecaster {
    label: String,
    task: Task,
    pub params: BaselineParams,
    spec: FeatureSpec,
}

impl BaselineForecaster {
    pub fn new(task: Task, params: BaselineParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            label: params.kind.as_str().to_string(),
            task,
            params,
            spec: FeatureSpec {
                features: vec![FeatureDescriptor::baseline(params.kind)],
            },
        })
    }
}

impl Forecaster for BaselineForecaster {
    fn label(&self) -> &str {
        &self.label
    }

    fn task(&self) -> Task {
        self.task
    }

    fn feature_spec(&self) -> &FeatureSpec {
        &self.spec
    }

    fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(matrix.column_values(0))
    }

    fn predict_rows(&self, table: &AlignedTable, rows: Range<usize>) -> Result<Vec<Option<f64>>> {
        if self.params.min_lag(table.cadence) < self.task.horizon() {
            return Err(Error::Config(format!(
                "baseline {} cannot forecast {} steps ahead",
                self.label,
                self.task.horizon()
            )));
        }
        Ok(rows
            .map(|r| self.params.evaluate(&table.target, r, table.cadence).ok())
            .collect())
    }
}

/// Serializable form of a trained strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum StrategyDocument {
    Single(SingleModel),
    Fusion {
        task: Task,
        spec: FeatureSpec,
        holiday_definition: HolidayDefinition,
        holiday_model: TreeEnsembleModel,
        workday_model: TreeEnsembleModel,
    },
    Hybrid(HybridModel),
}

impl StrategyDocument {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyDocument::Single(_) => StrategyKind::Single,
            StrategyDocument::Fusion { .. } => StrategyKind::Fusion,
            StrategyDocument::Hybrid(_) => StrategyKind::Hybrid,
        }
    }

    /// Rebuilds the forecaster; fusion routing needs the holiday calendar.
    pub fn into_forecaster(self, cal: &HolidayCalendar) -> Box<dyn Forecaster> {
        match self {
            StrategyDocument::Single(m) => Box::new(m),
            StrategyDocument::Fusion {
                task,
                spec,
                holiday_definition,
                holiday_model,
                workday_model,
            } => Box::new(FusionModel {
                label: StrategyKind::Fusion.as_str().to_string(),
                task,
                spec,
                holiday_definition,
                holiday_model,
                workday_model,
                calendar: cal.clone(),
            }),
            StrategyDocument::Hybrid(m) => Box::new(m),
        }
    }

    /// Every tree ensemble in the document, for fingerprinting.
    pub fn models(&self) -> Vec<&TreeEnsembleModel> {
        match self {
            StrategyDocument::Single(m) => vec![&m.model],
            StrategyDocument::Fusion {
                holiday_model,
                workday_model,
                ..
            } => vec![holiday_model, workday_model],
            StrategyDocument::Hybrid(m) => vec![&m.core],
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        for m in doc.models() {
            // Re-validates version and tree structure.
            TreeEnsembleModel::from_json(&m.to_json()?)?;
        }
        Ok(doc)
    }

    /// SHA-256 of the serialized document.
    pub fn fingerprint(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

impl From<FusionModel> for StrategyDocument {
    fn from(m: FusionModel) -> Self {
        StrategyDocument::Fusion {
            task: m.task,
            spec: m.spec,
            holiday_definition: m.holiday_definition,
            holiday_model: m.holiday_model,
            workday_model: m.workday_model,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for k in [StrategyKind::Single, StrategyKind::Fusion, StrategyKind::Hybrid] {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("stacked".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn per_type_defaults() {
        assert_eq!(StrategyKind::default_for(ConsumerType::Residential), StrategyKind::Hybrid);
        assert_eq!(StrategyKind::default_for(ConsumerType::Industrial), StrategyKind::Fusion);
        assert_eq!(
            default_holiday_definition(ConsumerType::Industrial),
            HolidayDefinition::PublicPlusWeekends
        );
        assert_eq!(
            default_holiday_definition(ConsumerType::Commercial),
            HolidayDefinition::PublicOnly
        );
    }
}
