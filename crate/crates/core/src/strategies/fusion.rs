use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{training_matrix, Forecaster, StrategyKind};
use crate::data::{AlignedTable, HolidayCalendar, HolidayDefinition};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSpec, Task};
use crate::models::{fit_ensemble, EnsembleMode, GbdtParams, TreeEnsembleModel};

/// Minimum training rows per fusion partition.
pub const DEFAULT_PARTITION_FLOOR: usize = 100;

/// A holiday specialist and a working-day specialist sharing one feature
/// schema; every timestamp is served by exactly one of them.
#[derive(Debug, Clone)]
pub struct FusionModel {
    pub label: String,
    pub task: Task,
    pub spec: FeatureSpec,
    pub holiday_definition: HolidayDefinition,
    pub holiday_model: TreeEnsembleModel,
    pub workday_model: TreeEnsembleModel,
    pub calendar: HolidayCalendar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionOptions {
    pub holiday_definition: HolidayDefinition,
    pub partition_floor: usize,
}

impl FusionOptions {
    pub fn new(holiday_definition: HolidayDefinition) -> Self {
        Self {
            holiday_definition,
            partition_floor: DEFAULT_PARTITION_FLOOR,
        }
    }
}

fn other(def: HolidayDefinition) -> HolidayDefinition {
    match def {
        HolidayDefinition::PublicOnly => HolidayDefinition::PublicPlusWeekends,
        HolidayDefinition::PublicPlusWeekends => HolidayDefinition::PublicOnly,
    }
}

/// Fits one submodel on the holiday rows of `train` and one on the rest.
#[allow(clippy::too_many_arguments)]
pub fn fit_fusion(
    table: &AlignedTable,
    spec: &FeatureSpec,
    task: Task,
    params: &GbdtParams,
    mode: EnsembleMode,
    train: Range<usize>,
    cal: &HolidayCalendar,
    opts: &FusionOptions,
) -> Result<FusionModel> {
    let mut spec = spec.clone();
    let matrix = training_matrix(table, &mut spec, task, train)?;
    let mut holiday = Vec::new();
    let mut workday = Vec::new();
    for (i, ts) in matrix.timestamps.iter().enumerate() {
        if cal.try_is_holiday(*ts, opts.holiday_definition)? {
            holiday.push(i);
        } else {
            workday.push(i);
        }
    }
    for (name, rows) in [("holiday", &holiday), ("workday", &workday)] {
        if rows.len() < opts.partition_floor {
            return Err(Error::Partition(format!(
                "{name} partition has {} training rows under holiday definition {}, need {}; \
                 try holiday definition {}",
                rows.len(),
                opts.holiday_definition,
                opts.partition_floor,
                other(opts.holiday_definition)
            )));
        }
    }
    let (hm, wm) = (matrix.select(&holiday), matrix.select(&workday));
    let (holiday_model, workday_model) =
        rayon::join(|| fit_ensemble(params, mode, &hm), || fit_ensemble(params, mode, &wm));
    Ok(FusionModel {
        label: StrategyKind::Fusion.as_str().to_string(),
        task,
        spec,
        holiday_definition: opts.holiday_definition,
        holiday_model: holiday_model?,
        workday_model: workday_model?,
        calendar: cal.clone(),
    })
}

impl FusionModel {
    /// Holiday routing per matrix row.
    pub fn route(&self, matrix: &FeatureMatrix) -> Result<Vec<bool>> {
        matrix
            .timestamps
            .iter()
            .map(|ts| self.calendar.try_is_holiday(*ts, self.holiday_definition))
            .collect()
    }
}

/// Per row, the prediction of the submodel its timestamp routes to.
pub fn predict_fusion(model: &FusionModel, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    let routes = model.route(matrix)?;
    model.holiday_model.check_schema(&matrix.column_names())?;
    Ok(routes
        .iter()
        .enumerate()
        .map(|(i, &holiday)| {
            let m = if holiday { &model.holiday_model } else { &model.workday_model };
            m.predict_row(matrix.row(i))
        })
        .collect())
}

impl Forecaster for FusionModel {
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
        predict_fusion(self, matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Cadence;
    use crate::features::{build_matrix, FeatureDescriptor};
    use crate::testutil;
    use chrono::NaiveDate;

    fn params() -> GbdtParams {
        GbdtParams {
            n_trees: 5,
            learning_rate: 1.0,
            min_samples_leaf: 5,
            ..Default::default()
        }
    }

    fn spec() -> FeatureSpec {
        FeatureSpec::lags(&[24]).with(FeatureDescriptor::hour(crate::features::Encoding::CategoricalCode))
    }

    #[test]
    fn no_holidays_is_partition_error() {
        let cal = HolidayCalendar::new("ES", []).with_coverage(
            NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2022, 12, 31).unwrap(),
        );
        let table = testutil::table(vec![Some(1.0); 24 * 28], Cadence::Hourly, &cal);
        let opts = FusionOptions::new(HolidayDefinition::PublicOnly);
        let err = fit_fusion(&table, &spec(), Task::DayAhead, &params(), EnsembleMode::Boosted, 0..table.len(), &cal, &opts)
            .unwrap_err();
        match err {
            Error::Partition(msg) => assert!(msg.contains("ph+we")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_partitions_predicted_exactly() {
        let cal = HolidayCalendar::spain([2021]);
        let mut values = Vec::new();
        let mut table = testutil::table(vec![Some(0.0); 24 * 42], Cadence::Hourly, &cal);
        for r in 0..table.len() {
            let v = if cal.is_holiday(table.timestamps[r], HolidayDefinition::PublicPlusWeekends) { 3.0 } else { 50.0 };
            values.push(Some(v));
        }
        table.target = values;
        let opts = FusionOptions::new(HolidayDefinition::PublicPlusWeekends);
        let model = fit_fusion(&table, &spec(), Task::DayAhead, &params(), EnsembleMode::Boosted, 0..table.len(), &cal, &opts)
            .unwrap();
        let m = build_matrix(&table, &model.spec, 24).unwrap();
        let preds = model.predict_matrix(&m).unwrap();
        let routes = model.route(&m).unwrap();
        for ((p, y), h) in preds.iter().zip(&m.target).zip(routes) {
            assert!((p - y).abs() < 1e-9, "{p} vs {y}");
            assert_eq!(*y == 3.0, h);
        }
    }

    #[test]
    fn prediction_outside_coverage_is_calendar_error() {
        let cal = HolidayCalendar::spain([2021]);
        let table = testutil::table(vec![Some(1.0); 24 * 28], Cadence::Hourly, &cal);
        let mut model = fit_fusion(
            &table,
            &spec(),
            Task::DayAhead,
            &params(),
            EnsembleMode::Boosted,
            0..table.len(),
            &cal,
            &FusionOptions::new(HolidayDefinition::PublicPlusWeekends),
        )
        .unwrap();
        model.calendar = cal.with_coverage(
            NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2022, 12, 31).unwrap(),
        );
        let m = build_matrix(&table, &model.spec, 24).unwrap();
        assert!(matches!(model.predict_matrix(&m), Err(Error::Calendar(_))));
    }
}
