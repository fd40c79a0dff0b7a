use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{training_matrix, Forecaster, StrategyKind};
use crate::data::AlignedTable;
use crate::error::{Error, Result};
use crate::features::{FeatureDescriptor, FeatureMatrix, FeatureSpec, Task};
use crate::models::{describe_lag, fit_ensemble, BaselineKind, BaselineParams, EnsembleMode, GbdtParams, TreeEnsembleModel};

/// Tree ensemble that reads a statistical baseline forecast as one of its
/// inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub label: String,
    pub task: Task,
    /// Core feature spec, including the baseline column.
    pub spec: FeatureSpec,
    pub baseline: BaselineKind,
    pub core: TreeEnsembleModel,
}

/// Adds the `baseline` column to `spec` and fits the core model on `train`.
///
/// Every training row must have enough history for the baseline; otherwise
/// a horizon error names the missing lag and the first affected row.
#[allow(clippy::too_many_arguments)]
pub fn fit_hybrid(
    table: &AlignedTable,
    spec: &FeatureSpec,
    task: Task,
    params: &GbdtParams,
    mode: EnsembleMode,
    train: Range<usize>,
    baseline: BaselineKind,
) -> Result<HybridModel> {
    let bp = BaselineParams::new(baseline);
    if bp.min_lag(table.cadence) < task.horizon() {
        return Err(Error::Config(format!(
            "baseline {} reads {} step(s) back, below the {task} horizon",
            baseline.as_str(),
            bp.min_lag(table.cadence)
        )));
    }
    let burn_in = bp.max_lag(table.cadence);
    if train.start < burn_in && train.start < table.len() {
        let lag = bp
            .evaluate(&table.target, train.start, table.cadence)
            .err()
            .unwrap_or(burn_in);
        return Err(Error::Horizon {
            lag: describe_lag(lag, table.cadence),
            at: table.timestamps[train.start],
        });
    }
    let mut spec = spec.with(FeatureDescriptor::baseline(baseline));
    let matrix = training_matrix(table, &mut spec, task, train)?;
    let core = fit_ensemble(params, mode, &matrix)?;
    Ok(HybridModel {
        label: StrategyKind::Hybrid.as_str().to_string(),
        task,
        spec,
        baseline,
        core,
    })
}

/// Core prediction on rows whose baseline column was computed from history.
pub fn predict_hybrid(model: &HybridModel, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    let name = FeatureDescriptor::baseline(model.baseline).name;
    if matrix.column_index(&name).is_none() {
        return Err(Error::Schema(format!("matrix lacks the baseline column {name}")));
    }
    model.core.predict(matrix)
}

impl Forecaster for HybridModel {
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
        predict_hybrid(self, matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Cadence, HolidayCalendar};
    use crate::testutil;

    #[test]
    fn burn_in_violation_names_the_lag() {
        let cal = HolidayCalendar::spain([2021]);
        let table = testutil::table(vec![Some(1.0); 24 * 21], Cadence::Hourly, &cal);
        let err = fit_hybrid(
            &table,
            &FeatureSpec::lags(&[24]),
            Task::DayAhead,
            &GbdtParams::default(),
            EnsembleMode::Boosted,
            48..table.len(),
            BaselineKind::ResidentialDay,
        )
        .unwrap_err();
        match err {
            Error::Horizon { lag, at } => {
                assert_eq!(lag, "1 week(s)");
                assert_eq!(at, table.timestamps[48]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_lag_baseline_rejected_for_day_ahead() {
        let cal = HolidayCalendar::spain([2021]);
        let table = testutil::table(vec![Some(1.0); 24 * 21], Cadence::Hourly, &cal);
        let err = fit_hybrid(
            &table,
            &FeatureSpec::lags(&[24]),
            Task::DayAhead,
            &GbdtParams::default(),
            EnsembleMode::Boosted,
            200..table.len(),
            BaselineKind::PersistLastStep,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
