use std::ops::Range;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::metrics::{mae, mape};
use super::report::{EvalReport, ForecastWindow, ThresholdPolicy};
use crate::data::{AlignedTable, Cadence};
use crate::error::{Error, Result};
use crate::features::Task;
use crate::strategies::Forecaster;

/// Chronological train/validation/test row ranges of an aligned table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Range<usize>,
    pub valid: Range<usize>,
    pub test: Range<usize>,
}

impl DataSplit {
    /// Splits rows `warmup..n` by `fractions` (train, validation, test).
    /// Rows before `warmup` are kept as lag history only.
    pub fn chronological(n: usize, warmup: usize, fractions: (f64, f64, f64)) -> Result<Self> {
        let (a, b, c) = fractions;
        if a <= 0.0 || b < 0.0 || c <= 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must be positive and sum to 1, got {a}/{b}/{c}"
            )));
        }
        if warmup >= n {
            return Err(Error::Span(format!("warm-up of {warmup} rows leaves nothing of {n}")));
        }
        let usable = (n - warmup) as f64;
        let t_end = warmup + (usable * a).round() as usize;
        let v_end = warmup + (usable * (a + b)).round() as usize;
        let split = Self {
            train: warmup..t_end,
            valid: t_end..v_end,
            test: v_end..n,
        };
        if split.train.is_empty() || split.test.is_empty() {
            return Err(Error::Span(format!("{n} rows are too few to split")));
        }
        Ok(split)
    }

    /// Training plus validation rows, for the final refit.
    pub fn train_and_valid(&self) -> Range<usize> {
        self.train.start..self.valid.end
    }
}

/// Scores forecasts already computed for `rows`. `predicted[i]` belongs to
/// table row `rows.start + i`.
pub fn score_predictions(
    table: &AlignedTable,
    task: Task,
    label: &str,
    rows: Range<usize>,
    predicted: &[Option<f64>],
    policy: &ThresholdPolicy,
) -> Result<EvalReport> {
    if predicted.len() != rows.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} rows",
            predicted.len(),
            rows.len()
        )));
    }
    if rows.end > table.len() {
        return Err(Error::Span(format!("rows {rows:?} exceed the table")));
    }
    if table.cadence != task.cadence() {
        return Err(Error::Data(format!(
            "{task} evaluation needs {} data, table is {}",
            task.cadence().minutes(),
            table.cadence.minutes()
        )));
    }
    let h = task.horizon();
    if rows.len() < h {
        return Err(Error::Span(format!(
            "test span of {} step(s) is shorter than the {h}-step horizon",
            rows.len()
        )));
    }
    let step = Duration::minutes(table.cadence.minutes());
    let mut windows = Vec::new();
    'windows: for i in 0..=rows.len() - h {
        let mut actual = Vec::with_capacity(h);
        let mut pred = Vec::with_capacity(h);
        for k in i..i + h {
            match (table.target[rows.start + k], predicted[k]) {
                (Some(a), Some(p)) => {
                    actual.push(a);
                    pred.push(p);
                }
                _ => continue 'windows,
            }
        }
        let window_mape = if actual.iter().any(|a| *a == 0.0) {
            None
        } else {
            Some(mape(&actual, &pred)?)
        };
        windows.push(ForecastWindow {
            issued_at: table.timestamps[rows.start + i] - step,
            horizon_steps: h,
            mae: mae(&actual, &pred)?,
            mape: window_mape,
            predicted: pred,
            actual,
        });
    }
    let mean_load = table
        .target_mean(rows.clone())
        .ok_or_else(|| Error::Span("no observed load in the test span".into()))?;
    EvalReport::from_windows(&table.consumer_id, task, label, windows, policy, mean_load)
}

/// Issues a full-horizon forecast at every step of `test` and scores each
/// window: `T - 23` overlapping windows for `T` hourly points day-ahead,
/// one per point for the 15-minute task.
///
/// Forecasters are direct (no lag shorter than the horizon), so a row's
/// forecast does not depend on which issue time requested it.
pub fn rolling_evaluate(
    forecaster: &dyn Forecaster,
    table: &AlignedTable,
    test: Range<usize>,
    policy: &ThresholdPolicy,
) -> Result<EvalReport> {
    let task = forecaster.task();
    if test.is_empty() {
        return Err(Error::Span("empty test span".into()));
    }
    let predicted = forecaster.predict_rows(table, test.clone())?;
    score_predictions(table, task, forecaster.label(), test, &predicted, policy)
}

/// Day-ahead rolling evaluation on an hourly table.
pub fn rolling_day_ahead(
    forecaster: &dyn Forecaster,
    table: &AlignedTable,
    test: Range<usize>,
    policy: &ThresholdPolicy,
) -> Result<EvalReport> {
    check(forecaster, table, Task::DayAhead, Cadence::Hourly)?;
    rolling_evaluate(forecaster, table, test, policy)
}

/// One-step-ahead rolling evaluation on a 15-minute table.
pub fn rolling_15min(
    forecaster: &dyn Forecaster,
    table: &AlignedTable,
    test: Range<usize>,
    policy: &ThresholdPolicy,
) -> Result<EvalReport> {
    check(forecaster, table, Task::QuarterHour, Cadence::QuarterHour)?;
    rolling_evaluate(forecaster, table, test, policy)
}

fn check(forecaster: &dyn Forecaster, table: &AlignedTable, task: Task, cadence: Cadence) -> Result<()> {
    if forecaster.task() != task {
        return Err(Error::Config(format!(
            "forecaster {} is trained for {}, not {task}",
            forecaster.label(),
            forecaster.task()
        )));
    }
    if table.cadence != cadence {
        return Err(Error::Data(format!(
            "{task} evaluation needs {}-minute data",
            cadence.minutes()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::HolidayCalendar;
    use crate::models::{BaselineKind, BaselineParams};
    use crate::strategies::BaselineForecaster;
    use crate::testutil;

    fn persist_day() -> BaselineForecaster {
        BaselineForecaster::new(Task::DayAhead, BaselineParams::new(BaselineKind::PersistPreviousDay)).unwrap()
    }

    #[test]
    fn window_count_is_t_minus_23() {
        let cal = HolidayCalendar::spain([2021]);
        let values: Vec<Option<f64>> = (0..24 * 5).map(|i| Some(1.0 + (i % 24) as f64)).collect();
        let table = testutil::table(values, Cadence::Hourly, &cal);
        let r = rolling_day_ahead(&persist_day(), &table, 72..120, &ThresholdPolicy::default()).unwrap();
        assert_eq!(r.windows.len(), 25);
        assert_eq!(r.score_mape, 100.0);
        assert!(r.windows.iter().all(|w| w.mape == Some(0.0)));
    }

    #[test]
    fn short_span_is_span_error() {
        let cal = HolidayCalendar::spain([2021]);
        let table = testutil::table(vec![Some(1.0); 24 * 3], Cadence::Hourly, &cal);
        let err = rolling_day_ahead(&persist_day(), &table, 48..60, &ThresholdPolicy::default());
        assert!(matches!(err, Err(Error::Span(_))));
    }

    #[test]
    fn quarter_hour_points_within_tolerance() {
        let cal = HolidayCalendar::spain([2021]);
        let table = testutil::table(vec![Some(100.0); 8], Cadence::QuarterHour, &cal);
        let preds = [Some(105.0), Some(110.0), Some(120.0), Some(130.0)];
        let r = score_predictions(&table, Task::QuarterHour, "m", 4..8, &preds, &ThresholdPolicy::default())
            .unwrap();
        assert_eq!(r.windows.len(), 4);
        assert_eq!(r.score_mape, 50.0);
        assert!((r.mae_threshold - 15.0).abs() < 1e-12);
    }

    #[test]
    fn split_fractions() {
        let s = DataSplit::chronological(1100, 100, (0.7, 0.15, 0.15)).unwrap();
        assert_eq!(s.train, 100..800);
        assert_eq!(s.valid, 800..950);
        assert_eq!(s.test, 950..1100);
        assert!(DataSplit::chronological(100, 0, (0.7, 0.2, 0.2)).is_err());
    }
}
