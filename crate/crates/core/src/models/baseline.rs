//! Persistence and residential statistical baselines.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::data::{Cadence, LoadSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Value one step earlier.
    PersistLastStep,
    /// Value at the same clock time on the previous day.
    PersistPreviousDay,
    /// Mean of the values one day and one week earlier.
    ResidentialDay,
    /// Weighted blend of the last step, the last days and the last weeks at
    /// the same time of day.
    #[serde(rename = "residential-15min")]
    ResidentialQuarterHour,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::PersistLastStep => "persist-last-step",
            BaselineKind::PersistPreviousDay => "persist-previous-day",
            BaselineKind::ResidentialDay => "residential-day",
            BaselineKind::ResidentialQuarterHour => "residential-15min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub kind: BaselineKind,
    pub w_last: f64,
    pub w_day: f64,
    pub w_week: f64,
    pub day_lags: usize,
    pub week_lags: usize,
}

impl BaselineParams {
    pub fn new(kind: BaselineKind) -> Self {
        Self {
            kind,
            w_last: 0.6,
            w_day: 0.2,
            w_week: 0.2,
            day_lags: 4,
            week_lags: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.w_last + self.w_day + self.w_week;
        if (sum - 1.0).abs() > 1e-12 || self.w_last < 0.0 || self.w_day < 0.0 || self.w_week < 0.0 {
            return Err(Error::Config(format!(
                "baseline weights must be non-negative and sum to 1, got {sum}"
            )));
        }
        if self.kind == BaselineKind::ResidentialQuarterHour
            && (self.day_lags == 0 || self.week_lags == 0)
        {
            return Err(Error::Config("day_lags and week_lags must be >= 1".into()));
        }
        Ok(())
    }

    /// Largest lag, in steps, referenced at `cadence`.
    pub fn max_lag(&self, cadence: Cadence) -> usize {
        let day = cadence.steps_per_day();
        let week = cadence.steps_per_week();
        match self.kind {
            BaselineKind::PersistLastStep => 1,
            BaselineKind::PersistPreviousDay => day,
            BaselineKind::ResidentialDay => week,
            BaselineKind::ResidentialQuarterHour => (self.week_lags * week).max(self.day_lags * day),
        }
    }

    /// Smallest lag, in steps; a forecast horizon may not exceed it.
    pub fn min_lag(&self, cadence: Cadence) -> usize {
        match self.kind {
            BaselineKind::PersistLastStep | BaselineKind::ResidentialQuarterHour => 1,
            BaselineKind::PersistPreviousDay | BaselineKind::ResidentialDay => {
                cadence.steps_per_day()
            }
        }
    }

    /// Baseline value at grid index `idx` of `values`.
    ///
    /// `idx` may lie past the end of `values` (forecasting beyond history).
    /// On failure returns the first lag, in steps, with no observation.
    pub fn evaluate(
        &self,
        values: &[Option<f64>],
        idx: usize,
        cadence: Cadence,
    ) -> std::result::Result<f64, usize> {
        let at = |lag: usize| -> std::result::Result<f64, usize> {
            if lag > idx {
                return Err(lag);
            }
            values.get(idx - lag).copied().flatten().ok_or(lag)
        };
        let day = cadence.steps_per_day();
        let week = cadence.steps_per_week();
        match self.kind {
            BaselineKind::PersistLastStep => at(1),
            BaselineKind::PersistPreviousDay => at(day),
            BaselineKind::ResidentialDay => Ok(0.5 * (at(day)? + at(week)?)),
            BaselineKind::ResidentialQuarterHour => {
                let last = at(1)?;
                let mut days = 0.0;
                for d in 1..=self.day_lags {
                    days += at(d * day)?;
                }
                let mut weeks = 0.0;
                for w in 1..=self.week_lags {
                    weeks += at(w * week)?;
                }
                Ok(self.w_last * last
                    + self.w_day / self.day_lags as f64 * days
                    + self.w_week / self.week_lags as f64 * weeks)
            }
        }
    }
}

pub(crate) fn describe_lag(lag: usize, cadence: Cadence) -> String {
    let minutes = lag as i64 * cadence.minutes();
    if minutes % (7 * 24 * 60) == 0 {
        format!("{} week(s)", minutes / (7 * 24 * 60))
    } else if minutes % (24 * 60) == 0 {
        format!("{} day(s)", minutes / (24 * 60))
    } else {
        format!("{lag} step(s) of {} min", cadence.minutes())
    }
}

/// Baseline forecast for timestamp `at` from `history`.
pub fn predict_baseline(
    params: &BaselineParams,
    history: &LoadSeries,
    at: DateTime<Utc>,
) -> Result<f64> {
    params.validate()?;
    let offset = (at - history.start).num_minutes();
    let step = history.cadence.minutes();
    if offset < 0 || offset % step != 0 {
        return Err(Error::Data(format!(
            "{at} is not on the {step}-minute grid of the history"
        )));
    }
    let idx = (offset / step) as usize;
    params
        .evaluate(&history.options(), idx, history.cadence)
        .map_err(|lag| Error::Horizon {
            lag: describe_lag(lag, history.cadence),
            at,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 1, 4, 0, 0, 0).unwrap()
    }

    #[test]
    fn persistence_variants() {
        let vals: Vec<f64> = (0..48).map(|i| i as f64).collect();
        let s = LoadSeries::new("c", t0(), Cadence::Hourly, vals).unwrap();
        let at = t0() + Duration::hours(30);
        let last = predict_baseline(&BaselineParams::new(BaselineKind::PersistLastStep), &s, at);
        assert_eq!(last.unwrap(), 29.0);
        let day = predict_baseline(&BaselineParams::new(BaselineKind::PersistPreviousDay), &s, at);
        assert_eq!(day.unwrap(), 6.0);
    }

    #[test]
    fn forecast_past_end_of_history() {
        let s = LoadSeries::new("c", t0(), Cadence::Hourly, vec![2.0; 24]).unwrap();
        let at = t0() + Duration::hours(30);
        let p = predict_baseline(&BaselineParams::new(BaselineKind::PersistPreviousDay), &s, at);
        assert_eq!(p.unwrap(), 2.0);
    }

    #[test]
    fn missing_lag_is_horizon_error() {
        let s = LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0; 100]).unwrap();
        let err = predict_baseline(
            &BaselineParams::new(BaselineKind::ResidentialDay),
            &s,
            t0() + Duration::hours(50),
        )
        .unwrap_err();
        match err {
            Error::Horizon { lag, .. } => assert_eq!(lag, "1 week(s)"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut p = BaselineParams::new(BaselineKind::ResidentialQuarterHour);
        p.w_last = 0.7;
        assert!(p.validate().is_err());
    }
}
