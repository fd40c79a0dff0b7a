//! Time-series and covariate data model.
//!
//! Everything downstream works on [`LoadSeries`] (uniform kW readings with a
//! missing mask) and on the [`AlignedTable`] produced by [`align_covariates`],
//! which attaches weather, calendar and socio-economic covariates to every
//! load timestamp.

mod align;
mod calendar;
mod ingest;
mod resample;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::classifier::ConsumerType;
use crate::error::{Error, Result};

pub use align::{align_covariates, AlignOptions, AlignedTable};
pub use calendar::{HolidayCalendar, HolidayDefinition, DEFAULT_TIMEZONE};
pub use ingest::{
    format_timestamp, ingest_load_csv, ingest_load_csv_with, parse_holidays, parse_load_csv, parse_socio_csv,
    parse_timestamp, parse_weather_csv, read_holidays, read_socio_csv, read_weather_csv,
    write_holidays, write_load_csv, write_socio_csv, write_weather_csv, IngestOptions,
};
pub use resample::resample_to_hourly;

/// Sampling interval of a load series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cadence {
    #[serde(rename = "15min")]
    QuarterHour,
    #[serde(rename = "60min")]
    Hourly,
}

impl Cadence {
    pub fn minutes(self) -> i64 {
        match self {
            Cadence::QuarterHour => 15,
            Cadence::Hourly => 60,
        }
    }

    pub fn duration(self) -> Duration {
        Duration::minutes(self.minutes())
    }

    pub fn steps_per_hour(self) -> usize {
        (60 / self.minutes()) as usize
    }

    pub fn steps_per_day(self) -> usize {
        24 * self.steps_per_hour()
    }

    pub fn steps_per_week(self) -> usize {
        7 * self.steps_per_day()
    }

    pub fn from_minutes(minutes: i64) -> Result<Self> {
        match minutes {
            15 => Ok(Cadence::QuarterHour),
            60 => Ok(Cadence::Hourly),
            other => Err(Error::Config(format!(
                "unsupported cadence {other} min (expected 15 or 60)"
            ))),
        }
    }
}

/// Uniformly sampled consumption readings in kW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    pub consumer_id: String,
    pub start: DateTime<Utc>,
    pub cadence: Cadence,
    values: Vec<f64>,
    missing: Vec<bool>,
    /// Number of source samples behind each value, set by resampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<Vec<u8>>,
}

impl LoadSeries {
    /// Builds a series from optional readings; `None` marks a missing slot.
    pub fn from_options(
        consumer_id: impl Into<String>,
        start: DateTime<Utc>,
        cadence: Cadence,
        readings: impl IntoIterator<Item = Option<f64>>,
    ) -> Result<Self> {
        let mut values = Vec::new();
        let mut missing = Vec::new();
        for (i, r) in readings.into_iter().enumerate() {
            match r {
                Some(v) if !v.is_finite() || v < 0.0 => {
                    return Err(Error::Data(format!(
                        "reading {i} is {v}, expected a finite value >= 0"
                    )))
                }
                Some(v) => {
                    values.push(v);
                    missing.push(false);
                }
                None => {
                    values.push(0.0);
                    missing.push(true);
                }
            }
        }
        Ok(Self {
            consumer_id: consumer_id.into(),
            start,
            cadence,
            values,
            missing,
            support: None,
        })
    }

    /// Builds a fully observed series.
    pub fn new(
        consumer_id: impl Into<String>,
        start: DateTime<Utc>,
        cadence: Cadence,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::from_options(consumer_id, start, cadence, values.into_iter().map(Some))
    }

    pub(crate) fn with_support(mut self, support: Vec<u8>) -> Self {
        debug_assert_eq!(support.len(), self.values.len());
        self.support = Some(support);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        self.start + self.cadence.duration() * i as i32
    }

    pub fn timestamps(&self) -> impl Iterator<Item = DateTime<Utc>> + '_ {
        (0..self.len()).map(|i| self.timestamp(i))
    }

    /// Last grid timestamp. Panics on an empty series.
    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.len() - 1)
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        match self.missing.get(i) {
            Some(false) => Some(self.values[i]),
            _ => None,
        }
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.missing[i]
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    pub fn support(&self) -> Option<&[u8]> {
        self.support.as_deref()
    }

    /// Readings with `None` for missing slots.
    pub fn options(&self) -> Vec<Option<f64>> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Grid index of `at`, if it lies on the grid inside the series.
    pub fn index_of(&self, at: DateTime<Utc>) -> Option<usize> {
        let offset = (at - self.start).num_minutes();
        let step = self.cadence.minutes();
        if offset < 0 || offset % step != 0 || (at - self.start).num_seconds() % 60 != 0 {
            return None;
        }
        let i = (offset / step) as usize;
        (i < self.len()).then_some(i)
    }

    pub fn mean(&self) -> Option<f64> {
        let (sum, n) = (0..self.len())
            .filter_map(|i| self.get(i))
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Multiplies every reading by `k` (k >= 0).
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= k;
        }
        out
    }

    /// Contiguous sub-series over grid indices `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            consumer_id: self.consumer_id.clone(),
            start: self.timestamp(range.start),
            cadence: self.cadence,
            values: self.values[range.clone()].to_vec(),
            missing: self.missing[range.clone()].to_vec(),
            support: self.support.as_ref().map(|s| s[range].to_vec()),
        }
    }
}

/// Hourly dry-bulb temperature and relative humidity for one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    pub zone_id: String,
    pub timestamps: Vec<DateTime<Utc>>,
    pub temperature: Vec<f64>,
    pub humidity: Vec<f64>,
}

impl WeatherSeries {
    pub fn new(
        zone_id: impl Into<String>,
        timestamps: Vec<DateTime<Utc>>,
        temperature: Vec<f64>,
        humidity: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != temperature.len() || timestamps.len() != humidity.len() {
            return Err(Error::Data("weather columns differ in length".into()));
        }
        for (i, w) in timestamps.windows(2).enumerate() {
            let step = w[1] - w[0];
            if step <= Duration::zero() {
                return Err(Error::Ordering { row: i + 2 });
            }
            if step.num_minutes() % 60 != 0 {
                return Err(Error::Data(format!(
                    "weather timestamp {} is not on the hourly grid",
                    w[1]
                )));
            }
        }
        if let Some(h) = humidity.iter().find(|h| !(0.0..=100.0).contains(*h)) {
            return Err(Error::Data(format!("humidity {h} outside [0, 100]")));
        }
        if temperature.iter().any(|t| !t.is_finite()) {
            return Err(Error::Data("non-finite temperature".into()));
        }
        Ok(Self {
            zone_id: zone_id.into(),
            timestamps,
            temperature,
            humidity,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Static socio-economic covariates of a zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocioEconomicRecord {
    pub zone_id: String,
    pub population: f64,
    pub density: f64,
    /// Territorial socio-economic index.
    pub tsi: f64,
    /// Gross disposable household income per year.
    pub gdhi: f64,
}

impl SocioEconomicRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.population > 0.0 && self.density > 0.0) {
            return Err(Error::Data(format!(
                "zone {}: population and density must be positive",
                self.zone_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerRecord {
    pub consumer_id: String,
    pub zone_id: String,
    pub declared_type: Option<ConsumerType>,
    pub load: LoadSeries,
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn index_round_trips_timestamps() {
        let s = LoadSeries::new("c", t0(), Cadence::QuarterHour, vec![1.0; 10]).unwrap();
        for i in 0..10 {
            assert_eq!(s.index_of(s.timestamp(i)), Some(i));
        }
        assert_eq!(s.index_of(t0() + Duration::minutes(7)), None);
        assert_eq!(s.index_of(t0() - Duration::minutes(15)), None);
        assert_eq!(s.index_of(s.timestamp(10)), None);
    }

    #[test]
    fn rejects_negative_readings() {
        assert!(LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn humidity_range_enforced() {
        let ts = vec![t0(), t0() + Duration::hours(1)];
        assert!(WeatherSeries::new("z", ts.clone(), vec![1.0, 2.0], vec![50.0, 101.0]).is_err());
        assert!(WeatherSeries::new("z", ts, vec![1.0, 2.0], vec![50.0, 100.0]).is_ok());
    }
}
