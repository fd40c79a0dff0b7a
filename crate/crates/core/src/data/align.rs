use chrono::{DateTime, Datelike, Duration, Timelike, Utc};

use super::calendar::is_weekend;
use super::{
    Cadence, HolidayCalendar, HolidayDefinition, LoadSeries, SocioEconomicRecord, WeatherSeries,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct AlignOptions {
    /// Largest allowed age of the weather reading carried onto a row.
    pub tolerance: Duration,
    /// Extend the grid past the last load reading (target unknown) so that
    /// future-known covariates are available for forecasting.
    pub extend_to: Option<DateTime<Utc>>,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            tolerance: Duration::hours(3),
            extend_to: None,
        }
    }
}

/// One row per load timestamp with every future-known covariate attached.
///
/// Calendar columns are in the calendar's civil timezone: `month` is 0..12,
/// `weekday` is 0 (Monday)..7, `hour` is 0..24.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTable {
    pub consumer_id: String,
    pub cadence: Cadence,
    pub timestamps: Vec<DateTime<Utc>>,
    pub target: Vec<Option<f64>>,
    pub temperature: Vec<f64>,
    pub humidity: Vec<f64>,
    pub month: Vec<u8>,
    pub weekday: Vec<u8>,
    pub hour: Vec<u8>,
    pub public_holiday: Vec<bool>,
    pub weekend: Vec<bool>,
    /// Whether the holiday feature also flags weekends.
    pub weekend_as_holiday: bool,
    pub socio: Option<SocioEconomicRecord>,
    /// Additional named numeric columns (e.g. externally supplied covariates).
    pub extra: Vec<(String, Vec<f64>)>,
}

impl AlignedTable {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Holiday feature value under the table's weekend policy.
    pub fn holiday_flag(&self, row: usize) -> bool {
        self.is_holiday(
            row,
            if self.weekend_as_holiday {
                HolidayDefinition::PublicPlusWeekends
            } else {
                HolidayDefinition::PublicOnly
            },
        )
    }

    pub fn is_holiday(&self, row: usize, def: HolidayDefinition) -> bool {
        self.public_holiday[row]
            || (def == HolidayDefinition::PublicPlusWeekends && self.weekend[row])
    }

    pub fn extra_column(&self, name: &str) -> Option<&[f64]> {
        self.extra
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn with_extra(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() != self.len() {
            return Err(Error::Data(format!(
                "extra column {name} has {} values for {} rows",
                values.len(),
                self.len()
            )));
        }
        self.extra.retain(|(n, _)| *n != name);
        self.extra.push((name, values));
        Ok(self)
    }

    /// Mean of the observed target over `rows`.
    pub fn target_mean(&self, rows: std::ops::Range<usize>) -> Option<f64> {
        let (s, n) = self.target[rows]
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| s / n as f64)
    }

    /// Index of the first row at or after `ts`.
    pub fn row_at_or_after(&self, ts: DateTime<Utc>) -> usize {
        self.timestamps.partition_point(|t| *t < ts)
    }
}

/// Attaches weather (zero-order hold from the hourly series), calendar and
/// socio-economic covariates to every load timestamp.
pub fn align_covariates(
    load: &LoadSeries,
    weather: &WeatherSeries,
    cal: &HolidayCalendar,
    socio: Option<&SocioEconomicRecord>,
    opts: AlignOptions,
) -> Result<AlignedTable> {
    let mut timestamps: Vec<DateTime<Utc>> = load.timestamps().collect();
    let mut target = load.options();
    if let Some(end) = opts.extend_to {
        let mut ts = match timestamps.last() {
            Some(t) => *t + load.cadence.duration(),
            None => load.start,
        };
        while ts <= end {
            timestamps.push(ts);
            target.push(None);
            ts += load.cadence.duration();
        }
    }
    let n = timestamps.len();
    let mut table = AlignedTable {
        consumer_id: load.consumer_id.clone(),
        cadence: load.cadence,
        timestamps: Vec::with_capacity(n),
        target,
        temperature: Vec::with_capacity(n),
        humidity: Vec::with_capacity(n),
        month: Vec::with_capacity(n),
        weekday: Vec::with_capacity(n),
        hour: Vec::with_capacity(n),
        public_holiday: Vec::with_capacity(n),
        weekend: Vec::with_capacity(n),
        weekend_as_holiday: cal.weekend_as_holiday,
        socio: socio.cloned(),
        extra: Vec::new(),
    };
    // Weather index of the latest reading at or before the current row.
    let mut w = 0usize;
    for ts in timestamps {
        while w + 1 < weather.len() && weather.timestamps[w + 1] <= ts {
            w += 1;
        }
        if weather.is_empty() || weather.timestamps[w] > ts {
            let to = weather.timestamps.first().copied().unwrap_or(ts);
            return Err(Error::Coverage { from: ts, to });
        }
        let age = ts - weather.timestamps[w];
        if age > opts.tolerance {
            let to = weather.timestamps.get(w + 1).copied().unwrap_or(ts);
            return Err(Error::Coverage {
                from: weather.timestamps[w],
                to,
            });
        }
        let local = cal.local(ts);
        let date = local.date_naive();
        table.timestamps.push(ts);
        table.temperature.push(weather.temperature[w]);
        table.humidity.push(weather.humidity[w]);
        table.month.push(local.month0() as u8);
        table.weekday.push(local.weekday().num_days_from_monday() as u8);
        table.hour.push(local.hour() as u8);
        table.public_holiday.push(cal.is_public_holiday(date));
        table.weekend.push(is_weekend(date.weekday()));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{NaiveDate, TimeZone};

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
    }

    fn weather(hours: usize) -> WeatherSeries {
        let ts = (0..hours).map(|h| t0() + Duration::hours(h as i64)).collect();
        let temp = (0..hours).map(|h| h as f64).collect();
        WeatherSeries::new("z", ts, temp, vec![50.0; hours]).unwrap()
    }

    fn cal() -> HolidayCalendar {
        HolidayCalendar::new("ES", [NaiveDate::from_ymd_opt(2021, 1, 1).unwrap()])
            .with_timezone(chrono_tz::UTC)
    }

    #[test]
    fn hourly_one_to_one() {
        let load = LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0; 10]).unwrap();
        let t = align_covariates(&load, &weather(10), &cal(), None, AlignOptions::default())
            .unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t.temperature, (0..10).map(|h| h as f64).collect::<Vec<_>>());
    }

    #[test]
    fn quarter_hour_step_interpolation() {
        let load = LoadSeries::new("c", t0(), Cadence::QuarterHour, vec![1.0; 12]).unwrap();
        let t = align_covariates(&load, &weather(3), &cal(), None, AlignOptions::default())
            .unwrap();
        assert_eq!(t.len(), 12);
        for (i, temp) in t.temperature.iter().enumerate() {
            assert_eq!(*temp, (i / 4) as f64);
        }
    }

    #[test]
    fn holiday_covers_whole_civil_date() {
        let load = LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0; 48]).unwrap();
        let t = align_covariates(&load, &weather(48), &cal(), None, AlignOptions::default())
            .unwrap();
        assert!((0..24).all(|r| t.holiday_flag(r)));
        assert!((24..48).all(|r| !t.holiday_flag(r)));
    }

    #[test]
    fn weather_gap_beyond_tolerance() {
        let mut w = weather(10);
        w.timestamps.drain(3..8);
        w.temperature.drain(3..8);
        w.humidity.drain(3..8);
        let load = LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0; 10]).unwrap();
        let err = align_covariates(&load, &w, &cal(), None, AlignOptions::default()).unwrap_err();
        match err {
            Error::Coverage { from, to } => {
                assert_eq!(from, t0() + Duration::hours(2));
                assert_eq!(to, t0() + Duration::hours(8));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn weather_starting_late_is_a_gap() {
        let load = LoadSeries::new("c", t0() - Duration::hours(1), Cadence::Hourly, vec![1.0; 3])
            .unwrap();
        assert!(matches!(
            align_covariates(&load, &weather(5), &cal(), None, AlignOptions::default()),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn extension_adds_unknown_targets() {
        let load = LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0; 4]).unwrap();
        let opts = AlignOptions {
            extend_to: Some(t0() + Duration::hours(7)),
            ..Default::default()
        };
        let t = align_covariates(&load, &weather(8), &cal(), None, opts).unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.target[4..].iter().all(Option::is_none));
    }
}
