use chrono::{DateTime, Duration, TimeZone, Utc};

use crate::data::{align_covariates, AlignOptions, AlignedTable, Cadence, HolidayCalendar, LoadSeries, WeatherSeries};

pub fn t0() -> DateTime<Utc> {
    // Monday, 00:00 Madrid time.
    Utc.with_ymd_and_hms(2021, 1, 3, 23, 0, 0).unwrap()
}

/// Aligned table over `values` with a mild synthetic temperature.
pub fn table(values: Vec<Option<f64>>, cadence: Cadence, cal: &HolidayCalendar) -> AlignedTable {
    let load = LoadSeries::from_options("c1", t0(), cadence, values).unwrap();
    let hours = load.len() / cadence.steps_per_hour() + 2;
    let ts = (0..hours).map(|h| t0() + Duration::hours(h as i64)).collect();
    let temp = (0..hours).map(|h| 10.0 + (h % 24) as f64 / 2.0).collect();
    let hum = (0..hours).map(|h| 40.0 + (h % 7) as f64).collect();
    let weather = WeatherSeries::new("z", ts, temp, hum).unwrap();
    align_covariates(&load, &weather, cal, None, AlignOptions::default()).unwrap()
}
