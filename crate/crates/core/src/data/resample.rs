use chrono::{DurationRound, TimeDelta};

use super::{Cadence, LoadSeries};
use crate::error::{Error, Result};

/// Averages quarter-hour readings into hourly values.
///
/// Each hour is the mean of its available quarters; an hour with no
/// available quarter is missing. The number of quarters behind each hour is
/// recorded as the series support.
pub fn resample_to_hourly(series: &LoadSeries) -> Result<LoadSeries> {
    if series.cadence != Cadence::QuarterHour {
        return Err(Error::Config(
            "resample_to_hourly expects a 15-minute series".into(),
        ));
    }
    if series.is_empty() {
        return LoadSeries::from_options(
            series.consumer_id.clone(),
            series.start,
            Cadence::Hourly,
            std::iter::empty(),
        );
    }
    let hour = TimeDelta::hours(1);
    let start = series.start.duration_trunc(hour).expect("hour truncation");
    let last = series.end().duration_trunc(hour).expect("hour truncation");
    let n_hours = ((last - start).num_hours() + 1) as usize;
    let mut sums = vec![0.0; n_hours];
    let mut counts = vec![0u8; n_hours];
    for i in 0..series.len() {
        if let Some(v) = series.get(i) {
            let h = (series.timestamp(i) - start).num_hours() as usize;
            sums[h] += v;
            counts[h] += 1;
        }
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64));
    Ok(
        LoadSeries::from_options(series.consumer_id.clone(), start, Cadence::Hourly, values)?
            .with_support(counts),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn quarters(vals: Vec<Option<f64>>) -> LoadSeries {
        let t0 = Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap();
        LoadSeries::from_options("c", t0, Cadence::QuarterHour, vals).unwrap()
    }

    #[test]
    fn constant_quarters() {
        let h = resample_to_hourly(&quarters(vec![Some(1.0); 4])).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.get(0), Some(1.0));
        assert_eq!(h.cadence, Cadence::Hourly);
    }

    #[test]
    fn arithmetic_mean() {
        let h = resample_to_hourly(&quarters(
            [2.0, 4.0, 6.0, 8.0].into_iter().map(Some).collect(),
        ))
        .unwrap();
        assert_eq!(h.get(0), Some(5.0));
        assert_eq!(h.support(), Some(&[4u8][..]));
    }

    #[test]
    fn partial_support() {
        let h = resample_to_hourly(&quarters(vec![Some(3.0), None, None, None, Some(1.0)])).unwrap();
        assert_eq!(h.get(0), Some(3.0));
        assert_eq!(h.support().unwrap()[0], 1);
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn all_missing_hour_is_missing() {
        let mut v = vec![Some(1.0); 4];
        v.extend([None, None, None, None]);
        v.extend(vec![Some(2.0); 4]);
        let h = resample_to_hourly(&quarters(v)).unwrap();
        assert_eq!(h.get(1), None);
        assert_eq!(h.get(2), Some(2.0));
    }

    #[test]
    fn rejects_hourly_input() {
        let t0 = Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap();
        let s = LoadSeries::new("c", t0, Cadence::Hourly, vec![1.0]).unwrap();
        assert!(resample_to_hourly(&s).is_err());
    }
}
