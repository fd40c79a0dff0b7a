//! Rule-based consumer classification from load-profile statistics.
//!
//! Statistics are computed on the min-max normalized series so that the
//! absolute 0.1 threshold on the hourly-profile spread is scale free.
//!
//! Rules, evaluated in order:
//! 1. `c_h < c_w / 2` and `c_sat < 2 * c_sun` gives [`ConsumerType::Industrial`].
//! 2. `(hourly_std > 0.1 and c_h < c_w)` or `c_sat > 1.5 * c_sun` gives
//!    [`ConsumerType::Commercial`].
//! 3. Everything else is [`ConsumerType::Residential`].

use std::fmt;

use chrono::{Datelike, Timelike, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ConsumerRecord, HolidayCalendar, LoadSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsumerType {
    Industrial,
    Commercial,
    Residential,
}

impl ConsumerType {
    pub const ALL: [ConsumerType; 3] = [
        ConsumerType::Industrial,
        ConsumerType::Commercial,
        ConsumerType::Residential,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConsumerType::Industrial => "industrial",
            ConsumerType::Commercial => "commercial",
            ConsumerType::Residential => "residential",
        }
    }
}

impl fmt::Display for ConsumerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ConsumerType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "industrial" | "ind" => Ok(Self::Industrial),
            "commercial" | "com" => Ok(Self::Commercial),
            "residential" | "res" => Ok(Self::Residential),
            other => Err(Error::Config(format!("unknown consumer type {other:?}"))),
        }
    }
}

/// Aggregate statistics of a min-max normalized load profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileStats {
    /// Mean on public-holiday timestamps.
    pub c_h: f64,
    /// Mean on working-day (Mon-Fri, non-holiday) timestamps.
    pub c_w: f64,
    pub c_sat: f64,
    pub c_sun: f64,
    /// Mean per local hour of day.
    pub hourly_means: [f64; 24],
    /// Population standard deviation of `hourly_means`.
    pub hourly_std: f64,
}

/// Which rule produced a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Rule 1: holiday shutdown without Saturday activity.
    HolidayShutdown,
    /// Rule 2, first clause: pronounced hourly peaks with lower holiday load.
    HourlyPeaks,
    /// Rule 2, second clause: Saturday activity well above Sunday.
    SaturdayActivity,
    Fallback,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::HolidayShutdown => "holiday-shutdown",
            Rule::HourlyPeaks => "hourly-peaks",
            Rule::SaturdayActivity => "saturday-activity",
            Rule::Fallback => "fallback",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const MIN_WEEKS: usize = 4;

/// Computes the profile statistics of `series` on its min-max normalized
/// values. Civil dates, weekdays and hours come from the calendar timezone.
pub fn profile_stats(series: &LoadSeries, cal: &HolidayCalendar) -> Result<ProfileStats> {
    let per_day = series.cadence.steps_per_day();
    if series.len() < MIN_WEEKS * 7 * per_day {
        return Err(Error::Statistic(format!(
            "{}: series covers {:.1} days, need at least {} full weeks",
            series.consumer_id,
            series.len() as f64 / per_day as f64,
            MIN_WEEKS
        )));
    }
    let (lo, hi) = (0..series.len())
        .filter_map(|i| series.get(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return Err(Error::Statistic(format!(
            "{}: no observed values",
            series.consumer_id
        )));
    }
    let range = hi - lo;
    let norm = |v: f64| if range > 0.0 { (v - lo) / range } else { 0.0 };

    #[derive(Default, Clone, Copy)]
    struct Acc(f64, usize);
    impl Acc {
        fn add(&mut self, v: f64) {
            self.0 += v;
            self.1 += 1;
        }
        fn mean(self) -> Option<f64> {
            (self.1 > 0).then(|| self.0 / self.1 as f64)
        }
    }

    let (mut hol, mut work, mut sat, mut sun) = (Acc::default(), Acc::default(), Acc::default(), Acc::default());
    let mut hours = [Acc::default(); 24];
    for i in 0..series.len() {
        let Some(v) = series.get(i) else { continue };
        let x = norm(v);
        let local = cal.local(series.timestamp(i));
        let date = local.date_naive();
        let holiday = cal.is_public_holiday(date);
        match date.weekday() {
            Weekday::Sat => sat.add(x),
            Weekday::Sun => sun.add(x),
            _ if !holiday => work.add(x),
            _ => {}
        }
        if holiday {
            hol.add(x);
        }
        hours[local.hour() as usize].add(x);
    }
    let need = |acc: Acc, what: &str| {
        acc.mean().ok_or_else(|| {
            Error::Statistic(format!(
                "{}: no {what} timestamps in span, use a longer window",
                series.consumer_id
            ))
        })
    };
    let c_h = need(hol, "holiday")?;
    let c_w = need(work, "working-day")?;
    let c_sat = need(sat, "Saturday")?;
    let c_sun = need(sun, "Sunday")?;
    let mut hourly_means = [0.0; 24];
    for (h, acc) in hours.iter().enumerate() {
        hourly_means[h] = need(*acc, &format!("hour-{h}"))?;
    }
    let mean = hourly_means.iter().sum::<f64>() / 24.0;
    let hourly_std =
        (hourly_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / 24.0).sqrt();
    Ok(ProfileStats {
        c_h,
        c_w,
        c_sat,
        c_sun,
        hourly_means,
        hourly_std,
    })
}

pub fn classify(stats: &ProfileStats) -> ConsumerType {
    classify_with_rule(stats).0
}

pub fn classify_with_rule(stats: &ProfileStats) -> (ConsumerType, Rule) {
    if stats.c_h < stats.c_w / 2.0 && stats.c_sat < 2.0 * stats.c_sun {
        return (ConsumerType::Industrial, Rule::HolidayShutdown);
    }
    if stats.hourly_std > 0.1 && stats.c_h < stats.c_w {
        return (ConsumerType::Commercial, Rule::HourlyPeaks);
    }
    if stats.c_sat > 1.5 * stats.c_sun {
        return (ConsumerType::Commercial, Rule::SaturdayActivity);
    }
    (ConsumerType::Residential, Rule::Fallback)
}

/// Counts indexed `(truth, predicted)` in [`ConsumerType::ALL`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: ConsumerType, predicted: ConsumerType) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn class_total(&self, truth: ConsumerType) -> usize {
        self.counts[truth.index()].iter().sum()
    }

    /// Fraction of `truth` subsets predicted correctly; `None` without samples.
    pub fn class_accuracy(&self, truth: ConsumerType) -> Option<f64> {
        let n = self.class_total(truth);
        (n > 0).then(|| self.counts[truth.index()][truth.index()] as f64 / n as f64)
    }

    pub fn overall_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..3).map(|i| self.counts[i][i]).sum::<usize>() as f64 / total as f64
    }

    /// CSV with one row per true class and a trailing accuracy column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("truth,industrial,commercial,residential,accuracy\n");
        for t in ConsumerType::ALL {
            let row = self.counts[t.index()];
            let acc = self
                .class_accuracy(t)
                .map(|a| format!("{a:.4}"))
                .unwrap_or_default();
            out.push_str(&format!("{t},{},{},{},{acc}\n", row[0], row[1], row[2]));
        }
        out.push_str(&format!("overall,,,,{:.4}\n", self.overall_accuracy()));
        out
    }
}

/// Number of contiguous subsets each record of a class is split into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub industrial: usize,
    pub commercial: usize,
    pub residential: usize,
}

impl SplitCounts {
    pub fn uniform(n: usize) -> Self {
        Self {
            industrial: n,
            commercial: n,
            residential: n,
        }
    }

    pub fn for_type(&self, t: ConsumerType) -> usize {
        match t {
            ConsumerType::Industrial => self.industrial,
            ConsumerType::Commercial => self.commercial,
            ConsumerType::Residential => self.residential,
        }
    }
}

/// Classifies contiguous subsets of every labelled record and tallies the
/// outcomes. Records are processed in `consumer_id` order.
pub fn evaluate_classifier(
    records: &[ConsumerRecord],
    cal: &HolidayCalendar,
    split_counts: SplitCounts,
) -> Result<ConfusionMatrix> {
    for t in ConsumerType::ALL {
        if split_counts.for_type(t) == 0 {
            return Err(Error::Config(format!("split count for {t} must be >= 1")));
        }
    }
    let mut ordered: Vec<&ConsumerRecord> = records.iter().collect();
    ordered.sort_by(|a, b| a.consumer_id.cmp(&b.consumer_id));
    let outcomes: Vec<Result<Vec<(ConsumerType, ConsumerType)>>> = ordered
        .par_iter()
        .map(|rec| {
            let truth = rec.declared_type.ok_or_else(|| {
                Error::Config(format!("{}: no declared type", rec.consumer_id))
            })?;
            let parts = split_counts.for_type(truth);
            let len = rec.load.len() / parts;
            (0..parts)
                .map(|p| {
                    let end = if p + 1 == parts { rec.load.len() } else { (p + 1) * len };
                    let subset = rec.load.slice(p * len..end);
                    let stats = profile_stats(&subset, cal).map_err(|e| {
                        Error::Statistic(format!("record {} subset {p}: {e}", rec.consumer_id))
                    })?;
                    Ok((truth, classify(&stats)))
                })
                .collect()
        })
        .collect();
    let mut matrix = ConfusionMatrix::default();
    for outcome in outcomes {
        for (truth, predicted) in outcome? {
            matrix.record(truth, predicted);
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Cadence;
    use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};

    fn stats(c_h: f64, c_w: f64, c_sat: f64, c_sun: f64, hourly_std: f64) -> ProfileStats {
        ProfileStats {
            c_h,
            c_w,
            c_sat,
            c_sun,
            hourly_means: [0.0; 24],
            hourly_std,
        }
    }

    #[test]
    fn industrial_rule() {
        assert_eq!(
            classify_with_rule(&stats(0.05, 0.5, 0.1, 0.09, 0.0)),
            (ConsumerType::Industrial, Rule::HolidayShutdown)
        );
    }

    #[test]
    fn commercial_peak_rule() {
        assert_eq!(
            classify_with_rule(&stats(0.2, 0.4, 0.3, 0.3, 0.25)),
            (ConsumerType::Commercial, Rule::HourlyPeaks)
        );
    }

    #[test]
    fn commercial_saturday_rule() {
        // Holiday load not low enough for rule 1, flat hours, busy Saturdays.
        assert_eq!(
            classify_with_rule(&stats(0.4, 0.4, 0.5, 0.3, 0.02)),
            (ConsumerType::Commercial, Rule::SaturdayActivity)
        );
    }

    #[test]
    fn residential_fallback() {
        assert_eq!(
            classify_with_rule(&stats(0.3, 0.3, 0.3, 0.3, 0.02)),
            (ConsumerType::Residential, Rule::Fallback)
        );
    }

    #[test]
    fn peaks_with_higher_holiday_load_are_not_commercial() {
        assert_eq!(
            classify(&stats(0.5, 0.4, 0.3, 0.3, 0.3)),
            ConsumerType::Residential
        );
    }

    fn t0() -> DateTime<Utc> {
        // Monday.
        Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap()
    }

    fn utc_calendar(dates: &[(u32, u32)]) -> HolidayCalendar {
        HolidayCalendar::new(
            "T",
            dates
                .iter()
                .map(|(m, d)| NaiveDate::from_ymd_opt(2021, *m, *d).unwrap()),
        )
        .with_timezone(chrono_tz::UTC)
    }

    #[test]
    fn constant_series_stats() {
        let s = LoadSeries::new("c", t0(), Cadence::Hourly, vec![7.0; 24 * 28]).unwrap();
        let st = profile_stats(&s, &utc_calendar(&[(3, 3)])).unwrap();
        assert_eq!(st.c_h, st.c_w);
        assert_eq!(st.c_sat, st.c_sun);
        assert_eq!(st.c_h, st.c_sat);
        assert_eq!(st.hourly_std, 0.0);
    }

    #[test]
    fn working_hours_only_profile() {
        let cal = utc_calendar(&[(3, 3)]);
        let values: Vec<f64> = (0..24 * 28)
            .map(|i| {
                let ts = t0() + Duration::hours(i as i64);
                let d = ts.date_naive();
                let working = d.weekday().num_days_from_monday() < 5 && !cal.is_public_holiday(d);
                if working && (8..18).contains(&ts.hour()) { 1.0 } else { 0.0 }
            })
            .collect();
        let s = LoadSeries::new("c", t0(), Cadence::Hourly, values).unwrap();
        let st = profile_stats(&s, &cal).unwrap();
        assert_eq!(st.c_h, 0.0);
        assert_eq!(st.c_sat, 0.0);
        assert_eq!(st.c_sun, 0.0);
        assert!(st.c_w > 0.0);
    }

    #[test]
    fn no_holiday_is_statistic_error() {
        let s = LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0; 24 * 28]).unwrap();
        assert!(matches!(
            profile_stats(&s, &utc_calendar(&[(6, 1)])),
            Err(Error::Statistic(_))
        ));
    }

    #[test]
    fn short_series_is_statistic_error() {
        let s = LoadSeries::new("c", t0(), Cadence::Hourly, vec![1.0; 24 * 27]).unwrap();
        assert!(profile_stats(&s, &utc_calendar(&[(3, 3)])).is_err());
    }

    #[test]
    fn confusion_counts() {
        let mut m = ConfusionMatrix::default();
        m.record(ConsumerType::Industrial, ConsumerType::Industrial);
        m.record(ConsumerType::Industrial, ConsumerType::Commercial);
        m.record(ConsumerType::Residential, ConsumerType::Residential);
        assert_eq!(m.counts[0][1], 1);
        assert_eq!(m.class_total(ConsumerType::Industrial), 2);
        assert!((m.overall_accuracy() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.class_accuracy(ConsumerType::Commercial), None);
        assert!(m.to_csv().starts_with("truth,industrial"));
    }
}
