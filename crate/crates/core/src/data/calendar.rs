use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, NaiveDate, Utc, Weekday};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TIMEZONE: Tz = chrono_tz::Europe::Madrid;

/// Which days count as "holiday" when a consumer's load is partitioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HolidayDefinition {
    /// Public holidays only.
    #[serde(rename = "ph")]
    PublicOnly,
    /// Public holidays plus Saturdays and Sundays.
    #[serde(rename = "ph+we")]
    PublicPlusWeekends,
}

impl std::str::FromStr for HolidayDefinition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ph" => Ok(Self::PublicOnly),
            "ph+we" => Ok(Self::PublicPlusWeekends),
            other => Err(Error::Config(format!(
                "unknown holiday definition {other:?} (expected ph or ph+we)"
            ))),
        }
    }
}

impl std::fmt::Display for HolidayDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PublicOnly => "ph",
            Self::PublicPlusWeekends => "ph+we",
        })
    }
}

/// Public-holiday dates for one region, evaluated in a fixed civil timezone.
#[derive(Debug, Clone, PartialEq)]
pub struct HolidayCalendar {
    dates: BTreeSet<NaiveDate>,
    pub region: String,
    /// Whether the holiday-flag feature also marks weekends.
    pub weekend_as_holiday: bool,
    pub timezone: Tz,
    coverage: (NaiveDate, NaiveDate),
}

impl HolidayCalendar {
    /// Coverage defaults to the whole calendar years spanned by `dates`.
    pub fn new(region: impl Into<String>, dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        let dates: BTreeSet<NaiveDate> = dates.into_iter().collect();
        let coverage = match (dates.first(), dates.last()) {
            (Some(a), Some(b)) => (
                NaiveDate::from_ymd_opt(a.year(), 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(b.year(), 12, 31).unwrap(),
            ),
            _ => (NaiveDate::MIN, NaiveDate::MAX),
        };
        Self {
            dates,
            region: region.into(),
            weekend_as_holiday: false,
            timezone: DEFAULT_TIMEZONE,
            coverage,
        }
    }

    pub fn with_timezone(mut self, tz: Tz) -> Self {
        self.timezone = tz;
        self
    }

    pub fn with_weekend_as_holiday(mut self, flag: bool) -> Self {
        self.weekend_as_holiday = flag;
        self
    }

    pub fn with_coverage(mut self, first: NaiveDate, last: NaiveDate) -> Self {
        self.coverage = (first, last);
        self
    }

    pub fn coverage(&self) -> (NaiveDate, NaiveDate) {
        self.coverage
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.dates.iter().copied()
    }

    pub fn local(&self, ts: DateTime<Utc>) -> DateTime<Tz> {
        ts.with_timezone(&self.timezone)
    }

    pub fn civil_date(&self, ts: DateTime<Utc>) -> NaiveDate {
        self.local(ts).date_naive()
    }

    pub fn is_public_holiday(&self, date: NaiveDate) -> bool {
        self.dates.contains(&date)
    }

    pub fn covers(&self, date: NaiveDate) -> bool {
        (self.coverage.0..=self.coverage.1).contains(&date)
    }

    /// Holiday flag under the calendar's own weekend policy.
    pub fn holiday_flag(&self, ts: DateTime<Utc>) -> bool {
        let def = if self.weekend_as_holiday {
            HolidayDefinition::PublicPlusWeekends
        } else {
            HolidayDefinition::PublicOnly
        };
        self.is_holiday(ts, def)
    }

    pub fn is_holiday(&self, ts: DateTime<Utc>, def: HolidayDefinition) -> bool {
        let date = self.civil_date(ts);
        self.is_public_holiday(date)
            || (def == HolidayDefinition::PublicPlusWeekends && is_weekend(date.weekday()))
    }

    /// Like [`is_holiday`](Self::is_holiday) but fails outside calendar coverage.
    pub fn try_is_holiday(&self, ts: DateTime<Utc>, def: HolidayDefinition) -> Result<bool> {
        let date = self.civil_date(ts);
        if !self.covers(date) {
            return Err(Error::Calendar(format!(
                "{date} outside calendar coverage {}..={}",
                self.coverage.0, self.coverage.1
            )));
        }
        Ok(self.is_holiday(ts, def))
    }

    /// Spanish national public holidays plus Catalan Easter Monday.
    pub fn spain(years: impl IntoIterator<Item = i32>) -> Self {
        let mut dates = Vec::new();
        for y in years {
            for (m, d) in [
                (1, 1),
                (1, 6),
                (5, 1),
                (8, 15),
                (10, 12),
                (11, 1),
                (12, 6),
                (12, 8),
                (12, 25),
            ] {
                dates.push(NaiveDate::from_ymd_opt(y, m, d).unwrap());
            }
            let easter = easter_sunday(y);
            dates.push(easter - chrono::Duration::days(2));
            dates.push(easter + chrono::Duration::days(1));
        }
        Self::new("ES", dates)
    }
}

pub(crate) fn is_weekend(wd: Weekday) -> bool {
    matches!(wd, Weekday::Sat | Weekday::Sun)
}

/// Gregorian Easter Sunday (anonymous Gregorian algorithm).
pub fn easter_sunday(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn easter_dates() {
        assert_eq!(easter_sunday(2021), NaiveDate::from_ymd_opt(2021, 4, 4).unwrap());
        assert_eq!(easter_sunday(2022), NaiveDate::from_ymd_opt(2022, 4, 17).unwrap());
        assert_eq!(easter_sunday(2024), NaiveDate::from_ymd_opt(2024, 3, 31).unwrap());
    }

    #[test]
    fn civil_date_uses_local_time() {
        let cal = HolidayCalendar::spain([2021]);
        // 23:30 UTC on Dec 31 is already Jan 1 in Madrid.
        let ts = Utc.with_ymd_and_hms(2020, 12, 31, 23, 30, 0).unwrap();
        assert!(cal.is_holiday(ts, HolidayDefinition::PublicOnly));
    }

    #[test]
    fn weekends_only_under_ph_we() {
        let cal = HolidayCalendar::spain([2021]);
        let sat = Utc.with_ymd_and_hms(2021, 1, 9, 12, 0, 0).unwrap();
        assert!(!cal.is_holiday(sat, HolidayDefinition::PublicOnly));
        assert!(cal.is_holiday(sat, HolidayDefinition::PublicPlusWeekends));
        let good_friday = Utc.with_ymd_and_hms(2021, 4, 2, 10, 0, 0).unwrap();
        assert!(cal.is_holiday(good_friday, HolidayDefinition::PublicOnly));
    }

    #[test]
    fn coverage_checked() {
        let cal = HolidayCalendar::spain([2021]);
        let ts = Utc.with_ymd_and_hms(2022, 3, 1, 0, 0, 0).unwrap();
        assert!(matches!(
            cal.try_is_holiday(ts, HolidayDefinition::PublicOnly),
            Err(Error::Calendar(_))
        ));
    }
}
