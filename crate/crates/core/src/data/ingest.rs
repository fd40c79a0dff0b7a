//! CSV and text-file readers and writers for load, weather, socio-economic
//! and holiday data.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

use super::{Cadence, HolidayCalendar, LoadSeries, SocioEconomicRecord, WeatherSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Largest tolerated fraction of missing grid points.
    pub max_missing_fraction: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            max_missing_fraction: 0.2,
        }
    }
}

/// Parses an ISO-8601 timestamp; a missing offset is read as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.fZ",
        "%Y-%m-%dT%H:%MZ",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(naive.and_utc());
        }
    }
    None
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<&'a str> {
    rec.get(idx).ok_or_else(|| Error::Parse {
        row,
        message: format!("missing column {name}"),
    })
}

fn parse_f64(s: &str, row: usize, name: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            message: format!("invalid {name} value {s:?}"),
        })
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            row: 0,
            message: format!("expected header {expected:?}, found {got:?}"),
        });
    }
    Ok(())
}

/// Reads a `timestamp,kw` file onto a uniform grid. The consumer id is the
/// file stem.
pub fn ingest_load_csv(path: impl AsRef<Path>, cadence: Cadence) -> Result<LoadSeries> {
    ingest_load_csv_with(path, cadence, IngestOptions::default())
}

pub fn ingest_load_csv_with(
    path: impl AsRef<Path>,
    cadence: Cadence,
    opts: IngestOptions,
) -> Result<LoadSeries> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_load_csv(open(path)?, id, cadence, opts)
}

/// Row numbers in errors count data rows from 1. An empty `kw` field marks a
/// missing reading.
pub fn parse_load_csv<R: Read>(
    reader: R,
    consumer_id: impl Into<String>,
    cadence: Cadence,
    opts: IngestOptions,
) -> Result<LoadSeries> {
    let mut rdr = csv_reader(reader);
    check_header(rdr.headers()?, &["timestamp", "kw"])?;
    let mut rows: Vec<(DateTime<Utc>, Option<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let ts_raw = field(&rec, 0, row, "timestamp")?;
        let ts = parse_timestamp(ts_raw).ok_or_else(|| Error::Parse {
            row,
            message: format!("invalid timestamp {ts_raw:?}"),
        })?;
        let kw_raw = field(&rec, 1, row, "kw")?;
        let kw = if kw_raw.is_empty() {
            None
        } else {
            let v = parse_f64(kw_raw, row, "kw")?;
            if v < 0.0 {
                return Err(Error::Parse {
                    row,
                    message: format!("negative load {v}"),
                });
            }
            Some(v)
        };
        if let Some((prev, _)) = rows.last() {
            if ts <= *prev {
                return Err(Error::Ordering { row });
            }
        }
        rows.push((ts, kw));
    }
    let Some(&(start, _)) = rows.first() else {
        return Err(Error::Parse {
            row: 1,
            message: "no data rows".into(),
        });
    };
    let step = cadence.minutes();
    let last = rows.last().unwrap().0;
    let span = (last - start).num_minutes();
    let mut grid = vec![None; (span / step) as usize + 1];
    for (i, (ts, kw)) in rows.iter().enumerate() {
        let offset = *ts - start;
        if offset.num_seconds() % (step * 60) != 0 {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("timestamp {ts} is off the {step}-minute grid"),
            });
        }
        grid[(offset.num_minutes() / step) as usize] = *kw;
    }
    let missing = grid.iter().filter(|v| v.is_none()).count();
    if missing as f64 > opts.max_missing_fraction * grid.len() as f64 {
        return Err(Error::Quality {
            missing,
            total: grid.len(),
            limit: opts.max_missing_fraction * 100.0,
        });
    }
    LoadSeries::from_options(consumer_id, start, cadence, grid)
}

/// Writes every grid slot; missing slots get an empty `kw` field.
pub fn write_load_csv(series: &LoadSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["timestamp", "kw"])?;
    for i in 0..series.len() {
        let kw = series.get(i).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([format_timestamp(series.timestamp(i)), kw])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_weather_csv(path: impl AsRef<Path>) -> Result<WeatherSeries> {
    let path = path.as_ref();
    let zone = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_weather_csv(open(path)?, zone)
}

pub fn parse_weather_csv<R: Read>(reader: R, zone_id: impl Into<String>) -> Result<WeatherSeries> {
    let mut rdr = csv_reader(reader);
    check_header(rdr.headers()?, &["timestamp", "temp_c", "humidity_pct"])?;
    let (mut ts, mut temp, mut hum) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let raw = field(&rec, 0, row, "timestamp")?;
        ts.push(parse_timestamp(raw).ok_or_else(|| Error::Parse {
            row,
            message: format!("invalid timestamp {raw:?}"),
        })?);
        temp.push(parse_f64(field(&rec, 1, row, "temp_c")?, row, "temp_c")?);
        hum.push(parse_f64(field(&rec, 2, row, "humidity_pct")?, row, "humidity_pct")?);
    }
    WeatherSeries::new(zone_id, ts, temp, hum)
}

pub fn write_weather_csv(weather: &WeatherSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["timestamp", "temp_c", "humidity_pct"])?;
    for i in 0..weather.len() {
        w.write_record([
            format_timestamp(weather.timestamps[i]),
            weather.temperature[i].to_string(),
            weather.humidity[i].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_socio_csv(path: impl AsRef<Path>) -> Result<Vec<SocioEconomicRecord>> {
    parse_socio_csv(open(path.as_ref())?)
}

pub fn parse_socio_csv<R: Read>(reader: R) -> Result<Vec<SocioEconomicRecord>> {
    let mut rdr = csv_reader(reader);
    check_header(
        rdr.headers()?,
        &["zone_id", "population", "density", "tsi", "gdhi"],
    )?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let r = SocioEconomicRecord {
            zone_id: field(&rec, 0, row, "zone_id")?.to_string(),
            population: parse_f64(field(&rec, 1, row, "population")?, row, "population")?,
            density: parse_f64(field(&rec, 2, row, "density")?, row, "density")?,
            tsi: parse_f64(field(&rec, 3, row, "tsi")?, row, "tsi")?,
            gdhi: parse_f64(field(&rec, 4, row, "gdhi")?, row, "gdhi")?,
        };
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_socio_csv(records: &[SocioEconomicRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["zone_id", "population", "density", "tsi", "gdhi"])?;
    for r in records {
        w.write_record([
            r.zone_id.clone(),
            r.population.to_string(),
            r.density.to_string(),
            r.tsi.to_string(),
            r.gdhi.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_holidays(path: impl AsRef<Path>, region: &str) -> Result<HolidayCalendar> {
    parse_holidays(BufReader::new(open(path.as_ref())?), region)
}

/// One `YYYY-MM-DD` per line; `#` starts a comment. A `# coverage: A B`
/// comment sets the covered date range explicitly.
pub fn parse_holidays<R: BufRead>(reader: R, region: &str) -> Result<HolidayCalendar> {
    let mut dates = Vec::new();
    let mut coverage = None;
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let (body, comment) = match line.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (line.as_str(), None),
        };
        if let Some(rest) = comment.and_then(|c| c.trim().strip_prefix("coverage:")) {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if let [a, b] = parts[..] {
                let parse = |s: &str| {
                    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| Error::Parse {
                        row,
                        message: format!("invalid coverage date {s:?}: {e}"),
                    })
                };
                coverage = Some((parse(a)?, parse(b)?));
            }
        }
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let date = NaiveDate::parse_from_str(body, "%Y-%m-%d").map_err(|e| Error::Parse {
            row,
            message: format!("invalid date {body:?}: {e}"),
        })?;
        if dates.contains(&date) {
            return Err(Error::Parse {
                row,
                message: format!("duplicate holiday {date}"),
            });
        }
        dates.push(date);
    }
    let cal = HolidayCalendar::new(region, dates);
    Ok(match coverage {
        Some((a, b)) => cal.with_coverage(a, b),
        None => cal,
    })
}

pub fn write_holidays(cal: &HolidayCalendar, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = create(path)?;
    let (a, b) = cal.coverage();
    let mut body = format!("# region: {}\n# coverage: {a} {b}\n", cal.region);
    for d in cal.dates() {
        body.push_str(&format!("{d}\n"));
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}
