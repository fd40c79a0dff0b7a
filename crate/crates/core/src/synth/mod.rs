//! Deterministic synthetic load profiles, weather and calendars.

mod corpus;
mod weather;

use chrono::{DateTime, Datelike, Duration, DurationRound, NaiveDate, TimeZone, Timelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use corpus::{read_corpus, write_corpus};
pub use weather::{generate_weather, WeatherConfig};

use crate::classifier::ConsumerType;
use crate::data::{Cadence, ConsumerRecord, HolidayCalendar, LoadSeries, SocioEconomicRecord, WeatherSeries, DEFAULT_TIMEZONE};
use crate::error::{Error, Result};

/// Parameters of one synthetic consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub consumer_type: ConsumerType,
    pub weeks: usize,
    pub start: DateTime<Utc>,
    pub cadence: Cadence,
    pub base_kw: f64,
    /// Day-level multipliers.
    pub weekday_level: f64,
    pub saturday_level: f64,
    pub sunday_level: f64,
    pub holiday_level: f64,
    /// Relative load per local hour of day (ignored for residential, which
    /// uses `peaks`).
    pub hourly_shape: [f64; 24],
    /// Residential daily peaks: (centre hour, amplitude, width hours).
    pub peaks: Vec<(f64, f64, f64)>,
    /// Residential weekend/holiday peak delay, hours.
    pub weekend_shift: f64,
    /// Standard deviation of the daily peak-time jitter, hours.
    pub peak_jitter: f64,
    /// Standard deviation of the log daily peak amplitude.
    pub amplitude_jitter: f64,
    /// Innovation std of the AR(1) daily log-level (occupancy drift).
    pub level_drift: f64,
    /// Stationary std, hours, of a slowly drifting shift shared by all
    /// residential peaks (schedule changes).
    pub schedule_drift: f64,
    /// Day-to-day AR(1) coefficient of the level and schedule drifts.
    pub drift_persistence: f64,
    /// kW added per degree outside the comfort band, scaled by occupancy.
    pub temp_sensitivity: f64,
    pub comfort_band: (f64, f64),
    /// Standard deviation of the multiplicative log-normal noise.
    pub noise_std: f64,
    pub seed: u64,
}

/// 00:00 local time on 2021-01-01 in the default timezone.
pub fn default_start() -> DateTime<Utc> {
    DEFAULT_TIMEZONE
        .with_ymd_and_hms(2021, 1, 1, 0, 0, 0)
        .single()
        .expect("unambiguous midnight")
        .with_timezone(&Utc)
}

impl SynthConfig {
    /// Daytime plateau on working days; near shutdown on weekends and
    /// holidays; no temperature response.
    pub fn industrial(seed: u64) -> Self {
        let mut shape = [0.35; 24];
        for h in shape.iter_mut().take(22).skip(6) {
            *h = 1.0;
        }
        Self {
            consumer_type: ConsumerType::Industrial,
            weeks: 52,
            start: default_start(),
            cadence: Cadence::QuarterHour,
            base_kw: 400.0,
            weekday_level: 1.0,
            saturday_level: 0.05,
            sunday_level: 0.05,
            holiday_level: 0.05,
            hourly_shape: shape,
            peaks: Vec::new(),
            weekend_shift: 0.0,
            peak_jitter: 0.0,
            amplitude_jitter: 0.0,
            level_drift: 0.0,
            schedule_drift: 0.0,
            drift_persistence: 0.0,
            temp_sensitivity: 0.0,
            comfort_band: (16.0, 24.0),
            noise_std: 0.05,
            seed,
        }
    }

    /// Open-hours peaks Monday to Saturday, closed Sundays and holidays,
    /// cooling and heating load.
    pub fn commercial(seed: u64) -> Self {
        let mut shape = [0.25; 24];
        for (h, v) in shape.iter_mut().enumerate() {
            *v = match h {
                8 => 0.6,
                9..=13 => 1.0,
                14..=15 => 0.8,
                16..=20 => 1.0,
                21 => 0.5,
                _ => 0.25,
            };
        }
        Self {
            consumer_type: ConsumerType::Commercial,
            weeks: 52,
            start: default_start(),
            cadence: Cadence::QuarterHour,
            base_kw: 60.0,
            weekday_level: 1.0,
            saturday_level: 0.7,
            sunday_level: 0.15,
            holiday_level: 0.15,
            hourly_shape: shape,
            peaks: Vec::new(),
            weekend_shift: 0.0,
            peak_jitter: 0.0,
            amplitude_jitter: 0.0,
            level_drift: 0.0,
            schedule_drift: 0.0,
            drift_persistence: 0.0,
            temp_sensitivity: 1.8,
            comfort_band: (16.0, 24.0),
            noise_std: 0.06,
            seed,
        }
    }

    /// Morning and evening peaks with daily jitter; weekends and holidays
    /// slightly above weekdays; mild heating and cooling response.
    pub fn residential(seed: u64) -> Self {
        Self {
            consumer_type: ConsumerType::Residential,
            weeks: 52,
            start: default_start(),
            cadence: Cadence::QuarterHour,
            base_kw: 1.2,
            weekday_level: 1.0,
            saturday_level: 1.1,
            sunday_level: 1.1,
            holiday_level: 1.15,
            hourly_shape: [0.3; 24],
            peaks: vec![(7.5, 0.6, 1.0), (14.5, 0.35, 1.0), (20.5, 1.0, 1.5)],
            weekend_shift: 1.5,
            peak_jitter: 0.6,
            amplitude_jitter: 0.2,
            level_drift: 0.03,
            schedule_drift: 0.0,
            drift_persistence: 0.99,
            temp_sensitivity: 0.04,
            comfort_band: (15.0, 25.0),
            noise_std: 0.12,
            seed,
        }
    }

    pub fn for_type(t: ConsumerType, seed: u64) -> Self {
        match t {
            ConsumerType::Industrial => Self::industrial(seed),
            ConsumerType::Commercial => Self::commercial(seed),
            ConsumerType::Residential => Self::residential(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weeks < crate::classifier::MIN_WEEKS {
            return Err(Error::Config(format!(
                "synthetic span of {} weeks is below the {}-week minimum",
                self.weeks,
                crate::classifier::MIN_WEEKS
            )));
        }
        let levels = [self.weekday_level, self.saturday_level, self.sunday_level, self.holiday_level];
        if levels.iter().any(|l| !(*l >= 0.0)) || self.hourly_shape.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("levels and shape weights must be >= 0".into()));
        }
        if !(self.base_kw > 0.0) || !(self.noise_std >= 0.0) || !(self.temp_sensitivity >= 0.0) {
            return Err(Error::Config("base_kw must be > 0; noise and sensitivity >= 0".into()));
        }
        if !(self.level_drift >= 0.0) || !(self.schedule_drift >= 0.0) || !(self.drift_persistence.abs() < 1.0) {
            return Err(Error::Config("level drift must be >= 0 with persistence in (-1, 1)".into()));
        }
        if self.peaks.iter().any(|p| !(p.1 >= 0.0 && p.2 > 0.0)) {
            return Err(Error::Config("peak amplitudes must be >= 0 and widths > 0".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        self.weeks * self.cadence.steps_per_week()
    }
}

enum DayKind {
    Weekday,
    Saturday,
    Sunday,
    Holiday,
}

/// Peak times and amplitudes for one residential day.
struct DayDraw {
    shifts: Vec<f64>,
    amplitudes: Vec<f64>,
}

/// Generates one consumer's load on `weather`'s zone.
pub fn generate(config: &SynthConfig, cal: &HolidayCalendar, weather: &WeatherSeries) -> Result<ConsumerRecord> {
    config.validate()?;
    let n = config.steps();
    let step = config.cadence.duration();
    let end = config.start + step * (n as i32 - 1);
    match (weather.timestamps.first(), weather.timestamps.last()) {
        (Some(a), Some(b)) if *a <= config.start && *b + Duration::hours(1) > end => {}
        _ => {
            return Err(Error::Coverage {
                from: config.start,
                to: end,
            })
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = LogNormal::new(0.0, config.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let jitter = Normal::new(0.0, config.peak_jitter.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let amp = LogNormal::new(0.0, config.amplitude_jitter.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let drift = Normal::new(0.0, config.level_drift).map_err(|e| Error::Config(e.to_string()))?;
    let mut log_level = 0.0;
    let mut schedule = 0.0;
    let innovation = (1.0 - config.drift_persistence.powi(2)).sqrt();
    let schedule_step = Normal::new(0.0, config.schedule_drift * innovation).map_err(|e| Error::Config(e.to_string()))?;
    let mut values = Vec::with_capacity(n);
    let mut current_day: Option<NaiveDate> = None;
    let mut draw = DayDraw {
        shifts: Vec::new(),
        amplitudes: Vec::new(),
    };
    for i in 0..n {
        let ts = config.start + step * i as i32;
        let local = cal.local(ts);
        let date = local.date_naive();
        if current_day != Some(date) {
            current_day = Some(date);
            log_level = config.drift_persistence * log_level + drift.sample(&mut rng);
            schedule = config.drift_persistence * schedule + schedule_step.sample(&mut rng);
            draw = DayDraw {
                shifts: config.peaks.iter().map(|_| schedule + jitter.sample(&mut rng)).collect(),
                amplitudes: config.peaks.iter().map(|_| amp.sample(&mut rng)).collect(),
            };
        }
        let kind = if cal.is_public_holiday(date) {
            DayKind::Holiday
        } else {
            match date.weekday() {
                chrono::Weekday::Sat => DayKind::Saturday,
                chrono::Weekday::Sun => DayKind::Sunday,
                _ => DayKind::Weekday,
            }
        };
        let level = match kind {
            DayKind::Weekday => config.weekday_level,
            DayKind::Saturday => config.saturday_level,
            DayKind::Sunday => config.sunday_level,
            DayKind::Holiday => config.holiday_level,
        };
        let hour = local.hour() as f64 + local.minute() as f64 / 60.0;
        let shape = if config.peaks.is_empty() {
            config.hourly_shape[local.hour() as usize]
        } else {
            let delay = match kind {
                DayKind::Weekday => 0.0,
                _ => config.weekend_shift,
            };
            config.hourly_shape[local.hour() as usize]
                + config
                    .peaks
                    .iter()
                    .zip(draw.shifts.iter().zip(&draw.amplitudes))
                    .map(|(&(c, a, w), (s, m))| a * m * (-0.5 * ((hour - c - delay - s) / w).powi(2)).exp())
                    .sum::<f64>()
        };
        let w = weather.timestamps.partition_point(|t| *t <= ts).saturating_sub(1);
        let t = weather.temperature[w];
        let (lo, hi) = config.comfort_band;
        let thermal = config.temp_sensitivity * ((t - hi).max(0.0) + (lo - t).max(0.0));
        let occupancy = level.min(1.0);
        let kw = (config.base_kw * level * shape + thermal * occupancy) * log_level.exp() * noise.sample(&mut rng);
        values.push(kw.max(0.0));
    }
    let load = LoadSeries::new(format!("synthetic-{}", config.seed), config.start, config.cadence, values)?;
    Ok(ConsumerRecord {
        consumer_id: load.consumer_id.clone(),
        zone_id: weather.zone_id.clone(),
        declared_type: Some(config.consumer_type),
        load,
    })
}

/// Number of consumers per type in a fleet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetCounts {
    pub industrial: usize,
    pub commercial: usize,
    pub residential: usize,
}

impl Default for FleetCounts {
    fn default() -> Self {
        Self {
            industrial: 30,
            commercial: 30,
            residential: 6,
        }
    }
}

impl FleetCounts {
    pub fn for_type(&self, t: ConsumerType) -> usize {
        match t {
            ConsumerType::Industrial => self.industrial,
            ConsumerType::Commercial => self.commercial,
            ConsumerType::Residential => self.residential,
        }
    }

    pub fn total(&self) -> usize {
        self.industrial + self.commercial + self.residential
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetConfig {
    pub counts: FleetCounts,
    pub weeks: usize,
    pub cadence: Cadence,
    pub start: DateTime<Utc>,
    pub zones: usize,
    pub seed: u64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            counts: FleetCounts::default(),
            weeks: 52,
            cadence: Cadence::QuarterHour,
            start: default_start(),
            zones: 3,
            seed: 0,
        }
    }
}

/// A labelled fleet with its weather, calendar and zone covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<ConsumerRecord>,
    pub weather: Vec<WeatherSeries>,
    pub calendar: HolidayCalendar,
    pub socio: Vec<SocioEconomicRecord>,
}

impl SynthCorpus {
    pub fn weather_for(&self, zone_id: &str) -> Option<&WeatherSeries> {
        self.weather.iter().find(|w| w.zone_id == zone_id)
    }

    pub fn socio_for(&self, zone_id: &str) -> Option<&SocioEconomicRecord> {
        self.socio.iter().find(|s| s.zone_id == zone_id)
    }
}

/// Seed of sub-stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.random()
}

fn jittered(rng: &mut ChaCha8Rng, value: f64, rel: f64) -> f64 {
    value * (1.0 + rng.random_range(-rel..=rel))
}

/// Per-consumer configuration: the type preset with seeded variation in
/// scale and levels.
pub fn fleet_member(t: ConsumerType, seed: u64, fleet: &FleetConfig) -> SynthConfig {
    let mut c = SynthConfig::for_type(t, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    c.weeks = fleet.weeks;
    c.cadence = fleet.cadence;
    c.start = fleet.start;
    let preset_base = c.base_kw;
    c.base_kw = jittered(&mut rng, c.base_kw, 0.5);
    c.temp_sensitivity *= c.base_kw / preset_base;
    match t {
        ConsumerType::Industrial => {
            let off = rng.random_range(0.03..=0.08);
            c.saturday_level = off;
            c.sunday_level = off;
            c.holiday_level = off;
        }
        ConsumerType::Commercial => {
            c.saturday_level = rng.random_range(0.55..=0.8);
            c.sunday_level = rng.random_range(0.1..=0.2);
            c.holiday_level = c.sunday_level;
            c.temp_sensitivity = jittered(&mut rng, c.temp_sensitivity, 0.3);
        }
        ConsumerType::Residential => {
            c.peak_jitter = jittered(&mut rng, c.peak_jitter, 0.3);
            c.temp_sensitivity = jittered(&mut rng, c.temp_sensitivity, 0.3);
        }
    }
    c
}

fn type_prefix(t: ConsumerType) -> &'static str {
    match t {
        ConsumerType::Industrial => "ind",
        ConsumerType::Commercial => "com",
        ConsumerType::Residential => "res",
    }
}

/// Generates `fleet.counts` consumers per type, round-robin over
/// `fleet.zones` weather zones. Consumer `k` draws from sub-stream `k` of
/// the master seed, so parallel generation is deterministic.
pub fn generate_fleet(fleet: &FleetConfig) -> Result<SynthCorpus> {
    if fleet.zones == 0 {
        return Err(Error::Config("at least one zone is required".into()));
    }
    for t in ConsumerType::ALL {
        if fleet.counts.for_type(t) == 0 {
            return Err(Error::Config(format!("fleet needs at least one {t} consumer")));
        }
    }
    let end = fleet.start + Duration::weeks(fleet.weeks as i64);
    let first_year = DEFAULT_TIMEZONE.from_utc_datetime(&fleet.start.naive_utc()).year();
    let last_year = DEFAULT_TIMEZONE.from_utc_datetime(&end.naive_utc()).year();
    let calendar = HolidayCalendar::spain(first_year..=last_year + 1);
    let hours = (end - fleet.start).num_hours() as usize + 48;
    let weather_start = fleet
        .start
        .duration_trunc(Duration::hours(1))
        .map_err(|e| Error::Config(e.to_string()))?;
    let weather: Vec<WeatherSeries> = (0..fleet.zones)
        .map(|z| {
            let cfg = WeatherConfig {
                seed: derive_seed(fleet.seed, 1_000_000 + z as u64),
                mean_temp: 15.0 + z as f64,
                ..Default::default()
            };
            generate_weather(&format!("Z{}", z + 1), weather_start, hours, &cfg)
        })
        .collect::<Result<_>>()?;
    let socio = (0..fleet.zones)
        .map(|z| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(fleet.seed, 2_000_000 + z as u64));
            SocioEconomicRecord {
                zone_id: format!("Z{}", z + 1),
                population: rng.random_range(5_000.0..200_000.0f64).round(),
                density: rng.random_range(50.0..5_000.0f64).round(),
                tsi: rng.random_range(80.0..120.0f64),
                gdhi: rng.random_range(12_000.0..25_000.0f64).round(),
            }
        })
        .collect();
    let mut members = Vec::new();
    for t in ConsumerType::ALL {
        for i in 0..fleet.counts.for_type(t) {
            members.push((t, i));
        }
    }
    let records = members
        .par_iter()
        .enumerate()
        .map(|(k, &(t, i))| {
            let config = fleet_member(t, derive_seed(fleet.seed, k as u64), fleet);
            let zone = &weather[k % fleet.zones];
            let mut rec = generate(&config, &calendar, zone)?;
            rec.consumer_id = format!("{}-{:03}", type_prefix(t), i + 1);
            rec.load.consumer_id = rec.consumer_id.clone();
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthCorpus {
        records,
        weather,
        calendar,
        socio,
    })
}
