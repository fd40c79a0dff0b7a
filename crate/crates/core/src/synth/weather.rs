use chrono::{DateTime, Datelike, Duration, Timelike, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{WeatherSeries, DEFAULT_TIMEZONE};
use crate::error::{Error, Result};

/// Annual plus diurnal sinusoid with AR(1) noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherConfig {
    pub mean_temp: f64,
    pub annual_amplitude: f64,
    pub diurnal_amplitude: f64,
    /// Day of year of the annual mean on the way up.
    pub annual_phase_day: f64,
    pub noise_std: f64,
    pub ar_coefficient: f64,
    pub seed: u64,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        Self {
            mean_temp: 15.0,
            annual_amplitude: 9.0,
            diurnal_amplitude: 5.0,
            annual_phase_day: 110.0,
            noise_std: 0.8,
            ar_coefficient: 0.9,
            seed: 0,
        }
    }
}

/// `hours` hourly readings from `start`.
pub fn generate_weather(
    zone_id: &str,
    start: DateTime<Utc>,
    hours: usize,
    config: &WeatherConfig,
) -> Result<WeatherSeries> {
    if !(config.ar_coefficient.abs() < 1.0) {
        return Err(Error::Config("AR coefficient must lie in (-1, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.noise_std.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let tau = std::f64::consts::TAU;
    let mut ar = 0.0;
    let mut timestamps = Vec::with_capacity(hours);
    let mut temperature = Vec::with_capacity(hours);
    let mut humidity = Vec::with_capacity(hours);
    for i in 0..hours {
        let ts = start + Duration::hours(i as i64);
        let local = ts.with_timezone(&DEFAULT_TIMEZONE);
        let doy = local.ordinal0() as f64;
        let hour = local.hour() as f64;
        ar = config.ar_coefficient * ar + normal.sample(&mut rng);
        let t = config.mean_temp
            + config.annual_amplitude * (tau * (doy - config.annual_phase_day) / 365.0).sin()
            + config.diurnal_amplitude * (tau * (hour - 9.0) / 24.0).sin()
            + ar;
        let h = 70.0 - 1.5 * (t - config.mean_temp) + 2.0 * normal.sample(&mut rng);
        timestamps.push(ts);
        temperature.push(t);
        humidity.push(h.clamp(5.0, 100.0));
    }
    WeatherSeries::new(zone_id, timestamps, temperature, humidity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summer_is_warmer_than_winter() {
        let start = super::super::default_start();
        let w = generate_weather("Z", start, 365 * 24, &WeatherConfig::default()).unwrap();
        let mean = |r: std::ops::Range<usize>| w.temperature[r.clone()].iter().sum::<f64>() / r.len() as f64;
        assert!(mean(190 * 24..220 * 24) > mean(0..30 * 24) + 10.0);
        assert!(w.humidity.iter().all(|h| (5.0..=100.0).contains(h)));
    }

    #[test]
    fn seeded() {
        let start = super::super::default_start();
        let c = WeatherConfig::default();
        assert_eq!(
            generate_weather("Z", start, 100, &c).unwrap(),
            generate_weather("Z", start, 100, &c).unwrap()
        );
    }
}
