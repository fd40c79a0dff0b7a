use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumerForecast {
    pub consumer_id: String,
    pub timestamps: Vec<DateTime<Utc>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationForecast {
    pub location: String,
    pub consumers: Vec<String>,
    pub timestamps: Vec<DateTime<Utc>>,
    pub values: Vec<f64>,
}

/// Element-wise sum of the forecasts of every consumer at each location.
///
/// `locations` maps consumer id to location id. Output is ordered by
/// location id; consumers within a location by id.
pub fn aggregate_forecasts(
    forecasts: &[ConsumerForecast],
    locations: &HashMap<String, String>,
) -> Result<Vec<LocationForecast>> {
    let Some(first) = forecasts.first() else {
        return Ok(Vec::new());
    };
    let mut groups: BTreeMap<&str, Vec<&ConsumerForecast>> = BTreeMap::new();
    for f in forecasts {
        if f.values.len() != f.timestamps.len() {
            return Err(Error::Alignment(format!(
                "{}: {} values for {} timestamps",
                f.consumer_id,
                f.values.len(),
                f.timestamps.len()
            )));
        }
        if f.timestamps != first.timestamps {
            return Err(Error::Alignment(format!(
                "{} and {} cover different timestamps",
                first.consumer_id, f.consumer_id
            )));
        }
        let loc = locations
            .get(&f.consumer_id)
            .ok_or_else(|| Error::Alignment(format!("no location for {}", f.consumer_id)))?;
        groups.entry(loc.as_str()).or_default().push(f);
    }
    Ok(groups
        .into_iter()
        .map(|(loc, mut members)| {
            members.sort_by(|a, b| a.consumer_id.cmp(&b.consumer_id));
            let mut values = vec![0.0; first.timestamps.len()];
            for m in &members {
                for (acc, v) in values.iter_mut().zip(&m.values) {
                    *acc += v;
                }
            }
            LocationForecast {
                location: loc.to_string(),
                consumers: members.iter().map(|m| m.consumer_id.clone()).collect(),
                timestamps: first.timestamps.clone(),
                values,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn fc(id: &str, values: Vec<f64>) -> ConsumerForecast {
        let t0 = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        ConsumerForecast {
            consumer_id: id.into(),
            timestamps: (0..values.len()).map(|i| t0 + Duration::hours(i as i64)).collect(),
            values,
        }
    }

    fn locs(pairs: &[(&str, &str)]) -> HashMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn sums_per_location() {
        let out = aggregate_forecasts(
            &[fc("a", vec![1.0, 2.0, 3.0]), fc("b", vec![4.0, 5.0, 6.0])],
            &locs(&[("a", "L"), ("b", "L")]),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].values, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn single_consumer_identity() {
        let out = aggregate_forecasts(&[fc("a", vec![1.5, 2.5])], &locs(&[("a", "L")])).unwrap();
        assert_eq!(out[0].values, vec![1.5, 2.5]);
    }

    #[test]
    fn misaligned_rejected() {
        let mut b = fc("b", vec![1.0, 2.0]);
        b.timestamps[1] += Duration::hours(1);
        let err = aggregate_forecasts(&[fc("a", vec![1.0, 2.0]), b], &locs(&[("a", "L"), ("b", "L")]));
        assert!(matches!(err, Err(Error::Alignment(_))));
    }
}
