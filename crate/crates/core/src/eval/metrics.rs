use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Metric(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Metric("empty input".into()));
    }
    Ok(())
}

/// Mean absolute percentage error in percent. Undefined when any actual is 0.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    if let Some(i) = actual.iter().position(|a| *a == 0.0) {
        return Err(Error::Metric(format!("MAPE undefined: actual[{i}] is 0")));
    }
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| ((a - p) / a).abs())
        .sum();
    Ok(100.0 * sum / actual.len() as f64)
}

/// MAPE over the points with non-zero actuals, plus the count of excluded
/// points. Fails when every actual is zero.
pub fn mape_nonzero(actual: &[f64], predicted: &[f64]) -> Result<(f64, usize)> {
    check(actual, predicted)?;
    let (sum, n) = actual
        .iter()
        .zip(predicted)
        .filter(|(a, _)| **a != 0.0)
        .fold((0.0, 0usize), |(s, n), (a, p)| (s + ((a - p) / a).abs(), n + 1));
    if n == 0 {
        return Err(Error::Metric("MAPE undefined: every actual is 0".into()));
    }
    Ok((100.0 * sum / n as f64, actual.len() - n))
}

/// Mean absolute error in kW.
pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let sum: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum();
    Ok(sum / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let sum: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    Ok((sum / actual.len() as f64).sqrt())
}

/// Percentage of `values` strictly below `threshold`; 0 for an empty slice.
pub fn quantitative_score(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let below = values.iter().filter(|v| **v < threshold).count();
    100.0 * below as f64 / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Zero actuals are skipped.
    Mape,
    Mae,
    Rmse,
}

impl Metric {
    pub fn evaluate(self, actual: &[f64], predicted: &[f64]) -> Result<f64> {
        match self {
            Metric::Mape => mape_nonzero(actual, predicted).map(|(m, _)| m),
            Metric::Mae => mae(actual, predicted),
            Metric::Rmse => rmse(actual, predicted),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Mape => "MAPE",
            Metric::Mae => "MAE",
            Metric::Rmse => "RMSE",
        }
    }
}
