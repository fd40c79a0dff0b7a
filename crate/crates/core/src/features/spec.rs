use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::matrix::{Column, FeatureMatrix};
use crate::classifier::ConsumerType;
use crate::data::{AlignedTable, Cadence};
use crate::error::{Error, Result};
use crate::models::{BaselineKind, BaselineParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocioField {
    Population,
    Density,
    Tsi,
    Gdhi,
}

impl SocioField {
    pub const ALL: [SocioField; 4] = [
        SocioField::Population,
        SocioField::Density,
        SocioField::Tsi,
        SocioField::Gdhi,
    ];

    fn name(self) -> &'static str {
        match self {
            SocioField::Population => "population",
            SocioField::Density => "density",
            SocioField::Tsi => "tsi",
            SocioField::Gdhi => "gdhi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureKind {
    CalendarMonth,
    CalendarWeekday,
    CalendarHour,
    HolidayFlag,
    WeatherTemp,
    WeatherHumidity,
    SocioStatic { field: SocioField },
    /// Target value `steps` grid steps earlier.
    TargetLag { steps: usize },
    /// Output of a statistical baseline evaluated from target history.
    BaselineCovariate { baseline: BaselineKind },
    /// A named extra column of the aligned table.
    Exogenous { column: String },
}

impl FeatureKind {
    fn categories(&self) -> Option<u32> {
        match self {
            FeatureKind::CalendarMonth => Some(12),
            FeatureKind::CalendarWeekday => Some(7),
            FeatureKind::CalendarHour => Some(24),
            FeatureKind::HolidayFlag => Some(2),
            _ => None,
        }
    }

    pub fn is_lag(&self) -> bool {
        matches!(self, FeatureKind::TargetLag { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    CategoricalCode,
    OneHot,
    NumericStandardized,
    NumericRaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    pub encoding: Encoding,
    /// Training range for `NumericStandardized`, filled by
    /// [`FeatureSpec::fit_standardization`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
}

impl FeatureDescriptor {
    pub fn new(name: impl Into<String>, kind: FeatureKind, encoding: Encoding) -> Self {
        Self {
            name: name.into(),
            kind,
            encoding,
            range: None,
        }
    }

    pub fn month(encoding: Encoding) -> Self {
        Self::new("month", FeatureKind::CalendarMonth, encoding)
    }

    pub fn weekday(encoding: Encoding) -> Self {
        Self::new("weekday", FeatureKind::CalendarWeekday, encoding)
    }

    pub fn hour(encoding: Encoding) -> Self {
        Self::new("hour", FeatureKind::CalendarHour, encoding)
    }

    pub fn holiday(encoding: Encoding) -> Self {
        Self::new("holiday", FeatureKind::HolidayFlag, encoding)
    }

    pub fn temperature() -> Self {
        Self::new("temperature", FeatureKind::WeatherTemp, Encoding::NumericStandardized)
    }

    pub fn humidity() -> Self {
        Self::new("humidity", FeatureKind::WeatherHumidity, Encoding::NumericStandardized)
    }

    pub fn socio(field: SocioField) -> Self {
        Self::new(field.name(), FeatureKind::SocioStatic { field }, Encoding::NumericRaw)
    }

    pub fn lag(steps: usize) -> Self {
        Self::new(format!("lag_{steps}"), FeatureKind::TargetLag { steps }, Encoding::NumericRaw)
    }

    pub fn baseline(kind: BaselineKind) -> Self {
        Self::new(
            format!("baseline_{}", kind.as_str()),
            FeatureKind::BaselineCovariate { baseline: kind },
            Encoding::NumericRaw,
        )
    }

    pub fn exogenous(column: impl Into<String>) -> Self {
        let column = column.into();
        Self::new(
            column.clone(),
            FeatureKind::Exogenous { column },
            Encoding::NumericRaw,
        )
    }

    fn output_columns(&self) -> Vec<Column> {
        match (self.encoding, self.kind.categories()) {
            (Encoding::OneHot, Some(k)) => (0..k)
                .map(|c| Column::numeric(format!("{}={c}", self.name)))
                .collect(),
            (Encoding::CategoricalCode, Some(k)) => vec![Column::categorical(&self.name, k)],
            _ => vec![Column::numeric(&self.name)],
        }
    }

    /// Lag, in steps, of the oldest target value this feature reads.
    fn max_lag(&self, cadence: Cadence) -> usize {
        match &self.kind {
            FeatureKind::TargetLag { steps } => *steps,
            FeatureKind::BaselineCovariate { baseline } => {
                BaselineParams::new(*baseline).max_lag(cadence)
            }
            _ => 0,
        }
    }

    fn raw(&self, table: &AlignedTable, row: usize) -> Option<f64> {
        Some(match &self.kind {
            FeatureKind::CalendarMonth => table.month[row] as f64,
            FeatureKind::CalendarWeekday => table.weekday[row] as f64,
            FeatureKind::CalendarHour => table.hour[row] as f64,
            FeatureKind::HolidayFlag => table.holiday_flag(row) as u8 as f64,
            FeatureKind::WeatherTemp => table.temperature[row],
            FeatureKind::WeatherHumidity => table.humidity[row],
            FeatureKind::SocioStatic { field } => {
                let s = table.socio.as_ref()?;
                match field {
                    SocioField::Population => s.population,
                    SocioField::Density => s.density,
                    SocioField::Tsi => s.tsi,
                    SocioField::Gdhi => s.gdhi,
                }
            }
            FeatureKind::TargetLag { steps } => {
                if *steps > row {
                    return None;
                }
                table.target[row - steps]?
            }
            FeatureKind::BaselineCovariate { baseline } => BaselineParams::new(*baseline)
                .evaluate(&table.target, row, table.cadence)
                .ok()?,
            FeatureKind::Exogenous { column } => table.extra_column(column)?[row],
        })
    }
}

/// Maps a value into [-1, 1] using the training range; values outside the
/// range extrapolate linearly.
pub fn standardize_weather(train_range: (f64, f64), values: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = train_range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Standardization(format!(
            "degenerate training range [{lo}, {hi}]"
        )));
    }
    Ok(values.iter().map(|v| 2.0 * (v - lo) / (hi - lo) - 1.0).collect())
}

/// Encoding family for calendar and holiday features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    /// Categorical codes.
    Tree,
    /// One-hot columns.
    NonTree,
}

/// Forecasting task; fixes cadence and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    /// Hourly cadence, 24-step horizon.
    #[serde(rename = "day-ahead")]
    DayAhead,
    /// Quarter-hour cadence, 1-step horizon.
    #[serde(rename = "15-min")]
    QuarterHour,
}

impl Task {
    pub fn cadence(self) -> Cadence {
        match self {
            Task::DayAhead => Cadence::Hourly,
            Task::QuarterHour => Cadence::QuarterHour,
        }
    }

    pub fn horizon(self) -> usize {
        match self {
            Task::DayAhead => 24,
            Task::QuarterHour => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::DayAhead => "day-ahead",
            Task::QuarterHour => "15-min",
        }
    }

    /// Default lag menu in steps.
    pub fn default_lags(self) -> Vec<usize> {
        match self {
            Task::DayAhead => vec![24, 25, 48, 168],
            Task::QuarterHour => vec![1, 2, 3, 4, 96, 672],
        }
    }

    /// Baseline used as the persistence reference.
    pub fn persistence(self) -> BaselineKind {
        match self {
            Task::DayAhead => BaselineKind::PersistPreviousDay,
            Task::QuarterHour => BaselineKind::PersistLastStep,
        }
    }

    /// Residential baseline used by the hybrid strategy.
    pub fn residential_baseline(self) -> BaselineKind {
        match self {
            Task::DayAhead => BaselineKind::ResidentialDay,
            Task::QuarterHour => BaselineKind::ResidentialQuarterHour,
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day-ahead" => Ok(Task::DayAhead),
            "15-min" => Ok(Task::QuarterHour),
            other => Err(Error::Config(format!("unknown task {other:?} (expected day-ahead or 15-min)"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub features: Vec<FeatureDescriptor>,
}

#[derive(Debug, Clone, Default)]
pub struct MatrixOptions {
    /// Drop rows without an observed target.
    pub require_target: bool,
    /// Restrict to these aligned-table rows.
    pub rows: Option<Range<usize>>,
}

impl FeatureSpec {
    pub fn new(features: Vec<FeatureDescriptor>) -> Result<Self> {
        let spec = Self { features };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lags(steps: &[usize]) -> Self {
        Self {
            features: steps.iter().map(|&s| FeatureDescriptor::lag(s)).collect(),
        }
    }

    /// Calendar, holiday and weather covariates (plus socio-economic ones for
    /// residential consumers).
    pub fn covariates(family: ModelFamily, consumer: ConsumerType) -> Self {
        let enc = match family {
            ModelFamily::Tree => Encoding::CategoricalCode,
            ModelFamily::NonTree => Encoding::OneHot,
        };
        let mut features = vec![
            FeatureDescriptor::month(enc),
            FeatureDescriptor::weekday(enc),
            FeatureDescriptor::hour(enc),
            FeatureDescriptor::holiday(enc),
            FeatureDescriptor::temperature(),
            FeatureDescriptor::humidity(),
        ];
        if consumer == ConsumerType::Residential {
            features.extend(SocioField::ALL.map(FeatureDescriptor::socio));
        }
        Self { features }
    }

    /// Default lag menu followed by the default covariates.
    pub fn default_for(task: Task, consumer: ConsumerType, family: ModelFamily) -> Self {
        Self::lags(&task.default_lags()).union(&Self::covariates(family, consumer))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.features.iter().any(|f| f.name == name)
    }

    /// `self` followed by the features of `other` not already present.
    pub fn union(&self, other: &FeatureSpec) -> FeatureSpec {
        let mut features = self.features.clone();
        for f in &other.features {
            if !self.contains(&f.name) {
                features.push(f.clone());
            }
        }
        FeatureSpec { features }
    }

    pub fn with(&self, feature: FeatureDescriptor) -> FeatureSpec {
        self.union(&FeatureSpec {
            features: vec![feature],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Config(format!("duplicate feature name {}", f.name)));
            }
            let categorical = f.kind.categories().is_some();
            let ok = match f.encoding {
                Encoding::CategoricalCode | Encoding::OneHot => categorical,
                Encoding::NumericStandardized | Encoding::NumericRaw => true,
            };
            if !ok {
                return Err(Error::Config(format!(
                    "feature {} cannot use {:?} encoding",
                    f.name, f.encoding
                )));
            }
        }
        Ok(())
    }

    /// Oldest target offset read by any feature.
    pub fn max_lag(&self, cadence: Cadence) -> usize {
        self.features
            .iter()
            .map(|f| f.max_lag(cadence))
            .max()
            .unwrap_or(0)
    }

    /// Fits the [-1, 1] standardization range of every standardized feature
    /// on `rows` of `table`.
    pub fn fit_standardization(&mut self, table: &AlignedTable, rows: Range<usize>) -> Result<()> {
        for f in &mut self.features {
            if f.encoding != Encoding::NumericStandardized {
                continue;
            }
            let (lo, hi) = rows
                .clone()
                .filter_map(|r| f.raw(table, r))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if !(lo < hi) {
                return Err(Error::Standardization(format!(
                    "feature {} is constant or absent on the training rows",
                    f.name
                )));
            }
            f.range = Some((lo, hi));
        }
        Ok(())
    }

    fn check_leakage(&self, cadence: Cadence, horizon: usize) -> Result<()> {
        for f in &self.features {
            let min_lag = match &f.kind {
                FeatureKind::TargetLag { steps } => *steps,
                FeatureKind::BaselineCovariate { baseline } => {
                    BaselineParams::new(*baseline).min_lag(cadence)
                }
                _ => continue,
            };
            if min_lag < horizon {
                return Err(Error::Config(format!(
                    "feature {} reads the target {min_lag} step(s) back, below the horizon of {horizon}",
                    f.name
                )));
            }
        }
        Ok(())
    }
}

/// Builds the training matrix: rows need an observed target and every
/// lagged value.
pub fn build_matrix(table: &AlignedTable, spec: &FeatureSpec, horizon: usize) -> Result<FeatureMatrix> {
    build_matrix_with(
        table,
        spec,
        horizon,
        &MatrixOptions {
            require_target: true,
            rows: None,
        },
    )
}

pub fn build_matrix_with(
    table: &AlignedTable,
    spec: &FeatureSpec,
    horizon: usize,
    opts: &MatrixOptions,
) -> Result<FeatureMatrix> {
    spec.validate()?;
    spec.check_leakage(table.cadence, horizon)?;
    for f in &spec.features {
        if f.encoding == Encoding::NumericStandardized && f.range.is_none() {
            return Err(Error::Config(format!(
                "feature {} has no fitted standardization range",
                f.name
            )));
        }
        if matches!(f.kind, FeatureKind::SocioStatic { .. }) && table.socio.is_none() {
            return Err(Error::Data(format!(
                "feature {} needs a socio-economic record for {}",
                f.name, table.consumer_id
            )));
        }
        if let FeatureKind::Exogenous { column } = &f.kind {
            if table.extra_column(column).is_none() {
                return Err(Error::Data(format!("table has no column {column}")));
            }
        }
    }
    let columns: Vec<Column> = spec.features.iter().flat_map(|f| f.output_columns()).collect();
    let range = opts.rows.clone().unwrap_or(0..table.len());
    let mut data = Vec::new();
    let mut timestamps = Vec::new();
    let mut rows = Vec::new();
    let mut target = Vec::new();
    let mut cells = Vec::with_capacity(columns.len());
    'rows: for r in range {
        if opts.require_target && table.target[r].is_none() {
            continue;
        }
        cells.clear();
        for f in &spec.features {
            let Some(v) = f.raw(table, r) else { continue 'rows };
            match (f.encoding, f.kind.categories()) {
                (Encoding::OneHot, Some(k)) => {
                    cells.extend((0..k).map(|c| if v as u32 == c { 1.0 } else { 0.0 }))
                }
                (Encoding::NumericStandardized, _) => {
                    let (lo, hi) = f.range.expect("checked above");
                    cells.push(2.0 * (v - lo) / (hi - lo) - 1.0);
                }
                _ => cells.push(v),
            }
        }
        data.extend_from_slice(&cells);
        timestamps.push(table.timestamps[r]);
        rows.push(r);
        target.push(table.target[r].unwrap_or(f64::NAN));
    }
    if rows.is_empty() {
        return Err(Error::EmptyMatrix(format!(
            "no row of {} has every lag of up to {} steps available",
            table.consumer_id,
            spec.max_lag(table.cadence)
        )));
    }
    FeatureMatrix::new(columns, timestamps, rows, data, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_examples() {
        let out = standardize_weather((0.0, 40.0), &[20.0, 40.0, 50.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 1.5, -1.0]);
        assert!(matches!(
            standardize_weather((5.0, 5.0), &[1.0]),
            Err(Error::Standardization(_))
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let spec = FeatureSpec::new(vec![FeatureDescriptor::lag(24), FeatureDescriptor::lag(24)]);
        assert!(spec.is_err());
    }

    #[test]
    fn one_hot_on_numeric_kind_rejected() {
        let mut f = FeatureDescriptor::temperature();
        f.encoding = Encoding::OneHot;
        assert!(FeatureSpec::new(vec![f]).is_err());
    }

    #[test]
    fn default_spec_shapes() {
        let ind = FeatureSpec::default_for(Task::DayAhead, ConsumerType::Industrial, ModelFamily::Tree);
        assert_eq!(ind.len(), 4 + 6);
        let res = FeatureSpec::default_for(Task::QuarterHour, ConsumerType::Residential, ModelFamily::Tree);
        assert_eq!(res.len(), 6 + 6 + 4);
        assert_eq!(ind.max_lag(Cadence::Hourly), 168);
    }
}
