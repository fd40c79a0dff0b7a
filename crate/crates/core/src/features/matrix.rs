use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Number of categories for categorically coded columns.
    pub categories: Option<u32>,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            categories: None,
        }
    }

    pub fn categorical(name: impl Into<String>, categories: u32) -> Self {
        Self {
            name: name.into(),
            categories: Some(categories),
        }
    }
}

/// Dense row-major covariate matrix aligned to target timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<Column>,
    pub timestamps: Vec<DateTime<Utc>>,
    /// Source row of each matrix row in the aligned table.
    pub rows: Vec<usize>,
    data: Vec<f64>,
    /// Target in kW; NaN where the value is not (yet) known.
    pub target: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(
        columns: Vec<Column>,
        timestamps: Vec<DateTime<Utc>>,
        rows: Vec<usize>,
        data: Vec<f64>,
        target: Vec<f64>,
    ) -> Result<Self> {
        let n = target.len();
        if timestamps.len() != n || rows.len() != n || data.len() != n * columns.len() {
            return Err(Error::Data(format!(
                "matrix shape mismatch: {n} targets, {} timestamps, {} rows, {} cells for {} columns",
                timestamps.len(),
                rows.len(),
                data.len(),
                columns.len()
            )));
        }
        Ok(Self {
            columns,
            timestamps,
            rows,
            data,
            target,
        })
    }

    /// Matrix without timestamps, handy for synthetic regression problems.
    pub fn from_rows(columns: Vec<Column>, rows: &[Vec<f64>], target: Vec<f64>) -> Result<Self> {
        let n_cols = columns.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::Data(format!(
                "row has {} values for {n_cols} columns",
                bad.len()
            )));
        }
        let epoch = DateTime::<Utc>::UNIX_EPOCH;
        Self::new(
            columns,
            vec![epoch; rows.len()],
            (0..rows.len()).collect(),
            rows.concat(),
            target,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.n_cols();
        self.data[i * p + j] = v;
    }

    pub fn column_values(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Rows at the given matrix positions, in that order.
    pub fn select(&self, positions: &[usize]) -> Self {
        let p = self.n_cols();
        let mut data = Vec::with_capacity(positions.len() * p);
        for &i in positions {
            data.extend_from_slice(self.row(i));
        }
        Self {
            columns: self.columns.clone(),
            timestamps: positions.iter().map(|&i| self.timestamps[i]).collect(),
            rows: positions.iter().map(|&i| self.rows[i]).collect(),
            data,
            target: positions.iter().map(|&i| self.target[i]).collect(),
        }
    }

    /// Rows whose source table row falls in `range`.
    pub fn table_rows(&self, range: std::ops::Range<usize>) -> Self {
        let positions: Vec<usize> = (0..self.n_rows())
            .filter(|&i| range.contains(&self.rows[i]))
            .collect();
        self.select(&positions)
    }

    /// Rows with a known target.
    pub fn labelled(&self) -> Self {
        let positions: Vec<usize> = (0..self.n_rows())
            .filter(|&i| self.target[i].is_finite())
            .collect();
        self.select(&positions)
    }

    /// Drops the named columns.
    pub fn without_columns(&self, names: &[&str]) -> Self {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&j| !names.contains(&self.columns[j].name.as_str()))
            .collect();
        let mut data = Vec::with_capacity(self.n_rows() * keep.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            data.extend(keep.iter().map(|&j| row[j]));
        }
        Self {
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            timestamps: self.timestamps.clone(),
            rows: self.rows.clone(),
            data,
            target: self.target.clone(),
        }
    }
}
