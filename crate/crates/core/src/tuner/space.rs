use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::GbdtParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Domain {
    Continuous {
        lo: f64,
        hi: f64,
        #[serde(default)]
        log: bool,
    },
    Integer {
        lo: i64,
        hi: i64,
    },
    Categorical {
        choices: Vec<String>,
    },
}

impl Domain {
    /// Bounds of the internal continuous coordinate (log space for log dims).
    pub(crate) fn internal_bounds(&self) -> Option<(f64, f64)> {
        match self {
            Domain::Continuous { lo, hi, log: true } => Some((lo.ln(), hi.ln())),
            Domain::Continuous { lo, hi, log: false } => Some((*lo, *hi)),
            Domain::Integer { lo, hi } => Some((*lo as f64, *hi as f64)),
            Domain::Categorical { .. } => None,
        }
    }

    /// Maps an internal coordinate to a value inside the domain.
    pub(crate) fn from_internal(&self, u: f64) -> Value {
        match self {
            Domain::Continuous { lo, hi, log } => {
                let v = if *log { u.exp() } else { u };
                Value::Real(v.clamp(*lo, *hi))
            }
            Domain::Integer { lo, hi } => Value::Int((u.round() as i64).clamp(*lo, *hi)),
            Domain::Categorical { .. } => unreachable!("categorical dims have no coordinate"),
        }
    }

    pub(crate) fn to_internal(&self, v: &Value) -> Option<f64> {
        match (self, v) {
            (Domain::Continuous { log: true, .. }, Value::Real(x)) => Some(x.ln()),
            (Domain::Continuous { log: false, .. }, Value::Real(x)) => Some(*x),
            (Domain::Integer { .. }, Value::Int(i)) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Value {
        match self {
            Domain::Continuous { lo, hi, log } => {
                if *log {
                    Value::Real(rng.random_range(lo.ln()..=hi.ln()).exp().clamp(*lo, *hi))
                } else {
                    Value::Real(rng.random_range(*lo..=*hi))
                }
            }
            Domain::Integer { lo, hi } => Value::Int(rng.random_range(*lo..=*hi)),
            Domain::Categorical { choices } => Value::Choice(choices[rng.random_range(0..choices.len())].clone()),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Continuous { lo, hi, .. }, Value::Real(x)) => (*lo..=*hi).contains(x),
            (Domain::Integer { lo, hi }, Value::Int(i)) => (*lo..=*hi).contains(i),
            (Domain::Categorical { choices }, Value::Choice(c)) => choices.contains(c),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Choice(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(x) => Some(*x),
            Value::Choice(_) => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Choice(c) => f.write_str(c),
        }
    }
}

pub type Assignment = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
}

/// Hyperparameter domain searched by the tuner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        let s = Self { dimensions };
        s.validate()?;
        Ok(s)
    }

    pub fn continuous(mut self, name: &str, lo: f64, hi: f64, log: bool) -> Self {
        self.dimensions.push(Dimension {
            name: name.into(),
            domain: Domain::Continuous { lo, hi, log },
        });
        self
    }

    pub fn integer(mut self, name: &str, lo: i64, hi: i64) -> Self {
        self.dimensions.push(Dimension {
            name: name.into(),
            domain: Domain::Integer { lo, hi },
        });
        self
    }

    pub fn categorical(mut self, name: &str, choices: &[&str]) -> Self {
        self.dimensions.push(Dimension {
            name: name.into(),
            domain: Domain::Categorical {
                choices: choices.iter().map(|c| c.to_string()).collect(),
            },
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::Config("search space has no dimension".into()));
        }
        let mut names = std::collections::HashSet::new();
        for d in &self.dimensions {
            if !names.insert(&d.name) {
                return Err(Error::Config(format!("duplicate dimension {}", d.name)));
            }
            let ok = match &d.domain {
                Domain::Continuous { lo, hi, log } => {
                    lo.is_finite() && hi.is_finite() && lo < hi && (!log || *lo > 0.0)
                }
                Domain::Integer { lo, hi } => lo < hi,
                Domain::Categorical { choices } => !choices.is_empty(),
            };
            if !ok {
                return Err(Error::Config(format!("invalid domain for {}: {:?}", d.name, d.domain)));
            }
        }
        Ok(())
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        a.len() == self.dimensions.len()
            && self
                .dimensions
                .iter()
                .all(|d| a.get(&d.name).is_some_and(|v| d.domain.contains(v)))
    }

    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Assignment {
        self.dimensions
            .iter()
            .map(|d| (d.name.clone(), d.domain.sample_uniform(rng)))
            .collect()
    }

    /// Default GBDT space.
    pub fn gbdt_default() -> Self {
        SearchSpace { dimensions: Vec::new() }
            .integer("n_trees", 50, 800)
            .continuous("learning_rate", 0.01, 0.3, true)
            .integer("max_leaves", 4, 64)
            .integer("min_samples_leaf", 5, 100)
            .continuous("feature_fraction", 0.5, 1.0, false)
            .continuous("row_subsample", 0.5, 1.0, false)
            .continuous("l2_leaf_reg", 0.0, 10.0, false)
    }
}

/// Overrides the fields of `base` named in `a`. Unknown names are errors.
pub fn gbdt_params_from(a: &Assignment, base: &GbdtParams) -> Result<GbdtParams> {
    let mut p = base.clone();
    for (name, v) in a {
        let x = v
            .as_f64()
            .ok_or_else(|| Error::Config(format!("{name} must be numeric, got {v}")))?;
        match name.as_str() {
            "n_trees" => p.n_trees = x.round() as usize,
            "learning_rate" => p.learning_rate = x,
            "max_leaves" => p.max_leaves = x.round() as usize,
            "min_samples_leaf" => p.min_samples_leaf = x.round() as usize,
            "feature_fraction" => p.feature_fraction = x,
            "row_subsample" => p.row_subsample = x,
            "l2_leaf_reg" => p.l2_leaf_reg = x,
            "n_bins" => p.n_bins = x.round() as usize,
            other => return Err(Error::Config(format!("unknown GBDT hyperparameter {other}"))),
        }
    }
    p.validate()?;
    Ok(p)
}
