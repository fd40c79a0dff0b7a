use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{ConsumerType, SplitCounts};
use crate::data::HolidayDefinition;
use crate::error::{Error, Result};
use crate::eval::ThresholdPolicy;
use crate::features::Task;
use crate::models::GbdtParams;
use crate::strategies::StrategyKind;

/// Input and output locations. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Directory of `<consumer_id>.csv` load files.
    pub load: PathBuf,
    /// Directory of `<zone_id>.csv` hourly weather files.
    pub weather: PathBuf,
    pub holidays: PathBuf,
    #[serde(default)]
    pub socio: Option<PathBuf>,
    /// `consumer_id,zone_id,cadence_min` listing.
    pub consumers: PathBuf,
    /// Optional `consumer_id,type` ground truth, used by `classify --confusion`.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    pub output: PathBuf,
}

impl Paths {
    /// The layout written by `loadcast synth`.
    pub fn corpus(dir: impl AsRef<Path>, output: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            load: dir.join("load"),
            weather: dir.join("weather"),
            holidays: dir.join("holidays.txt"),
            socio: Some(dir.join("socio.csv")),
            consumers: dir.join("consumers.csv"),
            labels: Some(dir.join("labels.csv")),
            output: output.as_ref().to_path_buf(),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.load);
        fix(&mut self.weather);
        fix(&mut self.holidays);
        fix(&mut self.consumers);
        fix(&mut self.output);
        if let Some(p) = self.socio.as_mut() {
            fix(p);
        }
        if let Some(p) = self.labels.as_mut() {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.6,
            valid: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn as_tuple(&self) -> (f64, f64, f64) {
        (self.train, self.valid, self.test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerSettings {
    /// Trials per consumer and task; 0 disables tuning.
    pub budget: usize,
    pub n_startup: usize,
    pub gamma: f64,
    pub n_candidates: usize,
}

impl Default for TunerSettings {
    fn default() -> Self {
        Self {
            budget: 0,
            n_startup: 10,
            gamma: 0.25,
            n_candidates: 24,
        }
    }
}

/// Per-consumer settings that replace the type-based defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsumerOverride {
    pub consumer_type: Option<ConsumerType>,
    pub strategy: Option<StrategyKind>,
    pub holiday_definition: Option<HolidayDefinition>,
    pub thresholds: Option<ThresholdPolicy>,
}

/// Everything `loadcast run` needs, read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default)]
    pub tuner: TunerSettings,
    #[serde(default = "default_model")]
    pub model: GbdtParams,
    /// Run feature ablation per consumer before training.
    #[serde(default)]
    pub select_features: bool,
    /// Also train and score the single-model and persistence references.
    #[serde(default = "yes")]
    pub compare: bool,
    /// Replaces the per-type threshold policy for every consumer.
    #[serde(default)]
    pub thresholds: Option<ThresholdPolicy>,
    #[serde(default = "default_splits")]
    pub classifier_splits: SplitCounts,
    #[serde(default)]
    pub overrides: BTreeMap<String, ConsumerOverride>,
}

fn default_tasks() -> Vec<Task> {
    vec![Task::DayAhead, Task::QuarterHour]
}

fn default_model() -> GbdtParams {
    GbdtParams {
        n_trees: 150,
        learning_rate: 0.08,
        max_leaves: 31,
        min_samples_leaf: 20,
        ..GbdtParams::default()
    }
}

fn default_splits() -> SplitCounts {
    SplitCounts::uniform(1)
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn new(paths: Paths) -> Self {
        Self {
            paths,
            seed: 0,
            tasks: default_tasks(),
            split: SplitFractions::default(),
            tuner: TunerSettings::default(),
            model: default_model(),
            select_features: false,
            compare: true,
            thresholds: None,
            classifier_splits: default_splits(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.paths.resolve(base);
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.split.as_tuple();
        if a <= 0.0 || b <= 0.0 || c <= 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must be positive and sum to 1, got {a}/{b}/{c}"
            )));
        }
        if self.tasks.is_empty() {
            return Err(Error::Config("no forecasting task selected".into()));
        }
        self.model.validate()?;
        if let Some(p) = &self.thresholds {
            p.validate()?;
        }
        for (id, o) in &self.overrides {
            if let Some(p) = &o.thresholds {
                p.validate().map_err(|e| Error::Config(format!("override {id}: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn override_for(&self, consumer_id: &str) -> ConsumerOverride {
        self.overrides.get(consumer_id).cloned().unwrap_or_default()
    }

    pub fn policy_for(&self, consumer_id: &str, t: ConsumerType) -> ThresholdPolicy {
        self.override_for(consumer_id)
            .thresholds
            .or(self.thresholds)
            .unwrap_or_else(|| ThresholdPolicy::for_type(t))
    }
}
