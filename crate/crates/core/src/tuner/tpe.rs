use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::space::{Assignment, Domain, SearchSpace, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub assignment: Assignment,
    /// Validation RMSE when `status` is ok.
    pub objective: Option<f64>,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpeConfig {
    /// Uniform random trials before the densities are modelled.
    pub n_startup: usize,
    /// Fraction of ok trials forming the good set.
    pub gamma: f64,
    pub n_candidates: usize,
    /// Pseudo-count added to every category.
    pub pseudocount: f64,
    pub seed: u64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            n_startup: 10,
            gamma: 0.25,
            n_candidates: 24,
            pseudocount: 1.0,
            seed: 0,
        }
    }
}

impl TpeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.n_candidates == 0 {
            return Err(Error::Config("n_candidates must be >= 1".into()));
        }
        if !(self.pseudocount > 0.0) {
            return Err(Error::Config("pseudocount must be > 0".into()));
        }
        Ok(())
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Truncated-Gaussian kernel density on `[lo, hi]` mixed with a uniform
/// prior component of weight `1 / (n + 1)`.
struct Parzen {
    lo: f64,
    hi: f64,
    centers: Vec<f64>,
    bandwidth: f64,
    /// Probability mass of each kernel inside `[lo, hi]`.
    mass: Vec<f64>,
}

impl Parzen {
    fn new(lo: f64, hi: f64, centers: Vec<f64>) -> Self {
        let n = centers.len();
        let range = hi - lo;
        let bandwidth = if n < 2 {
            range / 4.0
        } else {
            let mean = centers.iter().sum::<f64>() / n as f64;
            let var = centers.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            // Scott's rule in one dimension.
            var.sqrt() * (n as f64).powf(-0.2)
        };
        // The floor shrinks as observations accumulate; a fixed floor lets the
        // good-set density collapse onto an early cluster.
        let floor = range / (1.0 + n as f64).min(100.0);
        let bandwidth = bandwidth.clamp(floor, range);
        let mass = centers
            .iter()
            .map(|c| (normal_cdf((hi - c) / bandwidth) - normal_cdf((lo - c) / bandwidth)).max(1e-12))
            .collect();
        Self {
            lo,
            hi,
            centers,
            bandwidth,
            mass,
        }
    }

    fn weight(&self) -> f64 {
        1.0 / (self.centers.len() + 1) as f64
    }

    fn pdf(&self, x: f64) -> f64 {
        let w = self.weight();
        let norm = 1.0 / (self.bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        let kernels: f64 = self
            .centers
            .iter()
            .zip(&self.mass)
            .map(|(c, m)| norm * (-0.5 * ((x - c) / self.bandwidth).powi(2)).exp() / m)
            .sum();
        w / (self.hi - self.lo) + w * kernels
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let k = rng.random_range(0..=self.centers.len());
        if k == self.centers.len() {
            return rng.random_range(self.lo..=self.hi);
        }
        let normal = Normal::new(self.centers[k], self.bandwidth).expect("bandwidth is positive");
        for _ in 0..100 {
            let x = normal.sample(rng);
            if (self.lo..=self.hi).contains(&x) {
                return x;
            }
        }
        self.centers[k].clamp(self.lo, self.hi)
    }
}

struct CategoricalDensity {
    probs: Vec<f64>,
}

impl CategoricalDensity {
    fn new(choices: &[String], observed: &[&str], pseudocount: f64) -> Self {
        let k = choices.len() as f64;
        let total = observed.len() as f64 + k * pseudocount;
        let probs = choices
            .iter()
            .map(|c| (observed.iter().filter(|o| **o == c).count() as f64 + pseudocount) / total)
            .collect();
        Self { probs }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Splits ok trials into (good, bad) at the gamma quantile of the objective.
/// Returns `None` when every objective is equal.
fn split<'a>(ok: &[&'a Trial], gamma: f64) -> Option<(Vec<&'a Trial>, Vec<&'a Trial>)> {
    let mut sorted: Vec<&Trial> = ok.to_vec();
    sorted.sort_by(|a, b| {
        a.objective
            .unwrap()
            .total_cmp(&b.objective.unwrap())
            .then(a.index.cmp(&b.index))
    });
    let first = sorted.first()?.objective?;
    if sorted.iter().all(|t| t.objective == Some(first)) {
        return None;
    }
    let n_good = ((gamma * sorted.len() as f64).ceil() as usize).max(1);
    let cutoff = sorted[n_good - 1].objective.unwrap();
    Some(sorted.into_iter().partition(|t| t.objective.unwrap() <= cutoff))
}

/// Next assignment to evaluate.
///
/// Uniform while fewer than `n_startup` trials succeeded or when every
/// objective is equal; otherwise the candidate drawn from the good-set
/// density that maximizes the good/bad density ratio. The random stream is
/// determined by the seed and the history length.
pub fn suggest(history: &[Trial], space: &SearchSpace, config: &TpeConfig) -> Result<Assignment> {
    space.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(history.len() as u64);
    let ok: Vec<&Trial> = history
        .iter()
        .filter(|t| t.status == TrialStatus::Ok && t.objective.is_some_and(f64::is_finite))
        .collect();
    if ok.len() < config.n_startup {
        return Ok(space.sample_uniform(&mut rng));
    }
    let Some((good, bad)) = split(&ok, config.gamma) else {
        return Ok(space.sample_uniform(&mut rng));
    };
    let mut candidates: Vec<Assignment> = vec![Assignment::new(); config.n_candidates];
    let mut scores = vec![0.0; config.n_candidates];
    for dim in &space.dimensions {
        match &dim.domain {
            Domain::Categorical { choices } => {
                let obs = |set: &[&Trial]| -> Vec<String> {
                    set.iter()
                        .filter_map(|t| match t.assignment.get(&dim.name) {
                            Some(Value::Choice(c)) => Some(c.clone()),
                            _ => None,
                        })
                        .collect()
                };
                let (g_obs, b_obs) = (obs(&good), obs(&bad));
                let l = CategoricalDensity::new(
                    choices,
                    &g_obs.iter().map(String::as_str).collect::<Vec<_>>(),
                    config.pseudocount,
                );
                let g = CategoricalDensity::new(
                    choices,
                    &b_obs.iter().map(String::as_str).collect::<Vec<_>>(),
                    config.pseudocount,
                );
                for (cand, score) in candidates.iter_mut().zip(scores.iter_mut()) {
                    let i = l.sample(&mut rng);
                    *score += l.probs[i].ln() - g.probs[i].ln();
                    cand.insert(dim.name.clone(), Value::Choice(choices[i].clone()));
                }
            }
            domain => {
                let (lo, hi) = domain.internal_bounds().expect("numeric domain");
                let obs = |set: &[&Trial]| -> Vec<f64> {
                    set.iter()
                        .filter_map(|t| t.assignment.get(&dim.name).and_then(|v| domain.to_internal(v)))
                        .collect()
                };
                let l = Parzen::new(lo, hi, obs(&good));
                let g = Parzen::new(lo, hi, obs(&bad));
                for (cand, score) in candidates.iter_mut().zip(scores.iter_mut()) {
                    let u = l.sample(&mut rng);
                    let value = domain.from_internal(u);
                    // Score the value actually returned (after rounding).
                    let x = domain.to_internal(&value).expect("numeric value");
                    *score += l.pdf(x).ln() - g.pdf(x).ln();
                    cand.insert(dim.name.clone(), value);
                }
            }
        }
    }
    let best = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("n_candidates >= 1");
    Ok(candidates.swap_remove(best))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: Trial,
    pub history: Vec<Trial>,
}

impl TuneResult {
    /// Best objective among ok trials up to and including each trial.
    pub fn best_so_far(&self) -> Vec<Option<f64>> {
        let mut best: Option<f64> = None;
        self.history
            .iter()
            .map(|t| {
                if let (TrialStatus::Ok, Some(o)) = (t.status, t.objective) {
                    best = Some(best.map_or(o, |b: f64| b.min(o)));
                }
                best
            })
            .collect()
    }

    /// Trial history as CSV, one column per dimension.
    pub fn history_csv(&self, space: &SearchSpace) -> String {
        let mut out = String::from("trial,status,objective");
        for d in &space.dimensions {
            out.push(',');
            out.push_str(&d.name);
        }
        out.push('\n');
        for t in &self.history {
            out.push_str(&format!(
                "{},{},{}",
                t.index,
                match t.status {
                    TrialStatus::Ok => "ok",
                    TrialStatus::Failed => "failed",
                },
                t.objective.map(|o| o.to_string()).unwrap_or_default()
            ));
            for d in &space.dimensions {
                out.push(',');
                if let Some(v) = t.assignment.get(&d.name) {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

fn run<F, S>(mut objective: F, space: &SearchSpace, budget: usize, mut next: S) -> Result<TuneResult>
where
    F: FnMut(&Assignment) -> Result<f64>,
    S: FnMut(&[Trial]) -> Result<Assignment>,
{
    space.validate()?;
    if budget == 0 {
        return Err(Error::Config("tuning budget must be >= 1".into()));
    }
    let mut history: Vec<Trial> = Vec::with_capacity(budget);
    for index in 0..budget {
        let assignment = next(&history)?;
        let trial = match objective(&assignment) {
            Ok(v) if v.is_finite() => Trial {
                index,
                assignment,
                objective: Some(v),
                status: TrialStatus::Ok,
                message: None,
            },
            Ok(v) => Trial {
                index,
                assignment,
                objective: None,
                status: TrialStatus::Failed,
                message: Some(format!("non-finite objective {v}")),
            },
            Err(e) => Trial {
                index,
                assignment,
                objective: None,
                status: TrialStatus::Failed,
                message: Some(e.to_string()),
            },
        };
        history.push(trial);
    }
    let best = history
        .iter()
        .filter(|t| t.status == TrialStatus::Ok)
        .min_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()))
        .cloned()
        .ok_or_else(|| Error::Optimization(format!("all {budget} trials failed")))?;
    Ok(TuneResult { best, history })
}

/// Sequential TPE minimization of `objective` over `space`.
pub fn tune<F>(objective: F, space: &SearchSpace, config: &TpeConfig, budget: usize) -> Result<TuneResult>
where
    F: FnMut(&Assignment) -> Result<f64>,
{
    config.validate()?;
    run(objective, space, budget, |h| suggest(h, space, config))
}

/// Uniform random search with the same trial bookkeeping as [`tune`].
pub fn random_search<F>(objective: F, space: &SearchSpace, seed: u64, budget: usize) -> Result<TuneResult>
where
    F: FnMut(&Assignment) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run(objective, space, budget, |_| Ok(space.sample_uniform(&mut rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> SearchSpace {
        SearchSpace { dimensions: vec![] }.continuous("x", 0.0, 10.0, false)
    }

    fn x(a: &Assignment) -> f64 {
        a["x"].as_f64().unwrap()
    }

    #[test]
    fn startup_draw_is_reproducible() {
        let c = TpeConfig::default();
        assert_eq!(suggest(&[], &quad(), &c).unwrap(), suggest(&[], &quad(), &c).unwrap());
    }

    #[test]
    fn identical_objectives_fall_back_to_uniform() {
        let c = TpeConfig::default();
        let history: Vec<Trial> = (0..12)
            .map(|i| Trial {
                index: i,
                assignment: [("x".to_string(), Value::Real(i as f64 / 2.0))].into(),
                objective: Some(1.0),
                status: TrialStatus::Ok,
                message: None,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        rng.set_stream(12);
        assert_eq!(suggest(&history, &quad(), &c).unwrap(), quad().sample_uniform(&mut rng));
    }

    #[test]
    fn all_failed_is_optimization_error() {
        let r = tune(|_| Err(Error::Data("boom".into())), &quad(), &TpeConfig::default(), 3);
        assert!(matches!(r, Err(Error::Optimization(_))));
    }

    #[test]
    fn budget_one_returns_startup_trial() {
        let r = tune(|a| Ok((x(a) - 3.0).powi(2)), &quad(), &TpeConfig::default(), 1).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.best, r.history[0]);
    }

    #[test]
    fn integer_and_categorical_stay_in_domain() {
        let space = SearchSpace { dimensions: vec![] }
            .integer("k", 1, 5)
            .categorical("c", &["a", "b", "c"])
            .continuous("lr", 0.01, 0.3, true);
        let r = tune(
            |a| {
                let k = a["k"].as_f64().unwrap();
                let c = if a["c"] == Value::Choice("b".into()) { 0.0 } else { 1.0 };
                Ok((k - 2.0).abs() + c)
            },
            &space,
            &TpeConfig::default(),
            30,
        )
        .unwrap();
        assert!(r.history.iter().all(|t| space.contains(&t.assignment)));
    }
}
