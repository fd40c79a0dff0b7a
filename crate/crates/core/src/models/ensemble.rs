use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grower::{bin_matrix, grow_tree, GrowConfig};
use super::tree::Tree;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    /// Gradient boosting on squared loss.
    Boosted,
    /// Bootstrap-aggregated trees (random forest).
    Bagged,
}

/// Hyperparameters shared by both ensemble modes. `learning_rate` is ignored
/// when bagging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub feature_fraction: f64,
    pub row_subsample: f64,
    pub l2_leaf_reg: f64,
    pub n_bins: usize,
    /// Categories lighter than this in a node are left out of subset splits
    /// and follow the heavier child.
    #[serde(default = "default_min_category_weight")]
    pub min_category_weight: f64,
    pub seed: u64,
}

fn default_min_category_weight() -> f64 {
    100.0
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            learning_rate: 0.05,
            max_leaves: 31,
            min_samples_leaf: 20,
            feature_fraction: 1.0,
            row_subsample: 1.0,
            l2_leaf_reg: 1.0,
            n_bins: 64,
            min_category_weight: default_min_category_weight(),
            seed: 0,
        }
    }
}

impl GbdtParams {
    /// Defaults suited to bagged (random-forest) training.
    pub fn forest() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 1.0,
            max_leaves: 256,
            min_samples_leaf: 5,
            feature_fraction: 0.6,
            row_subsample: 1.0,
            l2_leaf_reg: 0.0,
            n_bins: 64,
            min_category_weight: default_min_category_weight(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_trees == 0 {
            return fail("n_trees must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return fail("learning_rate must lie in (0, 1]");
        }
        if self.max_leaves < 2 {
            return fail("max_leaves must be >= 2");
        }
        if self.min_samples_leaf == 0 {
            return fail("min_samples_leaf must be >= 1");
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return fail("feature_fraction must lie in (0, 1]");
        }
        if !(self.row_subsample > 0.0 && self.row_subsample <= 1.0) {
            return fail("row_subsample must lie in (0, 1]");
        }
        if !(self.l2_leaf_reg >= 0.0 && self.l2_leaf_reg.is_finite()) {
            return fail("l2_leaf_reg must be >= 0");
        }
        if !(self.min_category_weight >= 0.0 && self.min_category_weight.is_finite()) {
            return fail("min_category_weight must be >= 0");
        }
        if !(2..=u16::MAX as usize).contains(&self.n_bins) {
            return fail("n_bins must lie in [2, 65535]");
        }
        Ok(())
    }
}

/// Fitted tree ensemble.
///
/// Boosted: `base_score + learning_rate * sum(tree outputs)`.
/// Bagged: mean of tree outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub version: u32,
    pub mode: EnsembleMode,
    pub params: GbdtParams,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub features: Vec<String>,
    /// Training RMSE after each tree.
    #[serde(default)]
    pub training_loss: Vec<f64>,
}

fn rmse(pred: &[f64], y: &[f64]) -> f64 {
    (pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
}

pub fn fit_ensemble(
    params: &GbdtParams,
    mode: EnsembleMode,
    matrix: &FeatureMatrix,
) -> Result<TreeEnsembleModel> {
    params.validate()?;
    let n = matrix.n_rows();
    if n == 0 || n < params.min_samples_leaf {
        return Err(Error::InsufficientData(format!(
            "{n} training rows, need at least max(1, min_samples_leaf = {})",
            params.min_samples_leaf
        )));
    }
    if let Some(i) = matrix.target.iter().position(|y| !y.is_finite()) {
        return Err(Error::Data(format!("non-finite target at row {i}")));
    }
    let binned = bin_matrix(matrix, params.n_bins)?;
    let y = &matrix.target;
    let p = binned.n_features();
    let all_features: Vec<usize> = (0..p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let rows_of = |i: usize| matrix.row(i);

    let mut trees = Vec::with_capacity(params.n_trees);
    let mut training_loss = Vec::with_capacity(params.n_trees);
    let base_score;
    match mode {
        EnsembleMode::Boosted => {
            base_score = y.iter().sum::<f64>() / n as f64;
            let cfg = GrowConfig {
                max_leaves: params.max_leaves,
                min_weight_leaf: params.min_samples_leaf as f64,
                l2: params.l2_leaf_reg,
                min_category_weight: params.min_category_weight,
                per_split_fraction: None,
            };
            let mut pred = vec![base_score; n];
            let mut resid = vec![0.0; n];
            let mut weights = vec![1.0; n];
            let n_sub = ((n as f64 * params.row_subsample).round() as usize).clamp(1, n);
            let n_feat = ((p as f64 * params.feature_fraction).ceil() as usize).clamp(1, p.max(1));
            for _ in 0..params.n_trees {
                for i in 0..n {
                    resid[i] = y[i] - pred[i];
                }
                let rows: Vec<u32> = if n_sub < n {
                    weights.fill(0.0);
                    let mut r: Vec<u32> = sample(&mut rng, n, n_sub).into_iter().map(|i| i as u32).collect();
                    r.sort_unstable();
                    for &i in &r {
                        weights[i as usize] = 1.0;
                    }
                    r
                } else {
                    (0..n as u32).collect()
                };
                let allowed: Vec<usize> = if n_feat < p {
                    let mut f: Vec<usize> = sample(&mut rng, p, n_feat).into_vec();
                    f.sort_unstable();
                    f
                } else {
                    all_features.clone()
                };
                let tree = grow_tree(&binned, &resid, &weights, rows, &allowed, &cfg, &mut rng);
                for (i, pr) in pred.iter_mut().enumerate() {
                    *pr += params.learning_rate * tree.predict_row(rows_of(i));
                }
                training_loss.push(rmse(&pred, y));
                trees.push(tree);
            }
        }
        EnsembleMode::Bagged => {
            base_score = 0.0;
            let cfg = GrowConfig {
                max_leaves: params.max_leaves,
                min_weight_leaf: params.min_samples_leaf as f64,
                l2: params.l2_leaf_reg,
                min_category_weight: params.min_category_weight,
                per_split_fraction: Some(params.feature_fraction),
            };
            let draws = ((n as f64 * params.row_subsample).round() as usize).clamp(1, n);
            let mut sum = vec![0.0; n];
            let mut weights = vec![0.0; n];
            let mut avg = vec![0.0; n];
            for k in 0..params.n_trees {
                weights.fill(0.0);
                for _ in 0..draws {
                    weights[rng.random_range(0..n)] += 1.0;
                }
                let rows: Vec<u32> = (0..n as u32).filter(|&i| weights[i as usize] > 0.0).collect();
                let tree = grow_tree(&binned, y, &weights, rows, &all_features, &cfg, &mut rng);
                for i in 0..n {
                    sum[i] += tree.predict_row(rows_of(i));
                    avg[i] = sum[i] / (k + 1) as f64;
                }
                training_loss.push(rmse(&avg, y));
                trees.push(tree);
            }
        }
    }
    Ok(TreeEnsembleModel {
        version: MODEL_VERSION,
        mode,
        params: params.clone(),
        base_score,
        trees,
        features: matrix.column_names(),
        training_loss,
    })
}

impl TreeEnsembleModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.mode {
            EnsembleMode::Boosted => {
                let mut s = 0.0;
                for t in &self.trees {
                    s += t.predict_row(row);
                }
                self.base_score + self.params.learning_rate * s
            }
            EnsembleMode::Bagged => {
                let mut s = 0.0;
                for t in &self.trees {
                    s += t.predict_row(row);
                }
                s / self.trees.len() as f64
            }
        }
    }

    /// Predicts every row; the matrix columns must match the model's feature
    /// names in order.
    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_schema(&matrix.column_names())?;
        Ok((0..matrix.n_rows())
            .map(|i| self.predict_row(matrix.row(i)))
            .collect())
    }

    pub fn check_schema(&self, columns: &[String]) -> Result<()> {
        if columns.len() != self.features.len() {
            return Err(Error::Schema(format!(
                "model expects {} features, rows have {}",
                self.features.len(),
                columns.len()
            )));
        }
        for (expected, got) in self.features.iter().zip(columns) {
            if expected != got {
                return Err(Error::Schema(format!(
                    "unknown feature {got:?}, model expects {expected:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Schema("model document has no version".into()))?;
        if version != MODEL_VERSION as u64 {
            return Err(Error::Version {
                found: version as u32,
                expected: MODEL_VERSION,
            });
        }
        let model: Self = serde_json::from_value(value)?;
        model.params.validate()?;
        if model.trees.is_empty() {
            return Err(Error::Schema("model has no trees".into()));
        }
        for (k, tree) in model.trees.iter().enumerate() {
            tree.check(model.features.len())
                .map_err(|e| Error::Schema(format!("tree {k}: {e}")))?;
        }
        if !model.base_score.is_finite() {
            return Err(Error::Schema("non-finite base score".into()));
        }
        Ok(model)
    }

    /// Hex SHA-256 of the serialized model.
    pub fn fingerprint(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Convenience wrapper for `model.predict`.
pub fn predict_ensemble(model: &TreeEnsembleModel, rows: &FeatureMatrix) -> Result<Vec<f64>> {
    model.predict(rows)
}

pub fn serialize_model(model: &TreeEnsembleModel) -> Result<String> {
    model.to_json()
}

pub fn deserialize_model(text: &str) -> Result<TreeEnsembleModel> {
    TreeEnsembleModel::from_json(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Column;
    use crate::models::tree::{Node, SplitRule};

    fn step_data() -> FeatureMatrix {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let y = xs.iter().map(|&x| if x < 5.0 { 0.0 } else { 10.0 }).collect();
        FeatureMatrix::from_rows(vec![Column::numeric("x")], &rows, y).unwrap()
    }

    #[test]
    fn constant_target_is_absorbed_by_base_score() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let m = FeatureMatrix::from_rows(vec![Column::numeric("x")], &rows, vec![3.5; 20]).unwrap();
        let params = GbdtParams {
            n_trees: 1,
            learning_rate: 1.0,
            max_leaves: 2,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let model = fit_ensemble(&params, EnsembleMode::Boosted, &m).unwrap();
        assert!(model.predict(&m).unwrap().iter().all(|p| *p == 3.5));
        assert_eq!(model.training_loss, vec![0.0]);
    }

    #[test]
    fn step_function_exact_fit() {
        let m = step_data();
        let params = GbdtParams {
            n_trees: 1,
            learning_rate: 1.0,
            max_leaves: 2,
            min_samples_leaf: 1,
            l2_leaf_reg: 0.0,
            ..Default::default()
        };
        let model = fit_ensemble(&params, EnsembleMode::Boosted, &m).unwrap();
        match &model.trees[0].nodes[0] {
            Node::Split {
                rule: SplitRule::Threshold(t),
                ..
            } => assert!((4.0..=5.0).contains(t), "threshold {t}"),
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(model.predict(&m).unwrap(), m.target);
    }

    #[test]
    fn zero_trees_is_config_error() {
        let params = GbdtParams {
            n_trees: 0,
            ..Default::default()
        };
        assert!(matches!(
            fit_ensemble(&params, EnsembleMode::Boosted, &step_data()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn non_finite_feature_is_data_error() {
        let rows = vec![vec![1.0], vec![f64::NAN]];
        let m = FeatureMatrix::from_rows(vec![Column::numeric("x")], &rows, vec![1.0, 2.0]).unwrap();
        let params = GbdtParams {
            min_samples_leaf: 1,
            ..Default::default()
        };
        assert!(matches!(
            fit_ensemble(&params, EnsembleMode::Boosted, &m),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn schema_mismatch() {
        let m = step_data();
        let params = GbdtParams {
            n_trees: 2,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let model = fit_ensemble(&params, EnsembleMode::Boosted, &m).unwrap();
        let other = FeatureMatrix::from_rows(vec![Column::numeric("z")], &[vec![1.0]], vec![0.0]).unwrap();
        assert!(matches!(model.predict(&other), Err(Error::Schema(_))));
        let empty = FeatureMatrix::from_rows(vec![Column::numeric("x")], &[], vec![]).unwrap();
        assert!(model.predict(&empty).unwrap().is_empty());
    }

    #[test]
    fn categorical_split() {
        // Categories 1 and 3 are high, 0 and 2 low.
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 4) as f64]).collect();
        let y = rows.iter().map(|r| if r[0] as u32 % 2 == 1 { 5.0 } else { 1.0 }).collect();
        let m = FeatureMatrix::from_rows(vec![Column::categorical("c", 4)], &rows, y).unwrap();
        let params = GbdtParams {
            n_trees: 1,
            learning_rate: 1.0,
            max_leaves: 2,
            min_samples_leaf: 1,
            l2_leaf_reg: 0.0,
            min_category_weight: 1.0,
            ..Default::default()
        };
        let model = fit_ensemble(&params, EnsembleMode::Boosted, &m).unwrap();
        assert_eq!(model.predict(&m).unwrap(), m.target);
    }

    #[test]
    fn unseen_category_follows_the_heavier_side() {
        // Codes 0..=2 are low and common, code 3 is high and rare; code 4 never occurs.
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![if i % 10 == 0 { 3.0 } else { (i % 3) as f64 }]).collect();
        let y = rows.iter().map(|r| if r[0] == 3.0 { 9.0 } else { 1.0 }).collect();
        let m = FeatureMatrix::from_rows(vec![Column::categorical("c", 5)], &rows, y).unwrap();
        let params = GbdtParams {
            n_trees: 1,
            learning_rate: 1.0,
            max_leaves: 2,
            min_samples_leaf: 1,
            l2_leaf_reg: 0.0,
            min_category_weight: 1.0,
            ..Default::default()
        };
        let model = fit_ensemble(&params, EnsembleMode::Boosted, &m).unwrap();
        let unseen = FeatureMatrix::from_rows(vec![Column::categorical("c", 5)], &[vec![4.0]], vec![0.0]).unwrap();
        assert!((model.predict(&unseen).unwrap()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn version_and_truncation_errors() {
        let params = GbdtParams {
            n_trees: 3,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let model = fit_ensemble(&params, EnsembleMode::Boosted, &step_data()).unwrap();
        let json = model.to_json().unwrap();
        assert!(matches!(
            TreeEnsembleModel::from_json(&json[..json.len() / 2]),
            Err(Error::Json(_))
        ));
        let v0 = json.replacen("\"version\": 1", "\"version\": 0", 1);
        assert!(matches!(
            TreeEnsembleModel::from_json(&v0),
            Err(Error::Version {
                found: 0,
                expected: 1
            })
        ));
    }
}
