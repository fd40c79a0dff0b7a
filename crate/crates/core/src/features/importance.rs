use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::eval::Metric;
use crate::models::TreeEnsembleModel;

/// Anything that predicts one value per matrix row.
pub trait Predictor {
    fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>>;
}

impl Predictor for TreeEnsembleModel {
    fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        TreeEnsembleModel::predict(self, matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean increase of the metric when the column is shuffled.
    pub importance: f64,
}

/// Permutation importance of every column of `matrix` (labelled rows only).
///
/// Each repeat shuffles one column with its own seeded stream, so results
/// depend only on `seed`.
pub fn permutation_importance(
    model: &dyn Predictor,
    matrix: &FeatureMatrix,
    metric: Metric,
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let matrix = matrix.labelled();
    if matrix.n_rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "permutation importance needs at least 2 labelled rows, got {}",
            matrix.n_rows()
        )));
    }
    let reference = metric.evaluate(&matrix.target, &model.predict(&matrix)?)?;
    let mut out = Vec::with_capacity(matrix.n_cols());
    for j in 0..matrix.n_cols() {
        let original = matrix.column_values(j);
        let mut shuffled = matrix.clone();
        let mut total = 0.0;
        for r in 0..repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((j * repeats + r) as u64);
            let mut column = original.clone();
            column.shuffle(&mut rng);
            for (i, v) in column.iter().enumerate() {
                shuffled.set(i, j, *v);
            }
            total += metric.evaluate(&matrix.target, &model.predict(&shuffled)?)? - reference;
        }
        out.push(FeatureImportance {
            feature: matrix.columns[j].name.clone(),
            importance: total / repeats as f64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Column;
    use crate::models::{fit_ensemble, EnsembleMode, GbdtParams};

    fn data() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 20) as f64, ((i * 7) % 13) as f64]).collect();
        let target = rows.iter().map(|r| 3.0 * r[0] + 1.0).collect();
        FeatureMatrix::from_rows(vec![Column::numeric("x"), Column::numeric("z")], &rows, target).unwrap()
    }

    #[test]
    fn informative_vs_unused() {
        let m = data();
        let params = GbdtParams {
            n_trees: 30,
            learning_rate: 0.3,
            min_samples_leaf: 2,
            ..Default::default()
        };
        let mut model = fit_ensemble(&params, EnsembleMode::Boosted, &m).unwrap();
        // Drop any split on z so that it is provably unused.
        let uses_z = model.trees.iter().any(|t| t.used_features().any(|f| f == 1));
        if uses_z {
            model.trees.retain(|t| !t.used_features().any(|f| f == 1));
        }
        let imp = permutation_importance(&model, &m, Metric::Mae, 3, 7).unwrap();
        assert!(imp[0].importance > 0.0);
        assert_eq!(imp[1].importance, 0.0);
        assert_eq!(imp, permutation_importance(&model, &m, Metric::Mae, 3, 7).unwrap());
    }

    #[test]
    fn single_row_is_insufficient() {
        let m = data().select(&[0]);
        let model = fit_ensemble(
            &GbdtParams {
                n_trees: 1,
                min_samples_leaf: 1,
                ..Default::default()
            },
            EnsembleMode::Boosted,
            &m,
        )
        .unwrap();
        assert!(matches!(
            permutation_importance(&model, &m, Metric::Mae, 1, 0),
            Err(Error::InsufficientData(_))
        ));
    }
}
