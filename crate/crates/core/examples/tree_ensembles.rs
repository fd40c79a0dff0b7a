//! Fits a boosted ensemble and a random forest on a small nonlinear problem,
//! then round-trips both through JSON.
//!
//! ```text
//! cargo run --release --example tree_ensembles
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loadcast::features::{Column, FeatureMatrix};
use loadcast::models::{deserialize_model, fit_ensemble, serialize_model, EnsembleMode, GbdtParams};

fn main() -> loadcast::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    let mut target = Vec::new();
    for _ in 0..2000 {
        let x: f64 = rng.random_range(-3.0..3.0);
        let hour = rng.random_range(0..24u32);
        let peak = if (8..20).contains(&hour) { 4.0 } else { 0.0 };
        rows.push(vec![x, hour as f64]);
        target.push(x.sin() * 2.0 + peak + rng.random_range(-0.2..0.2));
    }
    let columns = vec![Column::numeric("x"), Column::categorical("hour", 24)];
    let (train, test) = (1500, 2000);
    let fit_on = FeatureMatrix::from_rows(columns.clone(), &rows[..train], target[..train].to_vec())?;
    let held_out = FeatureMatrix::from_rows(columns, &rows[train..test], target[train..test].to_vec())?;

    for (name, params, mode) in [
        ("boosted", GbdtParams::default(), EnsembleMode::Boosted),
        ("forest", GbdtParams::forest(), EnsembleMode::Bagged),
    ] {
        let model = fit_ensemble(&params, mode, &fit_on)?;
        let preds = model.predict(&held_out)?;
        let rmse = (preds.iter().zip(&held_out.target).map(|(p, y)| (p - y).powi(2)).sum::<f64>()
            / preds.len() as f64)
            .sqrt();
        let json = serialize_model(&model)?;
        let back = deserialize_model(&json)?;
        let same = back.predict(&held_out)?.iter().zip(&preds).all(|(a, b)| a.to_bits() == b.to_bits());
        println!(
            "{name:>8}: {} trees, held-out RMSE {rmse:.3}, {} bytes of JSON, round trip identical: {same}",
            model.trees.len(),
            json.len()
        );
    }
    Ok(())
}
