//! Forward feature ablation: start from the lag features and keep each
//! covariate whose inclusion lowers validation error for the probe models.
//!
//! ```text
//! cargo run --release --example feature_selection -- industrial
//! ```

use loadcast::app::{default_spec, prepare_record, Paths, RunConfig, TaskContext};
use loadcast::classifier::ConsumerType;
use loadcast::features::{ablate_features, AblationProtocol, FeatureSpec, ModelFamily, Task};
use loadcast::synth::{generate_fleet, FleetConfig, FleetCounts};

fn main() -> loadcast::Result<()> {
    let t: ConsumerType = std::env::args().nth(1).unwrap_or_else(|| "industrial".into()).parse()?;
    let corpus = generate_fleet(&FleetConfig {
        counts: FleetCounts {
            industrial: 1,
            commercial: 1,
            residential: 1,
        },
        seed: 8,
        ..Default::default()
    })?;
    let record = corpus.records.iter().find(|r| r.declared_type == Some(t)).expect("one per type");
    let config = RunConfig::new(Paths::corpus(".", "out"));
    let ctx = TaskContext {
        calendar: &corpus.calendar,
        weather: corpus.weather_for(&record.zone_id).expect("zone weather"),
        socio: corpus.socio_for(&record.zone_id),
        config: &config,
    };
    let task = Task::DayAhead;
    let data = prepare_record(record, t, task, &default_spec(task, t), false, &ctx)?;
    let base = FeatureSpec::lags(&task.default_lags());
    let candidates = FeatureSpec::covariates(ModelFamily::Tree, t);
    let protocol = AblationProtocol::new(task, data.split.train.clone(), data.split.valid.clone(), 0);
    let report = ablate_features(&candidates, &base, &data.table, &protocol)?;
    print!("{}", report.to_csv());
    for (name, delta) in &report.mean_relative_delta {
        println!("{name:>12}: mean relative delta {:+.4}", delta.unwrap_or(f64::NAN));
    }
    println!("selected: {:?}", report.selected_candidates);
    Ok(())
}
