//! TPE search over the booster hyperparameters of one industrial consumer,
//! scored by validation RMSE, next to random search with the same budget.
//!
//! ```text
//! cargo run --release --example tune_hyperparameters -- 20
//! ```

use loadcast::app::{default_spec, prepare_record, tune_task, validation_rmse, Paths, RunConfig, TaskContext};
use loadcast::classifier::ConsumerType;
use loadcast::features::Task;
use loadcast::synth::{generate_fleet, FleetConfig, FleetCounts};
use loadcast::tuner::{gbdt_params_from, random_search, SearchSpace};

fn main() -> loadcast::Result<()> {
    let budget: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let corpus = generate_fleet(&FleetConfig {
        counts: FleetCounts {
            industrial: 1,
            commercial: 1,
            residential: 1,
        },
        seed: 2,
        ..Default::default()
    })?;
    let t = ConsumerType::Industrial;
    let record = corpus.records.iter().find(|r| r.declared_type == Some(t)).expect("one industrial");
    let mut config = RunConfig::new(Paths::corpus(".", "out"));
    config.tuner.budget = budget;
    let ctx = TaskContext {
        calendar: &corpus.calendar,
        weather: corpus.weather_for(&record.zone_id).expect("zone weather"),
        socio: None,
        config: &config,
    };
    let task = Task::DayAhead;
    let spec = default_spec(task, t);
    let data = prepare_record(record, t, task, &spec, false, &ctx)?;

    let tpe = tune_task(&data, &spec, &config.model, &config)?;
    let random = random_search(
        |a| validation_rmse(&data, &spec, &gbdt_params_from(a, &config.model)?),
        &SearchSpace::gbdt_default(),
        1,
        budget,
    )?;
    for (name, result) in [("tpe", &tpe), ("random", &random)] {
        let curve: Vec<String> = result
            .best_so_far()
            .iter()
            .map(|b| b.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()))
            .collect();
        println!("{name:>6} best-so-far RMSE: {}", curve.join(" "));
    }
    println!("best assignment: {:?}", tpe.best.assignment);
    Ok(())
}
