//! Rolling day-ahead evaluation of a single model on one commercial
//! consumer: one 24-hour window per issue time over the test span.
//!
//! ```text
//! cargo run --release --example rolling_evaluation
//! ```

use loadcast::app::{default_spec, evaluate_strategies, prepare_record, Paths, RunConfig, TaskContext};
use loadcast::classifier::ConsumerType;
use loadcast::features::Task;
use loadcast::strategies::StrategyKind;
use loadcast::synth::{generate_fleet, FleetConfig, FleetCounts};

fn main() -> loadcast::Result<()> {
    let corpus = generate_fleet(&FleetConfig {
        counts: FleetCounts {
            industrial: 1,
            commercial: 1,
            residential: 1,
        },
        seed: 4,
        ..Default::default()
    })?;
    let t = ConsumerType::Commercial;
    let record = corpus.records.iter().find(|r| r.declared_type == Some(t)).expect("one commercial");
    let config = RunConfig::new(Paths::corpus(".", "out"));
    let ctx = TaskContext {
        calendar: &corpus.calendar,
        weather: corpus.weather_for(&record.zone_id).expect("zone weather"),
        socio: None,
        config: &config,
    };
    let spec = default_spec(Task::DayAhead, t);
    let data = prepare_record(record, t, Task::DayAhead, &spec, false, &ctx)?;
    let report = evaluate_strategies(&data, &[StrategyKind::Single], &spec, &config.model, &corpus.calendar)?
        .remove(0);

    println!("{} windows over {} test rows", report.windows.len(), data.split.test.len());
    for w in report.windows.iter().step_by(report.windows.len() / 8 + 1) {
        println!(
            "  issued {}  MAPE {:>6}  MAE {:.2}",
            w.issued_at,
            w.mape.map(|m| format!("{m:.2}")).unwrap_or_else(|| "-".into()),
            w.mae
        );
    }
    println!(
        "aggregate MAPE {:.2} (threshold {}), score {:.1}% against target {}%",
        report.aggregate_mape.unwrap_or(f64::NAN),
        report.mape_threshold,
        report.score_mape,
        report.score_target
    );
    let above = report
        .windows
        .iter()
        .filter(|w| w.mape.is_some_and(|m| m > report.mape_threshold))
        .count();
    println!("windows above the MAPE threshold: {above}");
    Ok(())
}
