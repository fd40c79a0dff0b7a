//! Single model vs the type's default strategy (fusion for industrial and
//! commercial, hybrid for residential) on synthetic consumers, both tasks.
//!
//! ```text
//! cargo run --release --example strategy_comparison -- residential 3
//! ```

use loadcast::app::{default_spec, evaluate_baseline, evaluate_strategies, prepare_record, Paths, RunConfig, TaskContext};
use loadcast::classifier::ConsumerType;
use loadcast::features::Task;
use loadcast::strategies::StrategyKind;
use loadcast::synth::{generate_fleet, FleetConfig, FleetCounts};

fn main() -> loadcast::Result<()> {
    let mut args = std::env::args().skip(1);
    let t: ConsumerType = args.next().unwrap_or_else(|| "industrial".into()).parse()?;
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let config = RunConfig::new(Paths::corpus(".", "out"));
    for seed in 0..seeds {
        let corpus = generate_fleet(&FleetConfig {
            counts: FleetCounts {
                industrial: 1,
                commercial: 1,
                residential: 1,
            },
            seed,
            ..Default::default()
        })?;
        let record = corpus.records.iter().find(|r| r.declared_type == Some(t)).expect("one per type");
        let ctx = TaskContext {
            calendar: &corpus.calendar,
            weather: corpus.weather_for(&record.zone_id).expect("zone weather"),
            socio: corpus.socio_for(&record.zone_id),
            config: &config,
        };
        for task in [Task::DayAhead, Task::QuarterHour] {
            let spec = default_spec(task, t);
            let data = prepare_record(record, t, task, &spec, false, &ctx)?;
            let kind = StrategyKind::default_for(t);
            let reports = evaluate_strategies(&data, &[StrategyKind::Single, kind], &spec, &config.model, &corpus.calendar)?;
            let base = evaluate_baseline(&data, task.persistence())?;
            print!("seed {seed} {task:>9}:");
            for r in reports.iter().chain([&base]) {
                print!(
                    "  {} MAPE {:.2} score {:.1}",
                    r.label,
                    r.aggregate_mape.unwrap_or(f64::NAN),
                    r.score_mape
                );
            }
            println!();
        }
    }
    Ok(())
}
