//! Full pipeline on a fresh synthetic corpus: classify, train, forecast,
//! evaluate, aggregate and report, exactly as `loadcast run` does.
//!
//! ```text
//! cargo run --release --example end_to_end -- /tmp/loadcast-demo
//! ```

use std::path::PathBuf;

use loadcast::app::{run, Paths, RunConfig};
use loadcast::features::Task;
use loadcast::synth::{generate_fleet, write_corpus, FleetConfig, FleetCounts};

fn main() -> loadcast::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "loadcast-demo".into()));
    let corpus = generate_fleet(&FleetConfig {
        counts: FleetCounts {
            industrial: 1,
            commercial: 1,
            residential: 1,
        },
        seed: 21,
        ..Default::default()
    })?;
    write_corpus(&corpus, root.join("corpus"))?;

    let mut config = RunConfig::new(Paths::corpus(root.join("corpus"), root.join("out")));
    config.tasks = vec![Task::DayAhead];
    let summary = run(&config)?;
    println!(
        "{} consumers, {} evaluations, status {:?} (exit code {})",
        summary.consumers, summary.evaluations, summary.status, summary.exit_code
    );
    for (id, task) in &summary.missed {
        println!("  target missed: {id} {task}");
    }
    let path = root.join("out/summary.csv");
    let summary_csv = std::fs::read_to_string(&path).map_err(|source| loadcast::Error::Io { path, source })?;
    print!("{summary_csv}");
    Ok(())
}
