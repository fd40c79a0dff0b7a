//! Generates a labelled synthetic fleet and scores the rule-based classifier
//! on it.
//!
//! ```text
//! cargo run --release --example classify_fleet -- 7
//! ```

use loadcast::classifier::{evaluate_classifier, SplitCounts};
use loadcast::synth::{generate_fleet, FleetConfig};

fn main() -> loadcast::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let fleet = FleetConfig {
        seed,
        ..Default::default()
    };
    let corpus = generate_fleet(&fleet)?;
    println!(
        "{} records ({} weeks at {} min)",
        corpus.records.len(),
        fleet.weeks,
        fleet.cadence.minutes()
    );
    let confusion = evaluate_classifier(&corpus.records, &corpus.calendar, SplitCounts::uniform(1))?;
    print!("{}", confusion.to_csv());
    Ok(())
}
