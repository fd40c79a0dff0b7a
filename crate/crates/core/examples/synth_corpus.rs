//! Writes a synthetic corpus (load, weather, holidays, socio-economic data,
//! labels and a run configuration) to a directory and reads it back.
//!
//! ```text
//! cargo run --release --example synth_corpus -- /tmp/corpus
//! ```

use loadcast::synth::{generate_fleet, read_corpus, write_corpus, FleetConfig, FleetCounts};

fn main() -> loadcast::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "synthetic-corpus".into());
    let fleet = FleetConfig {
        counts: FleetCounts {
            industrial: 2,
            commercial: 2,
            residential: 3,
        },
        zones: 2,
        seed: 12,
        ..Default::default()
    };
    let corpus = generate_fleet(&fleet)?;
    write_corpus(&corpus, &dir)?;
    let back = read_corpus(&dir)?;
    for (a, b) in corpus.records.iter().zip(&back.records) {
        let peak = a.load.options().iter().flatten().cloned().fold(0.0, f64::max);
        println!(
            "{:<6} {:<12} zone {}  {} samples, peak {:.1} kW, read back equal: {}",
            a.consumer_id,
            a.declared_type.map(|t| t.to_string()).unwrap_or_default(),
            a.zone_id,
            a.load.len(),
            peak,
            a.load == b.load
        );
    }
    println!("corpus written to {dir}");
    Ok(())
}
