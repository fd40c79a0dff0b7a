//! Residential baselines next to the persistence forecasts, evaluated on one
//! synthetic residential consumer at a few issue times.
//!
//! ```text
//! cargo run --release --example baselines -- 5
//! ```

use loadcast::classifier::ConsumerType;
use loadcast::data::resample_to_hourly;
use loadcast::models::{predict_baseline, BaselineKind, BaselineParams};
use loadcast::synth::{generate_fleet, FleetConfig};

fn main() -> loadcast::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let corpus = generate_fleet(&FleetConfig {
        seed,
        ..Default::default()
    })?;
    let record = corpus
        .records
        .iter()
        .find(|r| r.declared_type == Some(ConsumerType::Residential))
        .expect("fleet has residential consumers");
    let quarter = &record.load;
    let hourly = resample_to_hourly(quarter)?;
    println!("consumer {}", record.consumer_id);

    for day in [40, 120, 250] {
        let i = day * 24 + 18;
        let at = hourly.timestamp(i);
        print!("{at}  actual {:6.2}", hourly.get(i).unwrap_or(f64::NAN));
        for kind in [BaselineKind::PersistPreviousDay, BaselineKind::ResidentialDay] {
            print!("  {kind:?} {:6.2}", predict_baseline(&BaselineParams::new(kind), &hourly, at)?);
        }
        println!();

        let j = i * 4 + 2;
        let at = quarter.timestamp(j);
        print!("{at}  actual {:6.2}", quarter.get(j).unwrap_or(f64::NAN));
        for kind in [BaselineKind::PersistLastStep, BaselineKind::ResidentialQuarterHour] {
            print!("  {kind:?} {:6.2}", predict_baseline(&BaselineParams::new(kind), quarter, at)?);
        }
        println!();
    }
    Ok(())
}
