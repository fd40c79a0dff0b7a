use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::SynthCorpus;
use crate::classifier::ConsumerType;
use crate::data::{
    ingest_load_csv, read_holidays, read_socio_csv, read_weather_csv, write_holidays, write_load_csv,
    write_socio_csv, write_weather_csv, Cadence, ConsumerRecord,
};
use crate::error::{Error, Result};

/// Writes the corpus under `dir`:
///
/// ```text
/// load/<consumer>.csv   weather/<zone>.csv   holidays.txt
/// socio.csv             consumers.csv        labels.csv
/// ```
pub fn write_corpus(corpus: &SynthCorpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    for sub in ["load", "weather"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    for rec in &corpus.records {
        write_load_csv(&rec.load, dir.join("load").join(format!("{}.csv", rec.consumer_id)))?;
    }
    for w in &corpus.weather {
        write_weather_csv(w, dir.join("weather").join(format!("{}.csv", w.zone_id)))?;
    }
    write_holidays(&corpus.calendar, dir.join("holidays.txt"))?;
    write_socio_csv(&corpus.socio, dir.join("socio.csv"))?;

    let mut consumers = csv::Writer::from_writer(Vec::new());
    consumers.write_record(["consumer_id", "zone_id", "cadence_min"])?;
    let mut labels = csv::Writer::from_writer(Vec::new());
    labels.write_record(["consumer_id", "type"])?;
    for rec in &corpus.records {
        consumers.write_record([
            rec.consumer_id.as_str(),
            rec.zone_id.as_str(),
            &rec.load.cadence.minutes().to_string(),
        ])?;
        if let Some(t) = rec.declared_type {
            labels.write_record([rec.consumer_id.as_str(), t.as_str()])?;
        }
    }
    for (name, w) in [("consumers.csv", consumers), ("labels.csv", labels)] {
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Schema(format!(
            "{}: expected columns {header:?}, found {found:?}",
            path.display()
        )));
    }
    rdr.records()
        .enumerate()
        .map(|(i, r)| {
            r.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| Error::Parse {
                    row: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Reads a corpus written by [`write_corpus`]. `labels.csv` is optional;
/// without it records carry no declared type.
pub fn read_corpus(dir: impl AsRef<Path>) -> Result<SynthCorpus> {
    let dir = dir.as_ref();
    let mut labels = HashMap::new();
    let labels_path = dir.join("labels.csv");
    if labels_path.exists() {
        for row in read_rows(&labels_path, &["consumer_id", "type"])? {
            labels.insert(row[0].clone(), row[1].parse::<ConsumerType>()?);
        }
    }
    let mut records = Vec::new();
    for row in read_rows(&dir.join("consumers.csv"), &["consumer_id", "zone_id", "cadence_min"])? {
        let minutes: i64 = row[2]
            .parse()
            .map_err(|_| Error::Schema(format!("invalid cadence {:?} for {}", row[2], row[0])))?;
        let load = ingest_load_csv(dir.join("load").join(format!("{}.csv", row[0])), Cadence::from_minutes(minutes)?)?;
        records.push(ConsumerRecord {
            declared_type: labels.get(&row[0]).copied(),
            consumer_id: row[0].clone(),
            zone_id: row[1].clone(),
            load,
        });
    }
    let mut zones: Vec<&str> = records.iter().map(|r| r.zone_id.as_str()).collect();
    zones.sort_unstable();
    zones.dedup();
    let weather = zones
        .iter()
        .map(|z| read_weather_csv(dir.join("weather").join(format!("{z}.csv"))))
        .collect::<Result<Vec<_>>>()?;
    let calendar = read_holidays(dir.join("holidays.txt"), "ES")?;
    let socio_path = dir.join("socio.csv");
    let socio = if socio_path.exists() {
        read_socio_csv(socio_path)?
    } else {
        Vec::new()
    };
    Ok(SynthCorpus {
        records,
        weather,
        calendar,
        socio,
    })
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::classifier::ConsumerType;

    #[test]
    fn corpus_round_trip() {
        let fleet = FleetConfig {
            counts: FleetCounts {
                industrial: 1,
                commercial: 1,
                residential: 1,
            },
            weeks: 4,
            cadence: Cadence::Hourly,
            ..Default::default()
        };
        let corpus = generate_fleet(&fleet).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        let back = read_corpus(dir.path()).unwrap();
        assert_eq!(back.records.len(), 3);
        assert_eq!(back.records[0].declared_type, Some(ConsumerType::Industrial));
        assert_eq!(back.records, corpus.records);
        assert_eq!(back.weather, corpus.weather);
        assert_eq!(back.socio, corpus.socio);
    }
}
