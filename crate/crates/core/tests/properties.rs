use std::collections::HashMap;

use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;

use loadcast::classifier::{classify_with_rule, profile_stats, ConsumerType};
use loadcast::data::{align_covariates, resample_to_hourly, AlignOptions, Cadence, HolidayCalendar, LoadSeries, WeatherSeries};
use loadcast::eval::{mae, mape, quantitative_score, rmse, DataSplit};
use loadcast::features::{build_matrix, standardize_weather, Column, FeatureMatrix, FeatureSpec};
use loadcast::models::{deserialize_model, fit_ensemble, BaselineKind, BaselineParams, EnsembleMode, GbdtParams};
use loadcast::strategies::{aggregate_forecasts, ConsumerForecast};
use loadcast::synth::{generate, generate_weather, SynthConfig, WeatherConfig};
use loadcast::tuner::{suggest, SearchSpace, TpeConfig, Trial, TrialStatus};

fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..max).prop_flat_map(|n| {
        (
            prop::collection::vec(0.1f64..1e4, n),
            prop::collection::vec(0.0f64..1e4, n),
        )
    })
}

fn sample_matrix(values: &[(f64, f64, f64)]) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = values.iter().map(|(a, b, _)| vec![*a, *b]).collect();
    let target = values.iter().map(|(_, _, y)| *y).collect();
    FeatureMatrix::from_rows(vec![Column::numeric("a"), Column::numeric("b")], &rows, target).unwrap()
}

fn calendar() -> HolidayCalendar {
    HolidayCalendar::spain([2021, 2022])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn error_metrics_are_ordered((a, p) in paired(50)) {
        let m = mape(&a, &p).unwrap();
        let e = mae(&a, &p).unwrap();
        let r = rmse(&a, &p).unwrap();
        prop_assert!(m >= 0.0 && e >= 0.0);
        prop_assert!(r + 1e-9 >= e);
        prop_assert_eq!(mae(&a, &a).unwrap(), 0.0);
        prop_assert!((mae(&p, &a).unwrap() - e).abs() <= 1e-9 * e.max(1.0));
    }

    #[test]
    fn score_is_a_monotone_percentage(v in prop::collection::vec(0.0f64..100.0, 0..40), t1 in 0.0f64..100.0, t2 in 0.0f64..100.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let s_lo = quantitative_score(&v, lo);
        let s_hi = quantitative_score(&v, hi);
        prop_assert!((0.0..=100.0).contains(&s_lo) && (0.0..=100.0).contains(&s_hi));
        prop_assert!(s_lo <= s_hi);
    }

    #[test]
    fn residential_baselines_stay_within_their_inputs(values in prop::collection::vec(0.0f64..50.0, 4 * 672 + 1..4 * 672 + 200)) {
        let history: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
        let idx = history.len() - 1;
        for (kind, cadence, lags) in [
            (BaselineKind::ResidentialQuarterHour, Cadence::QuarterHour, vec![1, 96, 192, 288, 384, 672, 1344, 2016, 2688]),
            (BaselineKind::ResidentialDay, Cadence::Hourly, vec![24, 168]),
            (BaselineKind::PersistLastStep, Cadence::QuarterHour, vec![1]),
            (BaselineKind::PersistPreviousDay, Cadence::Hourly, vec![24]),
        ] {
            let b = BaselineParams::new(kind).evaluate(&history, idx, cadence).unwrap();
            let used: Vec<f64> = lags.iter().map(|l| values[idx - l]).collect();
            let lo = used.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = used.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(b >= lo - 1e-12 && b <= hi + 1e-12, "{kind:?}: {b} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn split_partitions_the_usable_rows(n in 50usize..5000, warmup in 0usize..40, a in 0.2f64..0.7, b in 0.05f64..0.2) {
        let split = DataSplit::chronological(n, warmup, (a, b, 1.0 - a - b)).unwrap();
        prop_assert_eq!(split.train.start, warmup);
        prop_assert_eq!(split.train.end, split.valid.start);
        prop_assert_eq!(split.valid.end, split.test.start);
        prop_assert_eq!(split.test.end, n);
    }

    #[test]
    fn weather_scaling_maps_the_training_range(lo in -30.0f64..30.0, width in 0.5f64..40.0, x in -50.0f64..80.0) {
        let hi = lo + width;
        let v = standardize_weather((lo, hi), &[lo, hi, x]).unwrap();
        prop_assert!((v[0] + 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        let back = lo + (v[2] + 1.0) * width / 2.0;
        prop_assert!((back - x).abs() < 1e-9);
    }

    #[test]
    fn aggregation_sums_consumers(parts in prop::collection::vec((prop::collection::vec(0.0f64..100.0, 6), 0usize..3), 1..8)) {
        let ts: Vec<_> = (0..6).map(|h| Utc.with_ymd_and_hms(2022, 3, 1, h, 0, 0).unwrap()).collect();
        let forecasts: Vec<ConsumerForecast> = parts
            .iter()
            .enumerate()
            .map(|(i, (v, _))| ConsumerForecast { consumer_id: format!("c{i:02}"), timestamps: ts.clone(), values: v.clone() })
            .collect();
        let locations: HashMap<String, String> = parts
            .iter()
            .enumerate()
            .map(|(i, (_, loc))| (format!("c{i:02}"), format!("L{loc}")))
            .collect();
        let out = aggregate_forecasts(&forecasts, &locations).unwrap();
        let total_in: f64 = parts.iter().flat_map(|(v, _)| v.iter()).sum();
        let total_out: f64 = out.iter().flat_map(|l| l.values.iter()).sum();
        prop_assert!((total_in - total_out).abs() <= 1e-9 * total_in.max(1.0));
        prop_assert_eq!(out.iter().map(|l| l.consumers.len()).sum::<usize>(), parts.len());
    }

    #[test]
    fn hourly_resampling_preserves_the_mean(v in prop::collection::vec(0.0f64..20.0, 1..40)) {
        let quarters: Vec<f64> = v.iter().flat_map(|x| [*x, x + 1.0, x + 2.0, x + 3.0]).collect();
        let series = LoadSeries::new("c", Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(), Cadence::QuarterHour, quarters).unwrap();
        let hourly = resample_to_hourly(&series).unwrap();
        prop_assert_eq!(hourly.len(), v.len());
        for (i, x) in v.iter().enumerate() {
            prop_assert!((hourly.get(i).unwrap() - (x + 1.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn tpe_suggestions_stay_in_the_space(seed in 0u64..1000, xs in prop::collection::vec((0.0f64..10.0, 1i64..50, 0usize..3), 0..30)) {
        let space = SearchSpace { dimensions: Vec::new() }
            .continuous("x", 0.0, 10.0, false)
            .continuous("lr", 0.001, 1.0, true)
            .integer("k", 1, 50)
            .categorical("c", &["a", "b", "c"]);
        let history: Vec<Trial> = xs
            .iter()
            .enumerate()
            .map(|(i, (x, k, _))| {
                let mut a = space.sample_uniform(&mut rand_chacha::ChaCha8Rng::seed_from_u64(i as u64));
                a.insert("x".into(), loadcast::tuner::Value::Real(*x));
                a.insert("k".into(), loadcast::tuner::Value::Int(*k));
                Trial { index: i, assignment: a, objective: Some((x - 3.0).powi(2)), status: TrialStatus::Ok, message: None }
            })
            .collect();
        let config = TpeConfig { seed, ..TpeConfig::default() };
        let next = suggest(&history, &space, &config).unwrap();
        prop_assert!(space.contains(&next));
    }
}

use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn boosting_never_increases_training_loss(rows in prop::collection::vec((-5.0f64..5.0, 0.0f64..1.0, -10.0f64..10.0), 40..200), lr in 0.05f64..1.0, leaves in 2usize..16) {
        let m = sample_matrix(&rows);
        let params = GbdtParams { n_trees: 25, learning_rate: lr, max_leaves: leaves, min_samples_leaf: 3, ..GbdtParams::default() };
        let model = fit_ensemble(&params, EnsembleMode::Boosted, &m).unwrap();
        for w in model.training_loss.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let back = deserialize_model(&model.to_json().unwrap()).unwrap();
        let (p1, p2) = (model.predict(&m).unwrap(), back.predict(&m).unwrap());
        prop_assert!(p1.iter().zip(&p2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn forest_predictions_stay_within_the_target_range(rows in prop::collection::vec((-5.0f64..5.0, 0.0f64..1.0, -10.0f64..10.0), 20..150), seed in 0u64..100) {
        let m = sample_matrix(&rows);
        let model = fit_ensemble(&GbdtParams { n_trees: 10, seed, ..GbdtParams::forest() }, EnsembleMode::Bagged, &m).unwrap();
        let lo = m.target.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = m.target.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for p in model.predict(&m).unwrap() {
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
    }

    #[test]
    fn synthetic_load_is_non_negative_and_classifier_is_scale_free(seed in 0u64..10_000, t in 0usize..3, k in 0.01f64..100.0) {
        let t = ConsumerType::ALL[t];
        let mut config = SynthConfig::for_type(t, seed);
        config.weeks = 5;
        let hours = config.weeks * 7 * 24 + 48;
        let weather = generate_weather("z", config.start - Duration::hours(1), hours, &WeatherConfig { seed, ..WeatherConfig::default() }).unwrap();
        let record = generate(&config, &calendar(), &weather).unwrap();
        prop_assert!(record.load.options().iter().all(|v| v.is_some_and(|x| x >= 0.0 && x.is_finite())));
        let a = classify_with_rule(&profile_stats(&record.load, &calendar()).unwrap());
        let b = classify_with_rule(&profile_stats(&record.load.scaled(k), &calendar()).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lag_columns_never_look_past_the_horizon(n_days in 9usize..20, extra in 0usize..24) {
        let n = n_days * 24 + extra;
        let start = Utc.with_ymd_and_hms(2022, 2, 6, 23, 0, 0).unwrap();
        let load = LoadSeries::new("c", start, Cadence::Hourly, (0..n).map(|i| i as f64).collect()).unwrap();
        let hours = n + 2;
        let ts = (0..hours).map(|h| start + Duration::hours(h as i64)).collect();
        let weather = WeatherSeries::new("z", ts, vec![12.0; hours], vec![50.0; hours]).unwrap();
        let table = align_covariates(&load, &weather, &calendar(), None, AlignOptions::default()).unwrap();
        let spec = FeatureSpec::lags(&[24, 25, 48, 168]);
        let m = build_matrix(&table, &spec, 24).unwrap();
        for i in 0..m.n_rows() {
            let row = m.rows[i];
            for (j, lag) in [24usize, 25, 48, 168].iter().enumerate() {
                prop_assert_eq!(m.value(i, j), (row - lag) as f64);
            }
        }
    }
}
