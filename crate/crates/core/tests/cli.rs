use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

fn loadcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadcast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// One small corpus shared by every test in this file.
fn corpus() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = DIR.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("corpus");
        let o = loadcast(&[
            "--seed",
            "9",
            "--out",
            path.to_str().unwrap(),
            "synth",
            "--industrial",
            "1",
            "--commercial",
            "1",
            "--residential",
            "1",
            "--zones",
            "2",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (tmp, path)
    });
    path
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let text = std::fs::read_to_string(corpus().join("config.json")).unwrap();
    let mut config: Value = serde_json::from_str(&text).unwrap();
    let paths = config["paths"].as_object_mut().unwrap();
    for (_, v) in paths.iter_mut() {
        if let Some(p) = v.as_str() {
            *v = Value::String(corpus().join(p).display().to_string());
        }
    }
    config["paths"]["output"] = Value::String(dir.join(format!("{name}-out")).display().to_string());
    edit(&mut config);
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn synth_writes_a_runnable_corpus() {
    let dir = corpus();
    for f in ["consumers.csv", "labels.csv", "holidays.txt", "socio.csv", "config.json", "weather/Z1.csv", "weather/Z2.csv"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let ids = std::fs::read_to_string(dir.join("consumers.csv")).unwrap();
    assert_eq!(ids.lines().count(), 4);
}

#[test]
fn classify_with_confusion_writes_both_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "classify", |_| {});
    let o = loadcast(&["--config", config.to_str().unwrap(), "classify", "--confusion"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("classify-out");
    let table = std::fs::read_to_string(out.join("classification.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let confusion = std::fs::read_to_string(out.join("confusion.csv")).unwrap();
    assert!(confusion.contains("overall,,,,1.0000"), "{confusion}");
}

#[test]
fn zero_score_targets_exit_zero_and_report_is_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "zero", |c| {
        c["thresholds"] = serde_json::json!({"score_target_day": 0.0, "score_target_15": 0.0});
    });
    let o = loadcast(&["--config", config.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let out = tmp.path().join("zero-out");
    for f in ["summary.csv", "comparisons.csv", "report.md", "status.json", "evaluation/index.csv", "aggregate/day-ahead.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let before: Vec<Vec<u8>> = ["summary.csv", "comparisons.csv", "report.md", "status.json"]
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect();
    let o = loadcast(&["--out", out.to_str().unwrap(), "report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let after: Vec<Vec<u8>> = ["summary.csv", "comparisons.csv", "report.md", "status.json"]
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect();
    assert_eq!(before, after);
}

#[test]
fn unreachable_targets_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "strict", |c| {
        c["tasks"] = serde_json::json!(["day-ahead"]);
        c["compare"] = Value::Bool(false);
        c["thresholds"] = serde_json::json!({"mape_thr_day": 0.001});
    });
    let o = loadcast(&["--config", config.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("missed"));
}

#[test]
fn missing_weather_names_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "noweather", |c| {
        c["paths"]["weather"] = Value::String("/nonexistent/weather".into());
    });
    let o = loadcast(&["--config", config.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("align_covariates"), "{err}");
}

#[test]
fn report_without_evaluations_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = loadcast(&["--out", tmp.path().to_str().unwrap(), "report"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("evaluation/index.csv"), "{}", stderr(&o));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "typo", |c| {
        c["sead"] = Value::from(3);
    });
    let o = loadcast(&["--config", config.to_str().unwrap(), "classify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sead"), "{}", stderr(&o));
}

#[test]
fn staged_commands_match_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "staged", |c| {
        c["tasks"] = serde_json::json!(["day-ahead"]);
    });
    let cfg = config.to_str().unwrap();
    for args in [
        vec!["--config", cfg, "classify"],
        vec!["--config", cfg, "train"],
        vec!["--config", cfg, "forecast"],
        vec!["--config", cfg, "evaluate"],
        vec!["--config", cfg, "aggregate"],
    ] {
        let o = loadcast(&args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    let o = loadcast(&["--config", cfg, "report"]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
    let staged = tmp.path().join("staged-out");

    let run_config = write_config(tmp.path(), "whole", |c| {
        c["tasks"] = serde_json::json!(["day-ahead"]);
    });
    let o = loadcast(&["--config", run_config.to_str().unwrap(), "run"]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
    let whole = tmp.path().join("whole-out");
    for f in ["summary.csv", "evaluation/index.csv", "aggregate/day-ahead.csv"] {
        assert_eq!(
            std::fs::read(staged.join(f)).unwrap(),
            std::fs::read(whole.join(f)).unwrap(),
            "{f} differs"
        );
    }
}
