use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loadcast::app::{self, Inputs, Paths, RunConfig};
use loadcast::data::Cadence;
use loadcast::features::Task;
use loadcast::synth::{generate_fleet, write_corpus, FleetConfig, FleetCounts};

/// Consumer-type-aware short-term load forecasting.
#[derive(Parser)]
#[command(name = "loadcast", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-consumer parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (the corpus directory for `synth`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic corpus and a matching config.json.
    Synth(SynthArgs),
    /// Classify every consumer as industrial, commercial or residential.
    Classify {
        /// Also score the classifier against labels.csv.
        #[arg(long)]
        confusion: bool,
    },
    /// Feature selection.
    Features {
        #[command(subcommand)]
        command: FeaturesCommand,
    },
    /// Tune GBDT hyperparameters with TPE.
    Tune {
        #[command(flatten)]
        target: Target,
        /// Trials per consumer and task (default: config tuner.budget).
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Fit each consumer's strategy.
    Train(Target),
    /// Forecast the horizon after the last reading.
    Forecast(Target),
    /// Rolling-origin evaluation on the test span.
    Evaluate(Target),
    /// Sum forecasts per location.
    Aggregate {
        #[arg(long)]
        task: Option<Task>,
    },
    /// Summarize evaluation artifacts.
    Report,
    /// Every stage end to end.
    Run,
}

#[derive(Subcommand)]
enum FeaturesCommand {
    /// Ablate covariates against the lag base set.
    Select(Target),
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    consumer: Option<String>,
    #[arg(long)]
    task: Option<Task>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    industrial: usize,
    #[arg(long, default_value_t = 30)]
    commercial: usize,
    #[arg(long, default_value_t = 6)]
    residential: usize,
    #[arg(long, default_value_t = 52)]
    weeks: usize,
    #[arg(long, default_value_t = 3)]
    zones: usize,
    /// Load cadence in minutes (15 or 60).
    #[arg(long, default_value_t = 15)]
    cadence: i64,
}

fn config(cli: &Cli) -> loadcast::Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| loadcast::Error::Config("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.paths.output = out.clone();
    }
    Ok(config)
}

fn tasks(config: &RunConfig, task: Option<Task>) -> Vec<Task> {
    task.map(|t| vec![t]).unwrap_or_else(|| config.tasks.clone())
}

fn synth(cli: &Cli, args: &SynthArgs) -> loadcast::Result<i32> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("corpus"));
    let fleet = FleetConfig {
        counts: FleetCounts {
            industrial: args.industrial,
            commercial: args.commercial,
            residential: args.residential,
        },
        weeks: args.weeks,
        cadence: Cadence::from_minutes(args.cadence)?,
        zones: args.zones,
        seed: cli.seed.unwrap_or(0),
        ..Default::default()
    };
    let corpus = generate_fleet(&fleet)?;
    write_corpus(&corpus, &dir)?;
    let mut config = RunConfig::new(Paths::corpus("", "run"));
    config.seed = fleet.seed;
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, config.to_json()?).map_err(|e| loadcast::Error::Config(e.to_string()))?;
    println!(
        "wrote {} consumers to {} (config: {})",
        corpus.records.len(),
        dir.display(),
        config_path.display()
    );
    Ok(0)
}

fn report_dir(cli: &Cli) -> loadcast::Result<PathBuf> {
    match (&cli.out, &cli.config) {
        (Some(out), _) => Ok(out.clone()),
        (None, Some(_)) => Ok(config(cli)?.paths.output),
        (None, None) => Err(loadcast::Error::Config("report needs --out or --config".into())),
    }
}

fn print_report(summary: &app::ReportSummary, out: &Path) -> i32 {
    println!(
        "{} consumers, {} evaluations, {} target misses; report: {}",
        summary.consumers,
        summary.evaluations,
        summary.missed.len(),
        out.join("report.md").display()
    );
    for (id, task) in &summary.missed {
        println!("  missed: {id} {task}");
    }
    summary.exit_code
}

fn execute(cli: &Cli) -> loadcast::Result<i32> {
    match &cli.command {
        Command::Synth(args) => synth(cli, args),
        Command::Report => {
            let out = report_dir(cli)?;
            let summary = app::report(&out)?;
            Ok(print_report(&summary, &out))
        }
        Command::Run => {
            let config = config(cli)?;
            let summary = app::run(&config)?;
            Ok(print_report(&summary, &config.paths.output))
        }
        command => {
            let config = config(cli)?;
            let inputs = Inputs::load(&config)?;
            match command {
                Command::Classify { confusion } => {
                    let rows = app::stage_classify(&inputs)?;
                    for c in &rows {
                        println!("{}\t{}\t{}", c.consumer_id, c.predicted, c.rule);
                    }
                    if *confusion {
                        let m = app::stage_confusion(&inputs)?;
                        print!("{}", m.to_csv());
                    }
                }
                Command::Features {
                    command: FeaturesCommand::Select(t),
                } => {
                    for r in app::stage_select_features(&inputs, t.consumer.as_deref(), &tasks(&config, t.task))? {
                        println!("selected: {}", r.selected.names().join(" "));
                    }
                }
                Command::Tune { target, budget } => {
                    let n = app::stage_tune(&inputs, target.consumer.as_deref(), &tasks(&config, target.task), *budget)?;
                    println!("tuned {} consumer-task pairs", n.len());
                }
                Command::Train(t) => {
                    for set in app::stage_train(&inputs, t.consumer.as_deref(), &tasks(&config, t.task))? {
                        println!("{}\t{}\t{}", set.consumer_id, set.task, set.primary().kind());
                    }
                }
                Command::Forecast(t) => {
                    for f in app::stage_forecast(&inputs, t.consumer.as_deref(), &tasks(&config, t.task))? {
                        println!("{}\t{}\t{} values from {}", f.consumer_id, f.task, f.values_kw.len(), f.timestamps[0]);
                    }
                }
                Command::Evaluate(t) => {
                    for r in app::stage_evaluate(&inputs, t.consumer.as_deref(), &tasks(&config, t.task))? {
                        println!(
                            "{}\t{}\t{}\tMAPE {}\tscore {:.1}",
                            r.consumer_id,
                            r.report.task,
                            r.report.label,
                            r.report.aggregate_mape.map(|m| format!("{m:.2}")).unwrap_or_else(|| "-".into()),
                            r.report.score_mape
                        );
                    }
                }
                Command::Aggregate { task } => {
                    for (task, locs) in app::stage_aggregate(&inputs, &tasks(&config, *task))? {
                        println!("{task}: {} locations", locs.len());
                    }
                }
                Command::Synth(_) | Command::Report | Command::Run => unreachable!(),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .expect("thread pool");
    match pool.install(|| execute(&cli)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
