use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rlsurv::dataset::{self, Dataset, DeviceSpec, PRESETS};
use rlsurv::env::RewardScheme;
use rlsurv::experiment::{self, DeviceSource, ExperimentConfig, Method, ModelBundle, SplitRecord};
use rlsurv::metrics::{self, confusion, EvalReport};
use rlsurv::report;
use rlsurv::Error;

#[derive(Parser)]
#[command(name = "rlsurv", version, about = "Rare-event failure classification with DQN/DDQN agents")]
struct Cli {
    /// Global seed; falls back to RLSURV_SEED.
    #[arg(long, global = true, env = "RLSURV_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic device dataset as CSV.
    Generate(GenerateArgs),
    /// Train one model on a split of one dataset.
    Train(TrainArgs),
    /// Score a trained model, or an external predictions file, on the held-out test rows.
    Evaluate(EvaluateArgs),
    /// Run the device x algorithm x test-fraction x seed grid and write a report.
    Compare(CompareArgs),
    /// Rebuild the summary, charts and confusion files from a comparison CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_preset, conflicts_with = "spec")]
    preset: Option<String>,
    /// JSON device spec instead of a preset.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Fraction of failure rows left unshifted.
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset CSV (volt,rotate,pressure,vibration,label).
    #[arg(long, conflicts_with = "preset")]
    data: Option<PathBuf>,
    /// Generate a preset instead of reading a CSV.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<String>,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    total_steps: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    target_sync: Option<u64>,
    #[arg(long)]
    epsilon_end: Option<f64>,
    #[arg(long)]
    reward_scheme: Option<RewardScheme>,
    /// ANN training epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "ddqn")]
    algorithm: Method,
    #[arg(long, default_value_t = 0.2, value_parser = parse_fraction)]
    test_fraction: f64,
    /// JSON experiment config supplying defaults; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(short, long, default_value = "model")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model bundle written by `train`.
    #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
    model: Option<PathBuf>,
    /// External predictions CSV (row_index,pred) keyed by source row.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Label for external predictions.
    #[arg(long, default_value = "external")]
    name: String,
    #[arg(long, default_value_t = 0.2, value_parser = parse_fraction)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Devices to run (repeatable); replaces the config list.
    #[arg(long, value_parser = parse_preset)]
    preset: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    algorithm: Vec<Method>,
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction)]
    test_fraction: Vec<f64>,
    /// Seed list; `--seed` alone runs that single seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    jobs: Option<usize>,
    /// Write train_seconds as 0 so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// comparison.csv from an earlier run.
    #[arg(long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
}

fn parse_preset(s: &str) -> Result<String, String> {
    if PRESETS.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("unknown preset `{s}`; available: {}", PRESETS.join(", ")))
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(format!("{f} is not in (0, 1)"))
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => Failure::Usage(msg),
            other => Failure::Run(other),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, cli.seed),
        Command::Train(a) => cmd_train(a, cli.seed),
        Command::Evaluate(a) => cmd_evaluate(a, cli.seed),
        Command::Compare(a) => cmd_compare(a, cli.seed),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Json(j) => Failure::Usage(format!("{}: {j}", p.display())),
            other => other.into(),
        }),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) {
    if let Some(v) = o.total_steps {
        cfg.agent.total_steps = v;
    }
    if let Some(v) = o.gamma {
        cfg.agent.gamma = v;
    }
    if let Some(v) = o.lr {
        cfg.agent.learning_rate = v;
        cfg.ann.learning_rate = v;
    }
    if let Some(v) = o.batch_size {
        cfg.agent.batch_size = v;
        cfg.ann.batch_size = v;
    }
    if let Some(v) = o.target_sync {
        cfg.agent.target_sync_period = v;
    }
    if let Some(v) = o.epsilon_end {
        cfg.agent.epsilon_end = v;
    }
    if let Some(v) = o.reward_scheme {
        cfg.env.reward_scheme = v;
    }
    if let Some(v) = o.epochs {
        cfg.ann.epochs = v;
    }
}

fn load_data(d: &DataArgs) -> CliResult<Dataset> {
    match (&d.data, &d.preset) {
        (Some(path), _) => Ok(DeviceSource::Csv { csv: path.clone(), name: None }.load()?),
        (None, Some(p)) => Ok(DeviceSource::Preset(p.clone()).load()?),
        (None, None) => Err(Failure::Usage("one of --data or --preset is required".into())),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::Run(Error::io(path, e)))
}

fn cmd_generate(a: GenerateArgs, seed: Option<u64>) -> CliResult {
    let mut spec: DeviceSpec = match (&a.preset, &a.spec) {
        (Some(p), _) => dataset::preset(p).expect("validated by parser"),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(Failure::Usage("one of --preset or --spec is required".into())),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(o) = a.overlap {
        spec.overlap = o;
    }
    let ds = dataset::generate(&spec)?;
    write_file(&a.out, &ds.to_csv_bytes()?)?;
    let (normal, failure) = ds.class_counts();
    println!("{}: {} rows (normal {normal}, failure {failure}) -> {}", ds.name(), ds.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SplitFile<'a> {
    #[serde(flatten)]
    record: &'a SplitRecord,
    train_indices: &'a [usize],
    val_indices: &'a [usize],
    test_indices: &'a [usize],
}

fn cmd_train(a: TrainArgs, seed: Option<u64>) -> CliResult {
    let mut cfg = load_config(a.config.as_deref())?;
    apply_overrides(&mut cfg, &a.overrides);
    cfg.test_fractions = vec![a.test_fraction];
    cfg.validate()?;
    let seed = seed.unwrap_or(1);
    let source = load_data(&a.data)?;
    let splits = dataset::split(&source, a.test_fraction, cfg.val_fraction, seed)?;
    let model = experiment::fit_model(a.algorithm, &splits.train(&source), &splits.val(&source), seed, &cfg)?;

    let record = SplitRecord {
        test_fraction: a.test_fraction,
        val_fraction: cfg.val_fraction,
        seed,
    };
    let bundle = ModelBundle::new(&model, source.name(), record.clone());
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    bundle.save(&a.out.join("model.json"))?;
    write_file(&a.out.join("curve.csv"), model.curve_csv.as_bytes())?;
    let split_doc = SplitFile {
        record: &record,
        train_indices: &splits.train_indices,
        val_indices: &splits.val_indices,
        test_indices: &splits.test_indices,
    };
    write_file(
        &a.out.join("split.json"),
        serde_json::to_string_pretty(&split_doc).map_err(Error::from)?.as_bytes(),
    )?;
    println!(
        "{} on {}: {} updates in {:.2}s -> {}",
        a.algorithm,
        source.name(),
        model.step_count,
        model.train_seconds,
        a.out.display()
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, seed: Option<u64>) -> CliResult {
    let source = load_data(&a.data)?;
    let report = if let Some(path) = &a.model {
        let bundle = ModelBundle::load(path)?;
        let splits = bundle.splits(&source)?;
        let test = splits.test(&source);
        let preds = experiment::predict_rows(&bundle.network()?, &bundle.scaler, &test)?;
        let cm = confusion(&preds, test.labels())?;
        EvalReport::new(
            bundle.algorithm.as_str(),
            source.name(),
            bundle.split.test_fraction,
            bundle.split.seed,
            cm,
            0.0,
        )
    } else {
        let path = a.predictions.as_ref().expect("required by parser");
        let seed = seed.unwrap_or(1);
        let splits = dataset::split(&source, a.test_fraction, a.val_fraction, seed)?;
        let preds = metrics::load_predictions(path)?;
        let cm = metrics::join_predictions(&preds, &source, &splits.test_indices)?;
        EvalReport::new(&a.name, source.name(), a.test_fraction, seed, cm, 0.0)
    };
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    println!("{text}");
    if let Some(dir) = &a.out {
        write_file(&dir.join("evaluation.json"), text.as_bytes())?;
        write_file(&dir.join("confusion.csv"), report::confusion_csv(&report.confusion).as_bytes())?;
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs, seed: Option<u64>) -> CliResult {
    let mut cfg = load_config(a.config.as_deref())?;
    apply_overrides(&mut cfg, &a.overrides);
    if !a.preset.is_empty() {
        cfg.devices = a.preset.iter().cloned().map(DeviceSource::Preset).collect();
    }
    if !a.algorithm.is_empty() {
        cfg.algorithms = a.algorithm.clone();
    }
    if !a.test_fraction.is_empty() {
        cfg.test_fractions = a.test_fraction.clone();
    }
    if !a.seeds.is_empty() {
        cfg.seeds = a.seeds.clone();
    } else if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    if let Some(j) = a.jobs {
        cfg.jobs = j;
    }
    if a.no_timing {
        cfg.record_timing = false;
    }
    if let Some(out) = &a.out {
        cfg.out_dir = out.clone();
    }
    let (reports, files) = experiment::run_compare(&cfg)?;
    println!("{} runs -> {}", reports.len(), files.comparison_csv.display());
    print!("{}", report::summary_markdown(&reports));
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CliResult {
    let file = std::fs::File::open(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let reports = report::read_comparison_csv(file)?;
    let files = report::emit_report(&reports, &a.out)?;
    println!("{} rows -> {}", reports.len(), files.summary_md.display());
    Ok(())
}
