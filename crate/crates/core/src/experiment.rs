//! Multi-algorithm, multi-split, multi-seed comparison.
//!
//! Each run splits the data, fits the scaler on the training rows, trains with
//! the nested validation rows, and only then materializes the test rows for
//! evaluation. Runs are independent and may execute on a thread pool; the
//! emitted report is sorted, so completion order does not matter.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{self, predict_with, states_of, AgentConfig, Algorithm};
use crate::ann::{self, AnnConfig};
use crate::dataset::{self, Dataset, DeviceSpec, ScaleMode, Scaler, Splits};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::metrics::{confusion, EvalReport};
use crate::nn::{Mlp, MlpCheckpoint};
use crate::report::{self, ReportFiles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ddqn,
    Dqn,
    Ann,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ddqn, Method::Dqn, Method::Ann];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ddqn => "ddqn",
            Method::Dqn => "dqn",
            Method::Ann => "ann",
        }
    }

    fn algorithm(self) -> Option<Algorithm> {
        match self {
            Method::Ddqn => Some(Algorithm::Ddqn),
            Method::Dqn => Some(Algorithm::Dqn),
            Method::Ann => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ddqn" => Ok(Method::Ddqn),
            "dqn" => Ok(Method::Dqn),
            "ann" => Ok(Method::Ann),
            other => Err(format!("unknown algorithm `{other}` (ddqn|dqn|ann)")),
        }
    }
}

/// Where a device's rows come from: a preset name, a CSV file, or an inline spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceSource {
    Preset(String),
    Csv {
        csv: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
    Spec(DeviceSpec),
}

impl DeviceSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DeviceSource::Preset(name) => {
                let spec = dataset::preset(name).ok_or_else(|| {
                    Error::invalid(format!(
                        "unknown preset `{name}` (expected one of {})",
                        dataset::PRESETS.join(", ")
                    ))
                })?;
                dataset::generate(&spec)
            }
            DeviceSource::Csv { csv, name } => {
                let ds = Dataset::load_csv(csv)?;
                Ok(match name {
                    Some(n) => ds.with_name(n.clone()),
                    None => ds,
                })
            }
            DeviceSource::Spec(spec) => dataset::generate(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub devices: Vec<DeviceSource>,
    pub algorithms: Vec<Method>,
    pub test_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub val_fraction: f64,
    pub scale_mode: ScaleMode,
    pub agent: AgentConfig,
    pub ann: AnnConfig,
    pub env: EnvConfig,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    /// When false, `train_seconds` is written as 0 so reruns are byte-identical.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            devices: dataset::PRESETS.iter().map(|p| DeviceSource::Preset(p.to_string())).collect(),
            algorithms: Method::ALL.to_vec(),
            test_fractions: vec![0.2, 0.5, 0.8],
            seeds: vec![1, 2, 3, 4, 5],
            val_fraction: 0.2,
            scale_mode: ScaleMode::Minmax,
            agent: AgentConfig::default(),
            ann: AnnConfig::default(),
            env: EnvConfig::default(),
            out_dir: PathBuf::from("report"),
            jobs: 0,
            record_timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.devices.is_empty() {
            return Err(Error::invalid("devices: list is empty"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("algorithms: list is empty"));
        }
        if self.test_fractions.is_empty() {
            return Err(Error::invalid("test_fractions: list is empty"));
        }
        if let Some(f) = self.test_fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(Error::invalid(format!("test_fractions: {f} outside (0, 1)")));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds: list is empty"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::invalid(format!("val_fraction: {} outside [0, 1)", self.val_fraction)));
        }
        self.agent.validate()?;
        self.ann.validate()
    }
}

/// Identity of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub device: String,
    pub method: Method,
    pub test_fraction: f64,
    pub seed: u64,
}

impl std::fmt::Display for RunSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "device={} algorithm={} test_fraction={} seed={}",
            self.device, self.method, self.test_fraction, self.seed
        )
    }
}

/// Trained network plus everything needed to score new rows.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub method: Method,
    pub net: Mlp<f64>,
    pub scaler: Scaler,
    pub train_seconds: f64,
    /// Training curve as CSV text.
    pub curve_csv: String,
    pub step_count: u64,
    pub agent_config: Option<AgentConfig>,
    pub ann_config: Option<AnnConfig>,
}

/// Fits the scaler on `train` and trains `method`. Test rows are not an input.
pub fn fit_model(
    method: Method,
    train: &Dataset,
    val: &Dataset,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<FittedModel> {
    let scaler = Scaler::fit(train, cfg.scale_mode)?;
    let train_s = scaler.apply(train);
    let val_s = scaler.apply(val);
    match method.algorithm() {
        Some(algorithm) => {
            let agent_cfg = AgentConfig {
                algorithm,
                seed,
                ..cfg.agent.clone()
            };
            let env_cfg = EnvConfig { seed, ..cfg.env.clone() };
            let out = agent::train::<f64>(&agent_cfg, &env_cfg, &train_s, &val_s)?;
            let mut curve_csv = String::from("step,epsilon,mean_loss,mean_reward,val_f1\n");
            for p in &out.curve {
                let _ = writeln!(
                    curve_csv,
                    "{},{:.6},{:.6},{:.6},{:.6}",
                    p.step, p.epsilon, p.mean_loss, p.mean_reward, p.val_f1
                );
            }
            Ok(FittedModel {
                method,
                net: out.agent.q_net().clone(),
                scaler,
                train_seconds: out.train_seconds,
                curve_csv,
                step_count: out.agent.step_count(),
                agent_config: Some(agent_cfg),
                ann_config: None,
            })
        }
        None => {
            let ann_cfg = AnnConfig { seed, ..cfg.ann.clone() };
            let out = ann::train_ann::<f64>(&ann_cfg, &train_s, &val_s)?;
            let mut curve_csv = String::from("epoch,mean_loss,val_f1\n");
            for p in &out.curve {
                let _ = writeln!(curve_csv, "{},{:.6},{:.6}", p.epoch, p.mean_loss, p.val_f1);
            }
            Ok(FittedModel {
                method,
                net: out.net,
                scaler,
                train_seconds: out.train_seconds,
                curve_csv,
                step_count: out.updates,
                agent_config: None,
                ann_config: Some(ann_cfg),
            })
        }
    }
}

/// Greedy predictions for raw (unscaled) rows.
pub fn predict_rows(model_net: &Mlp<f64>, scaler: &Scaler, rows: &Dataset) -> Result<Vec<u8>> {
    predict_with(model_net, &states_of::<f64>(&scaler.apply(rows)))
}

pub fn run_one(source: &Dataset, run: &RunSpec, cfg: &ExperimentConfig) -> Result<EvalReport> {
    let splits = dataset::split(source, run.test_fraction, cfg.val_fraction, run.seed)?;
    let model = fit_model(run.method, &splits.train(source), &splits.val(source), run.seed, cfg)?;
    // evaluation stage: the test rows exist from here on only
    let test = splits.test(source);
    let preds = predict_rows(&model.net, &model.scaler, &test)?;
    let cm = confusion(&preds, test.labels())?;
    let seconds = if cfg.record_timing { model.train_seconds } else { 0.0 };
    Ok(EvalReport::new(
        run.method.as_str(),
        source.name(),
        run.test_fraction,
        run.seed,
        cm,
        seconds,
    ))
}

/// Every (device, method, fraction, seed) combination, device-major.
pub fn plan(datasets: &[Dataset], cfg: &ExperimentConfig) -> Vec<(usize, RunSpec)> {
    let mut runs = Vec::new();
    for (d, ds) in datasets.iter().enumerate() {
        for &method in &cfg.algorithms {
            for &test_fraction in &cfg.test_fractions {
                for &seed in &cfg.seeds {
                    runs.push((
                        d,
                        RunSpec {
                            device: ds.name().to_string(),
                            method,
                            test_fraction,
                            seed,
                        },
                    ));
                }
            }
        }
    }
    runs
}

/// Runs the whole grid and returns one report per run (sorted).
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    let datasets = cfg.devices.iter().map(DeviceSource::load).collect::<Result<Vec<_>>>()?;
    let runs = plan(&datasets, cfg);
    let execute = || -> Vec<Result<EvalReport>> {
        runs.par_iter()
            .map(|(d, run)| {
                run_one(&datasets[*d], run, cfg).map_err(|e| Error::Run {
                    run: run.to_string(),
                    source: Box::new(e),
                })
            })
            .collect()
    };
    let results = if cfg.jobs == 0 {
        execute()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::invalid(format!("jobs: {e}")))?
            .install(execute)
    };
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(report::sorted(&reports))
}

/// Runs the grid and writes the report directory.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<(Vec<EvalReport>, ReportFiles)> {
    let reports = run_grid(cfg)?;
    let files = report::emit_report(&reports, &cfg.out_dir)?;
    Ok((reports, files))
}

pub const BUNDLE_FORMAT: &str = "rlsurv.bundle";

/// How the source data was partitioned when a model was trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

/// Trained model document written by `train` and read by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    pub algorithm: Method,
    pub device: String,
    pub model: MlpCheckpoint,
    pub scaler: Scaler,
    pub split: SplitRecord,
    pub step_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_config: Option<AgentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ann_config: Option<AnnConfig>,
}

impl ModelBundle {
    pub fn new(model: &FittedModel, device: &str, split: SplitRecord) -> Self {
        let optimizer = model
            .agent_config
            .as_ref()
            .map(|c| c.optimizer)
            .or(model.ann_config.as_ref().map(|c| c.optimizer))
            .unwrap_or_default();
        Self {
            format: BUNDLE_FORMAT.into(),
            version: 1,
            algorithm: model.method,
            device: device.to_string(),
            model: MlpCheckpoint::from_mlp(&model.net, optimizer),
            scaler: model.scaler.clone(),
            split,
            step_count: model.step_count,
            agent_config: model.agent_config.clone(),
            ann_config: model.ann_config.clone(),
        }
    }

    pub fn network(&self) -> Result<Mlp<f64>> {
        if self.format != BUNDLE_FORMAT {
            return Err(Error::Schema(format!("unexpected format `{}`", self.format)));
        }
        self.model.to_mlp()
    }

    /// Recreates the split used in training.
    pub fn splits(&self, source: &Dataset) -> Result<Splits> {
        dataset::split(source, self.split.test_fraction, self.split.val_fraction, self.split.seed)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
