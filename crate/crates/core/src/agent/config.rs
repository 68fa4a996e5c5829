use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{LossKind, OptimizerKind};
use crate::replay::DEFAULT_CAPACITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ddqn,
    Dqn,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ddqn => "ddqn",
            Algorithm::Dqn => "dqn",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonSchedule {
    #[default]
    Linear,
    /// `end + (start - end) * exp(-5 * step / decay_steps)`
    Exponential,
}

pub const DEFAULT_LAYER_SIZES: [usize; 5] = [4, 128, 64, 32, 2];
pub const DESK_TOTAL_STEPS: u64 = 60_000;
pub const FULL_TOTAL_STEPS: u64 = 150_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub target_sync_period: u64,
    pub total_steps: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// `None` decays over the first half of `total_steps`.
    pub epsilon_decay_steps: Option<u64>,
    pub epsilon_schedule: EpsilonSchedule,
    pub layer_sizes: Vec<usize>,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub replay_capacity: usize,
    /// Steps between validation passes during [`train`](crate::agent::train).
    pub eval_interval: u64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ddqn,
            gamma: 0.0,
            learning_rate: 0.0025,
            batch_size: 32,
            target_sync_period: 800,
            total_steps: DESK_TOTAL_STEPS,
            epsilon_start: 1.0,
            epsilon_end: 0.5,
            epsilon_decay_steps: None,
            epsilon_schedule: EpsilonSchedule::Linear,
            layer_sizes: DEFAULT_LAYER_SIZES.to_vec(),
            loss: LossKind::Huber,
            optimizer: OptimizerKind::Adam,
            replay_capacity: DEFAULT_CAPACITY,
            eval_interval: 2_000,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::invalid(format!("{name}: {msg}")));
        if !(0.0..=1.0).contains(&self.gamma) {
            return field("gamma", format!("{} outside [0, 1]", self.gamma));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return field("learning_rate", format!("{} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return field("batch_size", "must be positive".into());
        }
        if self.target_sync_period == 0 {
            return field("target_sync_period", "must be positive".into());
        }
        if !(0.0 <= self.epsilon_end && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return field(
                "epsilon",
                format!(
                    "need 0 <= end ({}) <= start ({}) <= 1",
                    self.epsilon_end, self.epsilon_start
                ),
            );
        }
        if self.epsilon_decay_steps == Some(0) {
            return field("epsilon_decay_steps", "must be positive".into());
        }
        if self.replay_capacity < self.batch_size {
            return field(
                "replay_capacity",
                format!("{} is smaller than batch_size {}", self.replay_capacity, self.batch_size),
            );
        }
        if self.eval_interval == 0 {
            return field("eval_interval", "must be positive".into());
        }
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return field("layer_sizes", format!("{:?} is not a valid topology", self.layer_sizes));
        }
        if self.layer_sizes.last() != Some(&2) {
            return field("layer_sizes", "output layer must have 2 units (NORMAL, FAILURE)".into());
        }
        Ok(())
    }

    pub fn decay_steps(&self) -> u64 {
        self.epsilon_decay_steps.unwrap_or((self.total_steps / 2).max(1))
    }
}

/// Exploration rate at `step`: decays from `epsilon_start` to `epsilon_end`
/// over `decay_steps`, then stays at `epsilon_end`.
pub fn epsilon_at(cfg: &AgentConfig, step: u64) -> f64 {
    let decay = cfg.decay_steps();
    let (start, end) = (cfg.epsilon_start, cfg.epsilon_end);
    match cfg.epsilon_schedule {
        EpsilonSchedule::Linear => {
            if step >= decay {
                end
            } else {
                start + (end - start) * (step as f64 / decay as f64)
            }
        }
        EpsilonSchedule::Exponential => end + (start - end) * (-5.0 * step as f64 / decay as f64).exp(),
    }
}
