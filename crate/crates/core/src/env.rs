//! Labeled rows presented as an episodic environment.
//!
//! The state is one scaled sensor row, the action is a class guess
//! (`0 = NORMAL`, `1 = FAILURE`), and the reward says whether the guess was
//! right. An episode is one (optionally shuffled) pass over the rows.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::replay::FAILURE;
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RewardScheme {
    /// `±lambda` on FAILURE rows, `±1` on NORMAL rows.
    #[default]
    Balanced,
    /// `±1` everywhere.
    Unit,
}

impl std::str::FromStr for RewardScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "balanced" => Ok(RewardScheme::Balanced),
            "unit" => Ok(RewardScheme::Unit),
            other => Err(format!("unknown reward scheme `{other}` (balanced|unit)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub reward_scheme: RewardScheme,
    /// Fixed minority weight; `None` means `n_normal / n_failure` of the rows.
    pub minority_weight: Option<f64>,
    pub shuffle_each_episode: bool,
    /// Defaults to the number of rows.
    pub episode_length: Option<usize>,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            reward_scheme: RewardScheme::Balanced,
            minority_weight: None,
            shuffle_each_episode: true,
            episode_length: None,
            seed: 0,
        }
    }
}

/// Reward for guessing `action` on a row labeled `label`: positive iff they match.
pub fn reward_for(action: u8, label: u8, scheme: RewardScheme, minority_weight: f64) -> f64 {
    let magnitude = match scheme {
        RewardScheme::Balanced if label == FAILURE => minority_weight,
        _ => 1.0,
    };
    if action == label {
        magnitude
    } else {
        -magnitude
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub reward: T,
    pub next_state: Vec<T>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ClassificationEnv<T> {
    features: Vec<Vec<T>>,
    labels: Vec<u8>,
    config: EnvConfig,
    minority_weight: f64,
    episode_length: usize,
    ordering: Vec<usize>,
    cursor: usize,
    done: bool,
    started: bool,
    rng: seed::Rng,
}

impl<T: Scalar> ClassificationEnv<T> {
    pub fn new(data: &Dataset, config: EnvConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("environment needs at least one row"));
        }
        let (n_normal, n_failure) = data.class_counts();
        let minority_weight = match (config.reward_scheme, config.minority_weight) {
            (_, Some(w)) => {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::invalid(format!("minority weight must be positive, got {w}")));
                }
                w
            }
            (RewardScheme::Balanced, None) => {
                if n_failure == 0 || n_normal == 0 {
                    return Err(Error::invalid("balanced rewards need both classes present"));
                }
                // at least 1 when failures are the minority
                (n_normal as f64 / n_failure as f64).max(1.0)
            }
            (RewardScheme::Unit, None) => 1.0,
        };
        let episode_length = config.episode_length.unwrap_or(data.len());
        if episode_length == 0 || episode_length > data.len() {
            return Err(Error::invalid(format!(
                "episode length {episode_length} must be in 1..={}",
                data.len()
            )));
        }
        let features = data
            .rows()
            .iter()
            .map(|r| r.iter().map(|&v| T::lit(v)).collect())
            .collect();
        Ok(Self {
            features,
            labels: data.labels().to_vec(),
            minority_weight,
            episode_length,
            ordering: (0..data.len()).collect(),
            cursor: 0,
            done: true,
            started: false,
            rng: seed::rng(config.seed, "env"),
            config,
        })
    }

    pub fn minority_weight(&self) -> f64 {
        self.minority_weight
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn episode_length(&self) -> usize {
        self.episode_length
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// Starts a new episode and returns its first state.
    pub fn reset(&mut self) -> Vec<T> {
        if self.config.shuffle_each_episode {
            self.ordering.shuffle(&mut self.rng);
        }
        self.cursor = 0;
        self.done = false;
        self.started = true;
        self.current_state().to_vec()
    }

    pub fn current_state(&self) -> &[T] {
        &self.features[self.ordering[self.cursor]]
    }

    pub fn current_label(&self) -> u8 {
        self.labels[self.ordering[self.cursor]]
    }

    pub fn reward(&self, action: u8, label: u8) -> f64 {
        reward_for(action, label, self.config.reward_scheme, self.minority_weight)
    }

    /// Scores `action` against the current row and advances.
    ///
    /// At the end of the episode `next_state` repeats the last row and `done` is set.
    pub fn step(&mut self, action: u8) -> Result<StepOutcome<T>> {
        if !self.started || self.done {
            return Err(Error::InvalidState("step called on a finished episode; reset first".into()));
        }
        if action > FAILURE {
            return Err(Error::invalid(format!("action {action} is not 0 or 1")));
        }
        let reward = T::lit(self.reward(action, self.current_label()));
        if self.cursor + 1 >= self.episode_length {
            self.done = true;
            return Ok(StepOutcome {
                reward,
                next_state: self.current_state().to_vec(),
                done: true,
            });
        }
        self.cursor += 1;
        Ok(StepOutcome {
            reward,
            next_state: self.current_state().to_vec(),
            done: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::NORMAL;
    use proptest::prelude::*;

    fn data(labels: &[u8]) -> Dataset {
        let rows = (0..labels.len()).map(|i| [i as f64, 0.0, 0.0, 0.0]).collect();
        Dataset::new("env", rows, labels.to_vec()).unwrap()
    }

    fn fixed(labels: &[u8], scheme: RewardScheme) -> ClassificationEnv<f64> {
        let cfg = EnvConfig {
            reward_scheme: scheme,
            shuffle_each_episode: false,
            ..EnvConfig::default()
        };
        ClassificationEnv::new(&data(labels), cfg).unwrap()
    }

    #[test]
    fn single_row_reset() {
        let mut env = fixed(&[1], RewardScheme::Unit);
        assert_eq!(env.reset(), vec![0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unshuffled_starts_at_first_row() {
        let mut env = fixed(&[0, 1, 0], RewardScheme::Unit);
        assert_eq!(env.reset()[0], 0.0);
    }

    #[test]
    fn seeded_shuffles_repeat() {
        let cfg = EnvConfig { seed: 4, ..EnvConfig::default() };
        let labels = [0, 0, 1, 0, 0, 1, 0, 0];
        let mut a = ClassificationEnv::<f64>::new(&data(&labels), cfg.clone()).unwrap();
        let mut b = ClassificationEnv::<f64>::new(&data(&labels), cfg).unwrap();
        a.reset();
        b.reset();
        assert_eq!(a.ordering(), b.ordering());
    }

    #[test]
    fn unit_reward_for_correct_normal() {
        let mut env = fixed(&[0, 0], RewardScheme::Unit);
        env.reset();
        assert_eq!(env.step(NORMAL).unwrap().reward, 1.0);
    }

    #[test]
    fn balanced_penalty_uses_imbalance_ratio() {
        // 198 normal rows per failure row
        let mut labels = vec![0u8; 198];
        labels.push(1);
        let mut env = fixed(&labels, RewardScheme::Balanced);
        assert_eq!(env.minority_weight(), 198.0);
        env.reset();
        for _ in 0..198 {
            env.step(NORMAL).unwrap();
        }
        let out = env.step(NORMAL).unwrap();
        assert_eq!(out.reward, -198.0);
        assert!(out.done);
    }

    #[test]
    fn episode_ends_at_length() {
        let cfg = EnvConfig {
            episode_length: Some(2),
            shuffle_each_episode: false,
            ..EnvConfig::default()
        };
        let mut env = ClassificationEnv::<f64>::new(&data(&[0, 1, 0]), cfg).unwrap();
        env.reset();
        let first = env.step(0).unwrap();
        assert!(!first.done);
        assert_eq!(first.next_state[0], 1.0);
        let second = env.step(0).unwrap();
        assert!(second.done);
        assert_eq!(second.next_state[0], 1.0);
        assert!(matches!(env.step(0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn step_before_reset_and_bad_action() {
        let mut env = fixed(&[0, 1], RewardScheme::Unit);
        assert!(matches!(env.step(0), Err(Error::InvalidState(_))));
        env.reset();
        assert!(matches!(env.step(2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reward_table() {
        assert_eq!(reward_for(1, 1, RewardScheme::Unit, 50.0), 1.0);
        assert_eq!(reward_for(0, 0, RewardScheme::Balanced, 50.0), 1.0);
        let lambda = 8717.0 / 44.0;
        let r = reward_for(0, 1, RewardScheme::Balanced, lambda);
        assert!((r + 198.1136).abs() < 1e-4, "{r}");
    }

    #[test]
    fn perfect_policy_attains_reward_bound() {
        let labels = [0, 0, 0, 1, 0, 0, 1, 0, 0, 0];
        let cfg = EnvConfig { seed: 2, ..EnvConfig::default() };
        let mut env = ClassificationEnv::<f64>::new(&data(&labels), cfg).unwrap();
        env.reset();
        let lambda = env.minority_weight();
        let mut total = 0.0;
        loop {
            let out = env.step(env.current_label()).unwrap();
            total += out.reward;
            if out.done {
                break;
            }
        }
        assert_eq!(total, 8.0 + 2.0 * lambda);
    }

    proptest! {
        #[test]
        fn rewards_are_antisymmetric(a in 0u8..2, y in 0u8..2, unit in any::<bool>(), w in 1.0f64..500.0) {
            let scheme = if unit { RewardScheme::Unit } else { RewardScheme::Balanced };
            prop_assert_eq!(reward_for(a, y, scheme, w), -reward_for(1 - a, y, scheme, w));
        }

        #[test]
        fn episode_reward_never_exceeds_bound(actions in proptest::collection::vec(0u8..2, 12)) {
            let labels = [0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0];
            let cfg = EnvConfig { seed: 9, ..EnvConfig::default() };
            let mut env = ClassificationEnv::<f64>::new(&data(&labels), cfg).unwrap();
            env.reset();
            let bound = 10.0 + 2.0 * env.minority_weight();
            let total: f64 = actions.iter().map(|&a| env.step(a).unwrap().reward).sum();
            prop_assert!(total <= bound);
        }
    }
}
