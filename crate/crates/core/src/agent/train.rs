use std::time::Instant;

use serde::Serialize;

use super::{predict_with, states_of, Agent, AgentConfig};
use crate::dataset::Dataset;
use crate::env::{ClassificationEnv, EnvConfig};
use crate::error::{Error, Result};
use crate::metrics::confusion;
use crate::nn::Mlp;
use crate::scalar::Scalar;

/// Validation snapshot taken every `eval_interval` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub step: u64,
    pub epsilon: f64,
    /// Mean batch loss since the previous point (NaN before learning starts).
    pub mean_loss: f64,
    pub mean_reward: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Agent whose networks hold the best-validation snapshot.
    pub agent: Agent<T>,
    pub curve: Vec<CurvePoint>,
    pub best_step: u64,
    pub best_val_f1: f64,
    pub train_seconds: f64,
}

fn val_f1<T: Scalar>(net: &Mlp<T>, val: &Dataset) -> Result<f64> {
    if val.is_empty() {
        return Ok(0.0);
    }
    let preds = predict_with(net, &states_of::<T>(val))?;
    Ok(confusion(&preds, val.labels())?.f1())
}

/// Runs `cfg.total_steps` agent steps on `train_set` and returns the snapshot
/// with the best validation F1 (greedy policy), taking the latest one on ties.
/// With an empty validation set the final parameters are returned.
pub fn train<T: Scalar>(
    cfg: &AgentConfig,
    env_cfg: &EnvConfig,
    train_set: &Dataset,
    val_set: &Dataset,
) -> Result<TrainOutcome<T>> {
    let (n_normal, n_failure) = train_set.class_counts();
    if n_normal == 0 || n_failure == 0 {
        return Err(Error::invalid(format!(
            "training set needs both classes, has {n_normal} normal / {n_failure} failure rows"
        )));
    }
    let started = Instant::now();
    let mut agent = Agent::<T>::new(cfg.clone())?;
    let mut env = ClassificationEnv::<T>::new(train_set, env_cfg.clone())?;
    env.reset();

    let use_val = !val_set.is_empty();
    let mut best_net = agent.q_net().clone();
    let mut best_f1 = if use_val { val_f1(agent.q_net(), val_set)? } else { 0.0 };
    let mut best_step = 0;
    let mut curve = Vec::new();
    let (mut loss_sum, mut loss_n, mut reward_sum, mut reward_n) = (0.0, 0u64, 0.0, 0u64);

    for _ in 0..cfg.total_steps {
        let report = agent.train_step(&mut env)?;
        reward_sum += report.reward;
        reward_n += 1;
        if let Some(l) = report.loss {
            loss_sum += l;
            loss_n += 1;
        }
        if report.step % cfg.eval_interval == 0 || report.step == cfg.total_steps {
            let f1 = if use_val { val_f1(agent.q_net(), val_set)? } else { 0.0 };
            curve.push(CurvePoint {
                step: report.step,
                epsilon: report.epsilon,
                mean_loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { f64::NAN },
                mean_reward: reward_sum / reward_n as f64,
                val_f1: f1,
            });
            (loss_sum, loss_n, reward_sum, reward_n) = (0.0, 0, 0.0, 0);
            if !use_val || f1 >= best_f1 {
                best_f1 = f1;
                best_step = report.step;
                best_net = agent.q_net().clone();
            }
        }
    }

    let train_seconds = started.elapsed().as_secs_f64();
    if best_step != agent.step_count() {
        let (q, t) = agent.networks_mut();
        q.copy_from(&best_net)?;
        t.copy_from(&best_net)?;
    }
    Ok(TrainOutcome {
        agent,
        curve,
        best_step,
        best_val_f1: best_f1,
        train_seconds,
    })
}
