//! DQN and DDQN agents.
//!
//! The online network (`q_net`) maps a state to one Q-value per action and is
//! the only network trained. The target network supplies next-state values for
//! the TD target and is refreshed by copying `q_net` every
//! `target_sync_period` steps.
//!
//! * DQN target: `r + gamma * max_a Q_target(s', a)`
//! * DDQN target: `r + gamma * Q_target(s', argmax_a Q_online(s', a))`
//!
//! Terminal transitions drop the bootstrap term.

mod checkpoint;
mod config;
mod train;

use rand::Rng as _;

pub use checkpoint::AgentCheckpoint;
pub use config::{
    epsilon_at, AgentConfig, Algorithm, EpsilonSchedule, DEFAULT_LAYER_SIZES, DESK_TOTAL_STEPS,
    FULL_TOTAL_STEPS,
};
pub use train::{train, CurvePoint, TrainOutcome};

use crate::env::ClassificationEnv;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{copy_weights, Mlp, Optimizer};
use crate::replay::{ReplayBuffer, Transition};
use crate::scalar::Scalar;
use crate::seed;

/// Index of the largest value; ties go to the lowest index.
pub fn greedy_action<T: Scalar>(q: &[T]) -> u8 {
    let mut best = 0;
    for (i, v) in q.iter().enumerate().skip(1) {
        if *v > q[best] {
            best = i;
        }
    }
    best as u8
}

/// Outcome of one [`Agent::train_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub epsilon: f64,
    pub action: u8,
    pub reward: f64,
    /// `None` while the replay buffer is still warming up.
    pub loss: Option<f64>,
    pub synced: bool,
    pub episode_done: bool,
}

#[derive(Debug, Clone)]
pub struct Agent<T> {
    q_net: Mlp<T>,
    target_net: Mlp<T>,
    optimizer: Optimizer<T>,
    buffer: ReplayBuffer<T>,
    config: AgentConfig,
    step_count: u64,
    rng: seed::Rng,
}

impl<T: Scalar> Agent<T> {
    pub fn new(config: AgentConfig) -> Result<Self> {
        config.validate()?;
        let q_net = Mlp::new(&config.layer_sizes, seed::derive(config.seed, "q-net"))?;
        let target_net = q_net.clone();
        let optimizer = Optimizer::new(config.optimizer, config.learning_rate, &q_net)?;
        let buffer = ReplayBuffer::new(
            config.replay_capacity,
            config.layer_sizes[0],
            seed::derive(config.seed, "agent-replay"),
        )?;
        Ok(Self {
            q_net,
            target_net,
            optimizer,
            buffer,
            rng: seed::rng(config.seed, "explore"),
            config,
            step_count: 0,
        })
    }

    /// Wraps an existing online network (e.g. loaded from a checkpoint).
    pub fn from_network(config: AgentConfig, q_net: Mlp<T>, step_count: u64) -> Result<Self> {
        let mut agent = Self::new(AgentConfig {
            layer_sizes: q_net.layer_sizes().to_vec(),
            ..config
        })?;
        agent.target_net = q_net.clone();
        agent.optimizer = Optimizer::new(agent.config.optimizer, agent.config.learning_rate, &q_net)?;
        agent.q_net = q_net;
        agent.step_count = step_count;
        Ok(agent)
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn q_net(&self) -> &Mlp<T> {
        &self.q_net
    }

    pub fn target_net(&self) -> &Mlp<T> {
        &self.target_net
    }

    /// Direct access for tests and tooling; training code never writes the
    /// target network except through a sync.
    pub fn networks_mut(&mut self) -> (&mut Mlp<T>, &mut Mlp<T>) {
        (&mut self.q_net, &mut self.target_net)
    }

    pub fn buffer(&self) -> &ReplayBuffer<T> {
        &self.buffer
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn epsilon(&self) -> f64 {
        epsilon_at(&self.config, self.step_count)
    }

    /// Epsilon-greedy choice over the online network's Q-values.
    pub fn select_action(&mut self, state: &[T], epsilon: f64) -> Result<u8> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1]")));
        }
        let explore: f64 = self.rng.random();
        if explore < epsilon {
            return Ok(self.rng.random_range(0..self.q_net.output_dim()) as u8);
        }
        Ok(greedy_action(&self.q_net.forward_one(state)?))
    }

    fn next_states(batch: &[Transition<T>]) -> Result<Matrix<T>> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        Matrix::from_rows(&batch.iter().map(|t| t.next_state.as_slice()).collect::<Vec<_>>())
    }

    /// `r + gamma * max_a Q_target(s', a)` per transition.
    pub fn compute_targets_dqn(&self, batch: &[Transition<T>]) -> Result<Vec<T>> {
        if self.config.gamma == 0.0 {
            return Ok(Self::rewards(batch));
        }
        let gamma = T::lit(self.config.gamma);
        let next_q = self.target_net.forward(&Self::next_states(batch)?)?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.terminal {
                    return t.reward;
                }
                let row = next_q.row(i);
                let best = row.iter().copied().fold(T::neg_infinity(), T::max);
                t.reward + gamma * best
            })
            .collect())
    }

    /// `r + gamma * Q_target(s', argmax_a Q_online(s', a))` per transition.
    pub fn compute_targets_ddqn(&self, batch: &[Transition<T>]) -> Result<Vec<T>> {
        if self.config.gamma == 0.0 {
            return Ok(Self::rewards(batch));
        }
        let gamma = T::lit(self.config.gamma);
        let next = Self::next_states(batch)?;
        let online = self.q_net.forward(&next)?;
        let target = self.target_net.forward(&next)?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.terminal {
                    return t.reward;
                }
                let a = greedy_action(online.row(i)) as usize;
                t.reward + gamma * target.get(i, a)
            })
            .collect())
    }

    /// With `gamma == 0` the bootstrap term vanishes and no next-state pass is run.
    fn rewards(batch: &[Transition<T>]) -> Vec<T> {
        batch.iter().map(|t| t.reward).collect()
    }

    pub fn compute_targets(&self, batch: &[Transition<T>]) -> Result<Vec<T>> {
        match self.config.algorithm {
            Algorithm::Dqn => self.compute_targets_dqn(batch),
            Algorithm::Ddqn => self.compute_targets_ddqn(batch),
        }
    }

    /// Loss and output-layer gradient for a batch. Only the taken action's
    /// output receives gradient.
    pub fn batch_loss(&self, batch: &[Transition<T>]) -> Result<(T, Matrix<T>, crate::nn::ForwardTrace<T>)> {
        let targets = self.compute_targets(batch)?;
        let states = Matrix::from_rows(&batch.iter().map(|t| t.state.as_slice()).collect::<Vec<_>>())?;
        let trace = self.q_net.forward_trace(&states)?;
        let q = trace.output();
        let taken: Vec<T> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| q.get(i, t.action as usize))
            .collect();
        let (loss, grad) = self.config.loss.loss_and_grad(&taken, &targets)?;
        let mut output_grads = Matrix::zeros(batch.len(), q.cols());
        for (i, (t, g)) in batch.iter().zip(grad).enumerate() {
            output_grads.set(i, t.action as usize, g);
        }
        Ok((loss, output_grads, trace))
    }

    /// One gradient step on `q_net` from a replay batch. `None` while the
    /// buffer holds fewer than `batch_size` transitions.
    pub fn learn(&mut self) -> Result<Option<T>> {
        if !self.buffer.is_ready(self.config.batch_size) {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.config.batch_size)?;
        let (loss, output_grads, trace) = self.batch_loss(&batch)?;
        let grads = self.q_net.backward_from_trace(&trace, &output_grads)?;
        self.optimizer.step(&mut self.q_net, &grads)?;
        Ok(Some(loss))
    }

    pub fn sync_target(&mut self) -> Result<()> {
        copy_weights(&self.q_net, &mut self.target_net)
    }

    /// Act, observe, store, learn, and sync on schedule.
    pub fn train_step(&mut self, env: &mut ClassificationEnv<T>) -> Result<StepReport> {
        if env.is_done() {
            env.reset();
        }
        let state = env.current_state().to_vec();
        let epsilon = self.epsilon();
        let action = self.select_action(&state, epsilon)?;
        let outcome = env.step(action)?;
        let reward = outcome.reward;
        self.buffer.push(Transition {
            state,
            action,
            reward,
            next_state: outcome.next_state,
            terminal: outcome.done,
        })?;
        let loss = self.learn()?;
        self.step_count += 1;
        let synced = self.step_count % self.config.target_sync_period == 0;
        if synced {
            self.sync_target()?;
        }
        if outcome.done {
            env.reset();
        }
        Ok(StepReport {
            step: self.step_count,
            epsilon,
            action,
            reward: reward.to_f64().unwrap_or(f64::NAN),
            loss: loss.and_then(|l| l.to_f64()),
            synced,
            episode_done: outcome.done,
        })
    }

    /// Greedy action per row of `states`; the target network is not used.
    pub fn predict(&self, states: &Matrix<T>) -> Result<Vec<u8>> {
        let q = self.q_net.forward(states)?;
        Ok(q.iter_rows().map(greedy_action).collect())
    }
}

/// Greedy prediction with a bare network (shared by agents and the ANN baseline).
pub fn predict_with<T: Scalar>(net: &Mlp<T>, states: &Matrix<T>) -> Result<Vec<u8>> {
    Ok(net.forward(states)?.iter_rows().map(greedy_action).collect())
}

/// Converts dataset rows into a state matrix.
pub fn states_of<T: Scalar>(ds: &crate::dataset::Dataset) -> Matrix<T> {
    let rows: Vec<Vec<T>> = ds
        .rows()
        .iter()
        .map(|r| r.iter().map(|&v| T::lit(v)).collect())
        .collect();
    if rows.is_empty() {
        return Matrix::zeros(0, crate::dataset::NUM_FEATURES);
    }
    Matrix::from_rows(&rows).expect("dataset rows share a width")
}
