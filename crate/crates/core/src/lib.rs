//! Rare-event failure classification framed as reinforcement learning.
//!
//! Each sensor reading is a state, the agent's action is a class guess, and a
//! class-balanced reward scores the guess. DQN and DDQN agents are trained
//! with experience replay and a periodically synced target network, and are
//! compared against a supervised network of the same shape on F1 with the
//! failure class as positive.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the CLI uses.

pub mod agent;
pub mod ann;
pub mod dataset;
pub mod env;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod replay;
pub mod report;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = matrix::Matrix<f64>;
pub type Mlp64 = nn::Mlp<f64>;
pub type Mlp32 = nn::Mlp<f32>;
pub type Optimizer64 = nn::Optimizer<f64>;
pub type GradientSet64 = nn::GradientSet<f64>;
pub type Transition64 = replay::Transition<f64>;
pub type ReplayBuffer64 = replay::ReplayBuffer<f64>;
pub type Env64 = env::ClassificationEnv<f64>;
pub type Agent64 = agent::Agent<f64>;
pub type Agent32 = agent::Agent<f32>;
