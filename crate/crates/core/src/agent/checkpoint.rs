use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentConfig};
use crate::error::{Error, Result};
use crate::nn::MlpCheckpoint;
use crate::scalar::Scalar;

pub const AGENT_FORMAT: &str = "rlsurv.agent";

/// Online network plus the configuration and step count that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub format: String,
    pub version: u32,
    pub model: MlpCheckpoint,
    pub config: AgentConfig,
    pub step_count: u64,
}

impl AgentCheckpoint {
    pub fn from_agent<T: Scalar>(agent: &Agent<T>) -> Self {
        Self {
            format: AGENT_FORMAT.into(),
            version: 1,
            model: MlpCheckpoint::from_mlp(agent.q_net(), agent.config().optimizer),
            config: agent.config().clone(),
            step_count: agent.step_count(),
        }
    }

    pub fn to_agent<T: Scalar>(&self) -> Result<Agent<T>> {
        if self.format != AGENT_FORMAT {
            return Err(Error::Schema(format!("unexpected format `{}`", self.format)));
        }
        Agent::from_network(self.config.clone(), self.model.to_mlp()?, self.step_count)
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = AgentConfig {
            layer_sizes: vec![4, 6, 2],
            seed: 12,
            ..AgentConfig::default()
        };
        let agent = Agent::<f64>::new(cfg).unwrap();
        let ck = AgentCheckpoint::from_agent(&agent);
        let text = serde_json::to_string(&ck).unwrap();
        let back: AgentCheckpoint = serde_json::from_str(&text).unwrap();
        let restored: Agent<f64> = back.to_agent().unwrap();
        assert_eq!(restored.q_net(), agent.q_net());
        assert_eq!(restored.config(), agent.config());
    }
}
