//! JSON checkpoint for a network.
//!
//! ```json
//! {
//!   "format": "rlsurv.mlp",
//!   "version": 1,
//!   "scalar": "f64",
//!   "optimizer": "adam",
//!   "layer_sizes": [4, 128, 64, 32, 2],
//!   "weights": [["0.12", "-0.3", ...], ...],
//!   "biases": [["0", ...], ...]
//! }
//! ```
//!
//! `weights[k]` is the row-major `layer_sizes[k+1] x layer_sizes[k]` matrix of
//! layer `k`. Values are decimal strings using the shortest representation
//! that parses back to the same bits, so save/load is exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::mlp::Mlp;
use crate::nn::optim::OptimizerKind;
use crate::scalar::Scalar;

pub const MLP_FORMAT: &str = "rlsurv.mlp";
pub const MLP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub optimizer: OptimizerKind,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<String>>,
    pub biases: Vec<Vec<String>>,
}

fn encode<T: Scalar>(values: &[T]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

fn decode<T: Scalar>(values: &[String], what: &str) -> Result<Vec<T>> {
    values
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<T>()
                .map_err(|_| Error::Schema(format!("{what}[{i}]: `{s}` is not a number")))
        })
        .collect()
}

impl MlpCheckpoint {
    pub fn from_mlp<T: Scalar>(net: &Mlp<T>, optimizer: OptimizerKind) -> Self {
        let layers = net.num_layers();
        Self {
            format: MLP_FORMAT.to_string(),
            version: MLP_VERSION,
            scalar: T::NAME.to_string(),
            optimizer,
            layer_sizes: net.layer_sizes().to_vec(),
            weights: (0..layers).map(|k| encode(net.weights(k))).collect(),
            biases: (0..layers).map(|k| encode(net.biases(k))).collect(),
        }
    }

    pub fn to_mlp<T: Scalar>(&self) -> Result<Mlp<T>> {
        if self.format != MLP_FORMAT {
            return Err(Error::Schema(format!("unexpected format `{}`", self.format)));
        }
        if self.version != MLP_VERSION {
            return Err(Error::Schema(format!("unsupported version {}", self.version)));
        }
        if self.scalar != T::NAME {
            return Err(Error::Schema(format!(
                "checkpoint stores {} parameters, requested {}",
                self.scalar,
                T::NAME
            )));
        }
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| decode(w, &format!("weights[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let biases = self
            .biases
            .iter()
            .enumerate()
            .map(|(k, b)| decode(b, &format!("biases[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        Mlp::from_parts(self.layer_sizes.clone(), weights, biases)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
