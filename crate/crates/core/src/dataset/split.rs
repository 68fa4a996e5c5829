use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// Stratified train/validation/test partition. Index lists refer to rows of
/// the source dataset and are sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl Splits {
    pub fn train(&self, ds: &Dataset) -> Dataset {
        ds.subset(&self.train_indices, format!("{}/train", ds.name()))
    }

    pub fn val(&self, ds: &Dataset) -> Dataset {
        ds.subset(&self.val_indices, format!("{}/val", ds.name()))
    }

    pub fn test(&self, ds: &Dataset) -> Dataset {
        ds.subset(&self.test_indices, format!("{}/test", ds.name()))
    }
}

/// Per class: `round(test_fraction * n)` rows go to test, then
/// `round(val_fraction_of_train * rest)` of the remainder to validation.
pub fn split(ds: &Dataset, test_fraction: f64, val_fraction_of_train: f64, seed: u64) -> Result<Splits> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&val_fraction_of_train) {
        return Err(Error::invalid(format!(
            "validation fraction {val_fraction_of_train} outside [0, 1)"
        )));
    }
    let mut rng = seed::rng(seed, "split");
    let mut out = Splits {
        train_indices: Vec::new(),
        val_indices: Vec::new(),
        test_indices: Vec::new(),
    };
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i] == class).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_test = ((test_fraction * n as f64).round() as usize).min(n);
        let n_val = (val_fraction_of_train * (n - n_test) as f64).round() as usize;
        let n_train = n - n_test - n_val;
        if class == 1 && n_train < 2 {
            return Err(Error::invalid(format!(
                "{n} failure rows leave {n_train} for training; at least 2 are needed"
            )));
        }
        out.test_indices.extend_from_slice(&idx[..n_test]);
        out.val_indices.extend_from_slice(&idx[n_test..n_test + n_val]);
        out.train_indices.extend_from_slice(&idx[n_test + n_val..]);
    }
    out.train_indices.sort_unstable();
    out.val_indices.sort_unstable();
    out.test_indices.sort_unstable();
    Ok(out)
}
