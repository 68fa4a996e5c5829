use serde::{Deserialize, Serialize};

use super::{Dataset, Row, NUM_FEATURES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    #[default]
    Minmax,
    Zscore,
}

/// Per-feature affine map `(x - offset) / divisor`, fitted on a training split.
///
/// Rows outside the training envelope are mapped outside `[0, 1]` (minmax);
/// nothing is clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mode: ScaleMode,
    pub min: Row,
    pub max: Row,
    pub offset: Row,
    pub divisor: Row,
}

impl Scaler {
    pub fn fit(train: &Dataset, mode: ScaleMode) -> Result<Scaler> {
        if train.is_empty() {
            return Err(Error::invalid("cannot fit a scaler on an empty dataset"));
        }
        let mut min = [f64::INFINITY; NUM_FEATURES];
        let mut max = [f64::NEG_INFINITY; NUM_FEATURES];
        let mut sum = [0.0; NUM_FEATURES];
        for row in train.rows() {
            for k in 0..NUM_FEATURES {
                min[k] = min[k].min(row[k]);
                max[k] = max[k].max(row[k]);
                sum[k] += row[k];
            }
        }
        let n = train.len() as f64;
        let (offset, divisor) = match mode {
            ScaleMode::Minmax => (min, std::array::from_fn(|k| max[k] - min[k])),
            ScaleMode::Zscore => {
                let mean: Row = std::array::from_fn(|k| sum[k] / n);
                let mut var = [0.0; NUM_FEATURES];
                for row in train.rows() {
                    for k in 0..NUM_FEATURES {
                        var[k] += (row[k] - mean[k]).powi(2);
                    }
                }
                (mean, std::array::from_fn(|k| (var[k] / n).sqrt()))
            }
        };
        // constant features map to 0
        let divisor = divisor.map(|d| if d > 0.0 { d } else { 1.0 });
        Ok(Scaler {
            mode,
            min,
            max,
            offset,
            divisor,
        })
    }

    pub fn transform_row(&self, row: &Row) -> Row {
        std::array::from_fn(|k| (row[k] - self.offset[k]) / self.divisor[k])
    }

    pub fn inverse_row(&self, row: &Row) -> Row {
        std::array::from_fn(|k| row[k] * self.divisor[k] + self.offset[k])
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let rows = ds.rows().iter().map(|r| self.transform_row(r)).collect();
        Dataset::new(ds.name(), rows, ds.labels().to_vec()).expect("affine map keeps rows finite")
    }
}
