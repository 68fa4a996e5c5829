//! Binary classification metrics with FAILURE (label 1) as the positive class.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FEATURES, NUM_FEATURES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

pub fn confusion(preds: &[u8], labels: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&p, &y)) in preds.iter().zip(labels).enumerate() {
        match (p, y) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            (0, 0) => cm.tn += 1,
            _ => return Err(Error::invalid(format!("entry {i}: ({p}, {y}) is not binary"))),
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; 0 when undefined.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

pub fn f1(cm: &ConfusionMatrix) -> f64 {
    cm.f1()
}

/// One evaluated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub algorithm: String,
    pub device: String,
    pub test_fraction: f64,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub train_seconds: f64,
}

impl EvalReport {
    pub fn new(
        algorithm: impl Into<String>,
        device: impl Into<String>,
        test_fraction: f64,
        seed: u64,
        confusion: ConfusionMatrix,
        train_seconds: f64,
    ) -> Self {
        Self {
            algorithm: algorithm.into(),
            device: device.into(),
            test_fraction,
            seed,
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
            confusion,
            train_seconds,
        }
    }
}

/// Training and test envelope of one feature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRange {
    pub feature: String,
    pub train_min: f64,
    pub train_max: f64,
    pub test_min: f64,
    pub test_max: f64,
    /// Test minimum below the training minimum.
    pub below_train: bool,
    /// Test maximum above the training maximum.
    pub above_train: bool,
}

impl FeatureRange {
    pub fn flags(&self) -> usize {
        usize::from(self.below_train) + usize::from(self.above_train)
    }
}

fn envelope(ds: &Dataset, k: usize) -> (f64, f64) {
    ds.rows()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[k]), hi.max(r[k])))
}

pub fn range_table(train: &Dataset, test: &Dataset) -> Result<Vec<FeatureRange>> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("range table needs non-empty train and test sets"));
    }
    Ok((0..NUM_FEATURES)
        .map(|k| {
            let (train_min, train_max) = envelope(train, k);
            let (test_min, test_max) = envelope(test, k);
            FeatureRange {
                feature: FEATURES[k].to_string(),
                train_min,
                train_max,
                test_min,
                test_max,
                below_train: test_min < train_min,
                above_train: test_max > train_max,
            }
        })
        .collect())
}

/// Total number of test bounds outside the training envelope.
pub fn out_of_range_bounds(table: &[FeatureRange]) -> usize {
    table.iter().map(FeatureRange::flags).sum()
}

/// Reads a `row_index,pred` CSV produced by an external model.
pub fn read_predictions<R: std::io::Read>(reader: R) -> Result<BTreeMap<usize, u8>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let (idx_col, pred_col) = (col("row_index")?, col("pred")?);
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let parse = |c: usize| -> Result<i64> {
            let text = rec.get(c).unwrap_or("");
            text.parse().map_err(|_| Error::Parse {
                row,
                message: format!("`{text}` is not an integer"),
            })
        };
        let (idx, pred) = (parse(idx_col)?, parse(pred_col)?);
        if idx < 0 {
            return Err(Error::Schema(format!("row {row}: negative row_index {idx}")));
        }
        if pred != 0 && pred != 1 {
            return Err(Error::Schema(format!("row {row}: prediction {pred} is not 0 or 1")));
        }
        if out.insert(idx as usize, pred as u8).is_some() {
            return Err(Error::Schema(format!("row {row}: duplicate row_index {idx}")));
        }
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<BTreeMap<usize, u8>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file)
}

/// Joins external predictions (keyed by source-dataset row index) against the
/// labels of the rows listed in `indices`. Every listed row needs a prediction.
pub fn join_predictions(
    predictions: &BTreeMap<usize, u8>,
    source: &Dataset,
    indices: &[usize],
) -> Result<ConfusionMatrix> {
    let mut preds = Vec::with_capacity(indices.len());
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        let p = predictions
            .get(&i)
            .ok_or_else(|| Error::Schema(format!("no prediction for row_index {i}")))?;
        preds.push(*p);
        labels.push(source.labels()[i]);
    }
    confusion(&preds, &labels)
}
