//! Labeled sensor readings: CSV I/O, synthetic device generators, stratified
//! splitting, and train-fitted feature scaling.

mod scale;
mod split;
mod synth;

use std::path::Path;

pub use scale::{ScaleMode, Scaler};
pub use split::{split, Splits};
pub use synth::{generate, preset, DeviceSpec, FailureRegime, PRESETS};

use crate::error::{Error, Result};

pub const FEATURES: [&str; 4] = ["volt", "rotate", "pressure", "vibration"];
pub const NUM_FEATURES: usize = FEATURES.len();
pub const LABEL: &str = "label";

pub type Row = [f64; NUM_FEATURES];

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    rows: Vec<Row>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, rows: Vec<Row>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::invalid(format!("label {} at row {i} is not 0 or 1", labels[i])));
        }
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid(format!("non-finite feature at row {i}")));
        }
        Ok(Self {
            name: name.into(),
            rows,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(normal, failure)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let failures = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - failures, failures)
    }

    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Dataset {
        Dataset {
            name: name.into(),
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = FEATURES.to_vec();
        header.push(LABEL);
        w.write_record(&header)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.into_inner()
            .map_err(|e| Error::io("<memory>", e.into_error()))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let bytes = self.to_csv_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Self::read_csv(file, name)
    }

    /// Parses CSV with header `volt,rotate,pressure,vibration,label`.
    /// Columns are located by name; data rows are numbered from 1.
    pub fn read_csv<R: std::io::Read>(reader: R, name: impl Into<String>) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let column = |want: &str| {
            header
                .iter()
                .position(|h| h == want)
                .ok_or_else(|| Error::Schema(format!("missing column `{want}`")))
        };
        let mut feature_cols = [0usize; NUM_FEATURES];
        for (slot, name) in feature_cols.iter_mut().zip(FEATURES) {
            *slot = column(name)?;
        }
        let label_col = column(LABEL)?;

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row_no = i + 1;
            let rec = rec?;
            let cell = |col: usize, what: &str| {
                rec.get(col).ok_or_else(|| Error::Parse {
                    row: row_no,
                    message: format!("missing `{what}` value"),
                })
            };
            let mut row = [0.0; NUM_FEATURES];
            for (k, (&col, what)) in feature_cols.iter().zip(FEATURES).enumerate() {
                let text = cell(col, what)?;
                let v: f64 = text.parse().map_err(|_| Error::Parse {
                    row: row_no,
                    message: format!("`{what}` value `{text}` is not numeric"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: row_no,
                        message: format!("`{what}` value `{text}` is not finite"),
                    });
                }
                row[k] = v;
            }
            let text = cell(label_col, LABEL)?;
            let label: i64 = text.parse().map_err(|_| Error::Parse {
                row: row_no,
                message: format!("label `{text}` is not an integer"),
            })?;
            if label != 0 && label != 1 {
                return Err(Error::Schema(format!("row {row_no}: label {label} is not 0 or 1")));
            }
            rows.push(row);
            labels.push(label as u8);
        }
        Dataset::new(name, rows, labels)
    }
}
