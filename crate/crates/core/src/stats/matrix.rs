use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::signal_io::fmt_real;

/// Subjects × features, with a binary label per row (1 = patient, 0 = control).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    subject_ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl FeatureMatrix {
    pub fn new(
        feature_names: Vec<String>,
        subject_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != subject_ids.len() {
            return Err(Error::ParameterOutOfRange(format!(
                "{} rows, {} labels, {} subject ids",
                rows.len(),
                labels.len(),
                subject_ids.len()
            )));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != feature_names.len()) {
            return Err(Error::ParameterOutOfRange(format!(
                "row {r} has {} values for {} features",
                rows[r].len(),
                feature_names.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::ParameterOutOfRange(format!(
                "label {l} is not binary"
            )));
        }
        Ok(FeatureMatrix {
            feature_names,
            subject_ids,
            rows,
            labels,
        })
    }

    /// Builds a matrix from extracted vectors; `labels` pairs with `vectors`.
    pub fn from_vectors(vectors: &[FeatureVector], labels: &[u8]) -> Result<Self> {
        let names = vectors.first().map(|v| v.names.clone()).unwrap_or_default();
        for v in vectors {
            if v.names != names {
                return Err(Error::FeatureNameMismatch {
                    expected: names,
                    found: v.names.clone(),
                });
            }
        }
        FeatureMatrix::new(
            names,
            vectors.iter().map(|v| v.subject_id.clone()).collect(),
            vectors.iter().map(|v| v.values.clone()).collect(),
            labels.to_vec(),
        )
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// (controls, patients)
    pub fn class_counts(&self) -> (usize, usize) {
        let patients = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - patients, patients)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let (c, p) = self.class_counts();
        if c == 0 || p == 0 {
            return Err(Error::SingleClassInput);
        }
        Ok(())
    }

    /// Same rows with new values/names (row count must match).
    pub fn with_rows(&self, feature_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        FeatureMatrix::new(
            feature_names,
            self.subject_ids.clone(),
            rows,
            self.labels.clone(),
        )
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Self> {
        FeatureMatrix::new(
            self.feature_names.clone(),
            self.subject_ids.clone(),
            self.rows.clone(),
            labels,
        )
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            subject_ids: idx.iter().map(|&i| self.subject_ids[i].clone()).collect(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Columns whose names are listed, in the listed order.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::FeatureNameMismatch {
                        expected: self.feature_names.clone(),
                        found: names.to_vec(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            feature_names: names.to_vec(),
            subject_ids: self.subject_ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    /// Columns whose names start with any of `prefixes`, keeping their order.
    pub fn select_prefixed(&self, prefixes: &[&str]) -> Result<Self> {
        let names: Vec<String> = self
            .feature_names
            .iter()
            .filter(|n| prefixes.iter().any(|p| n.starts_with(p)))
            .cloned()
            .collect();
        if names.is_empty() {
            return Err(Error::ParameterOutOfRange(format!(
                "no features match {prefixes:?}"
            )));
        }
        self.select_features(&names)
    }

    /// Header `subject_id,label,<features...>`, one row per subject.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            write!(out, "subject_id,label")?;
            for n in &self.feature_names {
                write!(out, ",{n}")?;
            }
            writeln!(out)?;
            for ((id, label), row) in self.subject_ids.iter().zip(&self.labels).zip(&self.rows) {
                write!(out, "{id},{label}")?;
                for v in row {
                    write!(out, ",{}", fmt_real(*v))?;
                }
                writeln!(out)?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::malformed(path, e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        if header.len() < 3 || header[0] != "subject_id" || header[1] != "label" {
            return Err(Error::malformed(
                path,
                "header must start with `subject_id,label` and name at least one feature",
            ));
        }
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
            ids.push(record[0].to_owned());
            let label: u8 = record[1]
                .parse()
                .ok()
                .filter(|&l| l <= 1)
                .ok_or_else(|| Error::malformed(path, format!("row {}: bad label", r + 1)))?;
            labels.push(label);
            let row = record
                .iter()
                .skip(2)
                .map(|cell| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            Error::malformed(path, format!("row {}: bad value `{cell}`", r + 1))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        FeatureMatrix::new(header[2..].to_vec(), ids, rows, labels)
    }
}

/// Writes a square or rectangular named matrix: column names in the header,
/// row names in the first column.
pub fn write_named_matrix(
    path: &Path,
    corner: &str,
    row_names: &[String],
    col_names: &[String],
    values: &[Vec<f64>],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(corner);
    for c in col_names {
        text.push(',');
        text.push_str(c);
    }
    text.push('\n');
    for (name, row) in row_names.iter().zip(values) {
        text.push_str(name);
        for v in row {
            text.push(',');
            text.push_str(&fmt_real(*v));
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
