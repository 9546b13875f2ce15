use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Confusion, EvalResult, PcaMode};
use crate::error::{Error, Result};

/// How the grid was evaluated; recorded because the choices are ours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub folds: usize,
    pub fold_assignment: String,
    pub metrics: String,
    pub pca_mode: PcaMode,
}

impl Protocol {
    pub fn stratified_pooled(folds: usize, pca_mode: PcaMode) -> Self {
        Protocol {
            folds,
            fold_assignment: "stratified".into(),
            metrics: "pooled".into(),
            pca_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub run_id: String,
    pub seed: u64,
    pub config_digest: String,
    pub protocol: Protocol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub classifier: String,
    pub features: String,
    pub accuracy_pct: f64,
    pub auc: f64,
    pub confusion: Confusion,
}

impl GridCell {
    pub fn new(
        classifier: impl Into<String>,
        features: impl Into<String>,
        result: &EvalResult,
    ) -> Self {
        GridCell {
            classifier: classifier.into(),
            features: features.into(),
            accuracy_pct: result.accuracy_pct,
            auc: result.auc,
            confusion: result.confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMargin {
    pub classifier: String,
    pub mean_accuracy_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetMargin {
    pub features: String,
    pub mean_accuracy_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub per_classifier: Vec<ClassifierMargin>,
    pub per_feature_set: Vec<FeatureSetMargin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainedVariance {
    pub m: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub seed: u64,
    pub config_digest: String,
    pub protocol: Protocol,
    pub grid: Vec<GridCell>,
    pub margins: Margins,
    pub explained_variance: Vec<ExplainedVariance>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl Report {
    /// Row labels in first-appearance order.
    pub fn classifiers(&self) -> Vec<String> {
        first_seen(self.grid.iter().map(|c| c.classifier.as_str()))
    }

    /// Column labels in first-appearance order.
    pub fn feature_sets(&self) -> Vec<String> {
        first_seen(self.grid.iter().map(|c| c.features.as_str()))
    }

    pub fn cell(&self, classifier: &str, features: &str) -> Option<&GridCell> {
        self.grid
            .iter()
            .find(|c| c.classifier == classifier && c.features == features)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Table-shaped CSV: one row per classifier with accuracy and AUC per
    /// feature set, the classifier's mean accuracy, and a final row of
    /// per-feature-set means.
    pub fn to_csv(&self) -> String {
        let classifiers = self.classifiers();
        let sets = self.feature_sets();
        let mut out = String::from("classifier");
        for s in &sets {
            out.push_str(&format!(",{s} accuracy_pct,{s} auc"));
        }
        out.push_str(",mean_accuracy_pct\n");
        for (c, margin) in classifiers.iter().zip(&self.margins.per_classifier) {
            out.push_str(c);
            for s in &sets {
                match self.cell(c, s) {
                    Some(cell) => out.push_str(&format!(",{},{}", cell.accuracy_pct, cell.auc)),
                    None => out.push_str(",,"),
                }
            }
            out.push_str(&format!(",{}\n", margin.mean_accuracy_pct));
        }
        out.push_str("mean_accuracy_pct");
        for m in &self.margins.per_feature_set {
            out.push_str(&format!(",{},", m.mean_accuracy_pct));
        }
        out.push_str(",\n");
        out
    }
}

pub fn build_report(
    meta: ReportMeta,
    grid: Vec<GridCell>,
    explained_variance: Vec<ExplainedVariance>,
) -> Result<Report> {
    if grid.is_empty() {
        return Err(Error::ParameterOutOfRange(
            "report needs at least one result".into(),
        ));
    }
    let classifiers = first_seen(grid.iter().map(|c| c.classifier.as_str()));
    let sets = first_seen(grid.iter().map(|c| c.features.as_str()));
    let per_classifier = classifiers
        .into_iter()
        .map(|c| ClassifierMargin {
            mean_accuracy_pct: mean(
                grid.iter()
                    .filter(|g| g.classifier == c)
                    .map(|g| g.accuracy_pct),
            ),
            classifier: c,
        })
        .collect();
    let per_feature_set = sets
        .into_iter()
        .map(|s| FeatureSetMargin {
            mean_accuracy_pct: mean(
                grid.iter()
                    .filter(|g| g.features == s)
                    .map(|g| g.accuracy_pct),
            ),
            features: s,
        })
        .collect();
    Ok(Report {
        run_id: meta.run_id,
        seed: meta.seed,
        config_digest: meta.config_digest,
        protocol: meta.protocol,
        grid,
        margins: Margins {
            per_classifier,
            per_feature_set,
        },
        explained_variance,
    })
}

/// Writes `<stem>.json`, `<stem>.csv` and, when present, the explained
/// variance curve as `<stem>_explained_variance.csv` under `dir`.
pub fn emit_report(report: &Report, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    write(format!("{stem}.json"), report.to_json()?)?;
    write(format!("{stem}.csv"), report.to_csv())?;
    if !report.explained_variance.is_empty() {
        let mut body = String::from("m,explained_variance_pct\n");
        for ev in &report.explained_variance {
            body.push_str(&format!("{},{}\n", ev.m, ev.pct));
        }
        write(format!("{stem}_explained_variance.csv"), body)?;
    }
    Ok(())
}
