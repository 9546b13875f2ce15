//! Stratified K-fold cross-validation with pooled metrics, and report assembly.

mod folds;
mod metrics;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use folds::{stratified_kfold, FoldPlan};
pub use metrics::{roc_auc, Confusion};
pub use report::{
    build_report, emit_report, ClassifierMargin, ExplainedVariance, FeatureSetMargin, GridCell,
    Margins, Protocol, Report, ReportMeta,
};

use crate::classifiers::{ClassifierModel, Scorer, TrainerSpec};
use crate::error::{Error, Result};
use crate::stats::{fit_pca, project, FeatureMatrix, Standardizer};

/// Where principal components are fitted, if at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "m")]
pub enum PcaMode {
    /// Raw features, z-scored on each training partition.
    None,
    /// Z-scoring and PCA fitted on each training partition only.
    PerFold(usize),
    /// PCA fitted once on all rows before splitting.
    Global(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub row: usize,
    pub truth: u8,
    pub predicted: u8,
    pub score: f64,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// One out-of-fold prediction per row, in row order.
    pub predictions: Vec<Prediction>,
    pub confusion: Confusion,
    pub accuracy_pct: f64,
    pub auc: f64,
}

impl EvalResult {
    pub fn from_predictions(predictions: Vec<Prediction>) -> Result<Self> {
        let truth: Vec<u8> = predictions.iter().map(|p| p.truth).collect();
        let predicted: Vec<u8> = predictions.iter().map(|p| p.predicted).collect();
        let scores: Vec<f64> = predictions.iter().map(|p| p.score).collect();
        let confusion = Confusion::from_labels(&truth, &predicted);
        let auc = roc_auc(&scores, &truth)?;
        Ok(EvalResult {
            accuracy_pct: confusion.accuracy_pct(),
            confusion,
            auc,
            predictions,
        })
    }
}

/// Fits the fold's preprocessing on `train` and applies it to both partitions.
fn prepare(
    train: FeatureMatrix,
    test: FeatureMatrix,
    mode: PcaMode,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let (train, test) = match mode {
        PcaMode::PerFold(m) => {
            let model = fit_pca(&train)?;
            (project(&model, &train, m)?, project(&model, &test, m)?)
        }
        PcaMode::None | PcaMode::Global(_) => (train, test),
    };
    let z = Standardizer::fit(&train)?;
    Ok((z.apply(&train)?, z.apply(&test)?))
}

/// Cross-validates any trainer. Each fold's model sees only its training
/// partition; held-out scores are pooled into a single result.
pub fn cross_validate_with<F, M>(
    fm: &FeatureMatrix,
    plan: &FoldPlan,
    mode: PcaMode,
    train: F,
) -> Result<EvalResult>
where
    F: Fn(&FeatureMatrix) -> Result<M> + Sync,
    M: Scorer,
{
    if plan.n_rows() != fm.n_rows() {
        return Err(Error::ParameterOutOfRange(format!(
            "fold plan covers {} rows, matrix has {}",
            plan.n_rows(),
            fm.n_rows()
        )));
    }
    let data = match mode {
        PcaMode::Global(m) => project(&fit_pca(fm)?, fm, m)?,
        _ => fm.clone(),
    };
    let per_fold: Vec<Vec<Prediction>> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let test_rows = plan.test_rows(fold);
            let run = || -> Result<Vec<Prediction>> {
                let (tr, te) = prepare(
                    data.select_rows(&plan.train_rows(fold)),
                    data.select_rows(&test_rows),
                    mode,
                )?;
                let model = train(&tr)?;
                if model.feature_names() != te.feature_names() {
                    return Err(Error::FeatureNameMismatch {
                        expected: model.feature_names().to_vec(),
                        found: te.feature_names().to_vec(),
                    });
                }
                Ok(test_rows
                    .iter()
                    .zip(te.rows())
                    .zip(te.labels())
                    .map(|((&row, x), &truth)| {
                        let score = model.score_row(x);
                        Prediction {
                            row,
                            truth,
                            predicted: (score > model.threshold()) as u8,
                            score,
                            fold,
                        }
                    })
                    .collect())
            };
            run().map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut pooled: Vec<Option<Prediction>> = vec![None; fm.n_rows()];
    for p in per_fold.into_iter().flatten() {
        let row = p.row;
        pooled[row] = Some(p);
    }
    let predictions = pooled
        .into_iter()
        .enumerate()
        .map(|(r, p)| p.ok_or_else(|| Error::ParameterOutOfRange(format!("row {r} has no fold"))))
        .collect::<Result<Vec<_>>>()?;
    EvalResult::from_predictions(predictions)
}

pub fn cross_validate(
    spec: &TrainerSpec,
    fm: &FeatureMatrix,
    plan: &FoldPlan,
    mode: PcaMode,
) -> Result<EvalResult> {
    cross_validate_with(fm, plan, mode, |train| -> Result<ClassifierModel> {
        spec.train(train)
    })
}
