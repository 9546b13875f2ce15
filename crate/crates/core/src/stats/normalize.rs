use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-feature mean and sample standard deviation (denominator `n - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(fm: &FeatureMatrix) -> Result<Self> {
        let n = fm.n_rows();
        if n < 2 {
            return Err(Error::ParameterOutOfRange(format!(
                "z-scoring needs at least 2 rows, got {n}"
            )));
        }
        let mut mean = Vec::with_capacity(fm.n_features());
        let mut sd = Vec::with_capacity(fm.n_features());
        for (j, name) in fm.feature_names().iter().enumerate() {
            let col = fm.column(j);
            let mu = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mu) * (v - mu)).sum();
            let s = (ss / (n - 1) as f64).sqrt();
            if !(s > 0.0) {
                return Err(Error::ZeroVarianceFeature(name.clone()));
            }
            mean.push(mu);
            sd.push(s);
        }
        Ok(Standardizer {
            feature_names: fm.feature_names().to_vec(),
            mean,
            sd,
        })
    }

    fn check_names(&self, fm: &FeatureMatrix) -> Result<()> {
        if fm.feature_names() != self.feature_names.as_slice() {
            return Err(Error::FeatureNameMismatch {
                expected: self.feature_names.clone(),
                found: fm.feature_names().to_vec(),
            });
        }
        Ok(())
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_names(fm)?;
        let rows = fm.rows().iter().map(|r| self.apply_row(r)).collect();
        fm.with_rows(self.feature_names.clone(), rows)
    }

    pub fn invert(&self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_names(fm)?;
        let rows = fm
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .zip(self.mean.iter().zip(&self.sd))
                    .map(|(z, (m, s))| z * s + m)
                    .collect()
            })
            .collect();
        fm.with_rows(self.feature_names.clone(), rows)
    }
}

pub fn zscore_normalize(fm: &FeatureMatrix) -> Result<(FeatureMatrix, Standardizer)> {
    let st = Standardizer::fit(fm)?;
    Ok((st.apply(fm)?, st))
}
