use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl GroupStats {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        GroupStats {
            n,
            mean,
            sd: (ss / (n - 1) as f64).sqrt(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Descriptive patient-vs-control comparison of one feature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSummary {
    pub feature: String,
    pub patients: GroupStats,
    pub controls: GroupStats,
    /// Welch t of patients minus controls.
    pub welch_t: f64,
    pub p_value: f64,
}

pub fn group_summary(fm: &FeatureMatrix) -> Result<Vec<FeatureSummary>> {
    let (controls, patients) = fm.class_counts();
    if controls == 0 || patients == 0 {
        return Err(Error::SingleClassInput);
    }
    if controls < 2 || patients < 2 {
        return Err(Error::ParameterOutOfRange(
            "group statistics need at least 2 rows per class".into(),
        ));
    }
    let mut out = Vec::with_capacity(fm.n_features());
    for (j, name) in fm.feature_names().iter().enumerate() {
        let (mut p, mut c) = (Vec::new(), Vec::new());
        for (row, &label) in fm.rows().iter().zip(fm.labels()) {
            if label == 1 {
                p.push(row[j]);
            } else {
                c.push(row[j]);
            }
        }
        let gp = GroupStats::of(&p);
        let gc = GroupStats::of(&c);
        let (welch_t, p_value) = welch(&gp, &gc);
        out.push(FeatureSummary {
            feature: name.clone(),
            patients: gp,
            controls: gc,
            welch_t,
            p_value,
        });
    }
    Ok(out)
}

fn welch(a: &GroupStats, b: &GroupStats) -> (f64, f64) {
    let va = a.sd * a.sd / a.n as f64;
    let vb = b.sd * b.sd / b.n as f64;
    let diff = a.mean - b.mean;
    let se2 = va + vb;
    if se2 == 0.0 {
        return if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    let p = StudentsT::new(0.0, 1.0, df)
        .map(|dist| (2.0 * dist.sf(t.abs())).min(1.0))
        .unwrap_or(f64::NAN);
    (t, p)
}
