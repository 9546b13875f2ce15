use statrs::distribution::{ContinuousCDF, StudentsT};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Pearson correlations with two-sided p-values from the t-transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub p_values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

pub fn pearson_correlation(fm: &FeatureMatrix) -> Result<CorrelationMatrix> {
    let n = fm.n_rows();
    if n < 3 {
        return Err(Error::ParameterOutOfRange(format!(
            "correlation needs at least 3 rows, got {n}"
        )));
    }
    let p = fm.n_features();
    let centered: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let col = fm.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.iter().map(|v| v - mean).collect()
        })
        .collect();
    let ss: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    if let Some(j) = ss.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ZeroVarianceFeature(fm.feature_names()[j].clone()));
    }

    let df = (n - 2) as f64;
    let t_dist = StudentsT::new(0.0, 1.0, df).ok();
    let mut values = vec![vec![0.0; p]; p];
    let mut p_values = vec![vec![0.0; p]; p];
    for i in 0..p {
        values[i][i] = 1.0;
        for j in i + 1..p {
            let sxy: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            let r = (sxy / (ss[i] * ss[j]).sqrt()).clamp(-1.0, 1.0);
            let pv = match &t_dist {
                Some(t) if r.abs() < 1.0 => {
                    let stat = r * (df / (1.0 - r * r)).sqrt();
                    (2.0 * t.sf(stat.abs())).min(1.0)
                }
                Some(_) => 0.0,
                None => 1.0,
            };
            values[i][j] = r;
            values[j][i] = r;
            p_values[i][j] = pv;
            p_values[j][i] = pv;
        }
    }
    Ok(CorrelationMatrix {
        names: fm.feature_names().to_vec(),
        values,
        p_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: &[Vec<f64>]) -> FeatureMatrix {
        let n = cols[0].len();
        FeatureMatrix::new(
            (0..cols.len()).map(|j| format!("f{j}")).collect(),
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..n)
                .map(|i| cols.iter().map(|c| c[i]).collect())
                .collect(),
            vec![0; n],
        )
        .unwrap()
    }

    #[test]
    fn self_and_negated() {
        let x = vec![0.3, 1.7, -2.2, 5.1, 0.01, 3.3];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let c = pearson_correlation(&matrix(&[x.clone(), x, neg])).unwrap();
        assert_eq!(c.values[0][1], 1.0);
        assert_eq!(c.values[0][2], -1.0);
        assert_eq!(c.p_values[0][1], 0.0);
    }

    #[test]
    fn p_value_of_known_case() {
        // r = 0.5 with n = 12: t = 0.5 * sqrt(10 / 0.75) = 1.8257, p = 0.0979
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let noise = [
            1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0,
        ];
        // solve for a mixture with correlation exactly 0.5 against x
        let mx = 5.5;
        let sx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum::<f64>().sqrt();
        let e: Vec<f64> = noise.to_vec();
        let me = 0.0;
        let sxe: f64 = x.iter().zip(&e).map(|(a, b)| (a - mx) * (b - me)).sum();
        let e_perp: Vec<f64> = x
            .iter()
            .zip(&e)
            .map(|(a, b)| b - sxe / (sx * sx) * (a - mx))
            .collect();
        let sp: f64 = e_perp.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y: Vec<f64> = x
            .iter()
            .zip(&e_perp)
            .map(|(a, b)| 0.5 * (a - mx) / sx + (0.75f64).sqrt() * b / sp)
            .collect();
        let c = pearson_correlation(&matrix(&[x, y])).unwrap();
        assert!((c.values[0][1] - 0.5).abs() < 1e-12);
        assert!(
            (c.p_values[0][1] - 0.097_945).abs() < 1e-4,
            "{}",
            c.p_values[0][1]
        );
    }

    #[test]
    fn zero_variance() {
        let err = pearson_correlation(&matrix(&[vec![1.0, 2.0, 3.0], vec![2.0; 3]])).unwrap_err();
        assert!(matches!(err, Error::ZeroVarianceFeature(ref n) if n == "f1"));
    }
}
