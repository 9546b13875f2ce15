//! Principal component analysis on z-scored features.
//!
//! The sample covariance of the z-scored matrix is diagonalized with cyclic
//! Jacobi rotations. Components are ordered by descending eigenvalue and each
//! load column is signed so its largest-magnitude entry is positive.

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub standardizer: Standardizer,
    /// `loads[feature][component]`, orthonormal columns.
    pub loads: Vec<Vec<f64>>,
    /// Descending, non-negative.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn feature_names(&self) -> &[String] {
        &self.standardizer.feature_names
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn load(&self, feature: usize, component: usize) -> f64 {
        self.loads[feature][component]
    }

    fn check_m(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.n_components() {
            return Err(Error::ParameterOutOfRange(format!(
                "component count {m} outside 1..={}",
                self.n_components()
            )));
        }
        Ok(())
    }

    /// Scores of one z-scored row on the first `m` components.
    pub fn project_zscored(&self, z: &[f64], m: usize) -> Vec<f64> {
        (0..m)
            .map(|c| z.iter().zip(&self.loads).map(|(v, l)| v * l[c]).sum())
            .collect()
    }

    /// Maps component scores back to z-scored feature space.
    pub fn reconstruct_zscored(&self, scores: &[f64]) -> Vec<f64> {
        self.loads
            .iter()
            .map(|l| scores.iter().zip(l).map(|(s, w)| s * w).sum())
            .collect()
    }
}

pub fn component_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("PC{i}")).collect()
}

pub fn fit_pca(fm: &FeatureMatrix) -> Result<PcaModel> {
    let standardizer = Standardizer::fit(fm)?;
    let z = standardizer.apply(fm)?;
    let n = z.n_rows();
    let p = z.n_features();
    let mut cov = vec![vec![0.0; p]; p];
    for row in z.rows() {
        for i in 0..p {
            for j in i..p {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let (values, vectors) = symmetric_eigen(&cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut loads = vec![vec![0.0; p]; p];
    let mut eigenvalues = Vec::with_capacity(p);
    for (c, &k) in order.iter().enumerate() {
        eigenvalues.push(values[k].max(0.0));
        let column: Vec<f64> = (0..p).map(|f| vectors[f][k]).collect();
        let pivot = column.iter().enumerate().fold(0, |best, (i, v)| {
            if v.abs() > column[best].abs() {
                i
            } else {
                best
            }
        });
        let sign = if column[pivot] < 0.0 { -1.0 } else { 1.0 };
        for f in 0..p {
            loads[f][c] = sign * column[f];
        }
    }
    Ok(PcaModel {
        standardizer,
        loads,
        eigenvalues,
    })
}

/// Percentage of total variance carried by the first `m` components.
pub fn explained_variance(model: &PcaModel, m: usize) -> Result<f64> {
    model.check_m(m)?;
    let total: f64 = model.eigenvalues.iter().sum();
    if m == model.n_components() {
        return Ok(100.0);
    }
    let head: f64 = model.eigenvalues[..m].iter().sum();
    Ok(100.0 * head / total)
}

pub fn project(model: &PcaModel, fm: &FeatureMatrix, m: usize) -> Result<FeatureMatrix> {
    model.check_m(m)?;
    let z = model.standardizer.apply(fm)?;
    let rows = z
        .rows()
        .iter()
        .map(|r| model.project_zscored(r, m))
        .collect();
    fm.with_rows(component_names(m), rows)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns unsorted eigenvalues and the matrix whose columns are the
/// corresponding unit eigenvectors (`vectors[row][k]`).
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let p = rows[0].len();
        let n = rows.len();
        FeatureMatrix::new(
            (0..p).map(|j| format!("f{j}")).collect(),
            (0..n).map(|i| format!("s{i}")).collect(),
            rows,
            vec![0; n],
        )
        .unwrap()
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![
            vec![4.0, 1.0, -2.0],
            vec![1.0, 2.0, 0.5],
            vec![-2.0, 0.5, 3.0],
        ];
        let (vals, vecs) = symmetric_eigen(&a);
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i][j] * vecs[j][k]).sum();
                assert!((av - vals[k] * vecs[i][k]).abs() < 1e-12);
            }
        }
        let trace: f64 = vals.iter().sum();
        assert!((trace - 9.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                vec![v, v]
            })
            .collect();
        let model = fit_pca(&matrix(rows)).unwrap();
        assert!((model.eigenvalues[0] - 2.0).abs() < 1e-10);
        assert!(model.eigenvalues[1].abs() < 1e-10);
        assert_eq!(explained_variance(&model, 2).unwrap(), 100.0);
    }

    #[test]
    fn isotropic_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                vec![
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ]
            })
            .collect();
        let model = fit_pca(&matrix(rows)).unwrap();
        for &e in &model.eigenvalues {
            assert!((e - 1.0).abs() < 0.05, "{e}");
        }
        // loads are orthonormal with positive dominant entries
        for c in 0..2 {
            let col = [model.loads[0][c], model.loads[1][c]];
            assert!((col[0].hypot(col[1]) - 1.0).abs() < 1e-12);
            assert!(
                col.iter()
                    .cloned()
                    .fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m })
                    > 0.0
            );
        }
    }

    #[test]
    fn first_component_variance_is_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..41)
            .map(|_| {
                let common: f64 = StandardNormal.sample(&mut rng);
                (0..6)
                    .map(|j| {
                        common * (j as f64 + 1.0) + {
                            let e: f64 = StandardNormal.sample(&mut rng);
                            e
                        }
                    })
                    .collect()
            })
            .collect();
        let fm = matrix(rows);
        let model = fit_pca(&fm).unwrap();
        let pc1 = project(&model, &fm, 1).unwrap().column(0);
        let mean = pc1.iter().sum::<f64>() / 41.0;
        let var = pc1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 40.0;
        assert!((var - model.eigenvalues[0]).abs() < 1e-10);
        assert!(model.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn name_mismatch_and_bad_m() {
        let fm = matrix(vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 5.0]]);
        let model = fit_pca(&fm).unwrap();
        let other = FeatureMatrix::new(
            vec!["x".into(), "y".into()],
            vec!["a".into()],
            vec![vec![0.0, 0.0]],
            vec![0],
        )
        .unwrap();
        assert!(matches!(
            project(&model, &other, 1),
            Err(Error::FeatureNameMismatch { .. })
        ));
        assert!(project(&model, &fm, 3).is_err());
        assert!(explained_variance(&model, 0).is_err());
    }
}
