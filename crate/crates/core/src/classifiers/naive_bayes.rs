use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Lower bound on every per-class variance.
    pub var_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { var_floor: 1e-9 }
    }
}

/// Gaussian naive Bayes with maximum-likelihood class-conditional moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl NaiveBayes {
    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &NaiveBayesParams) -> Result<Self> {
        let k = x.first().map_or(0, Vec::len);
        let mut count = [0usize; 2];
        let mut sum = [vec![0.0; k], vec![0.0; k]];
        for (row, &c) in x.iter().zip(y) {
            count[c as usize] += 1;
            for (s, v) in sum[c as usize].iter_mut().zip(row) {
                *s += v;
            }
        }
        if count[0] == 0 || count[1] == 0 {
            return Err(Error::SingleClassInput);
        }
        let mean = [0, 1].map(|c| {
            sum[c]
                .iter()
                .map(|s| s / count[c] as f64)
                .collect::<Vec<_>>()
        });
        let mut ss = [vec![0.0; k], vec![0.0; k]];
        for (row, &c) in x.iter().zip(y) {
            let c = c as usize;
            for ((s, v), m) in ss[c].iter_mut().zip(row).zip(&mean[c]) {
                *s += (v - m) * (v - m);
            }
        }
        let var = [0, 1].map(|c| {
            ss[c]
                .iter()
                .map(|s| (s / count[c] as f64).max(params.var_floor))
                .collect::<Vec<_>>()
        });
        let n = (count[0] + count[1]) as f64;
        Ok(NaiveBayes {
            log_prior: [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()],
            mean,
            var,
        })
    }

    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let mut l = self.log_prior[c];
        for ((v, m), s2) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            let d = v - m;
            l -= 0.5 * (std::f64::consts::TAU * s2).ln() + d * d / (2.0 * s2);
        }
        l
    }

    /// Posterior probability of class 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        let d = self.log_joint(0, x) - self.log_joint(1, x);
        if d > 0.0 {
            let e = (-d).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + d.exp())
        }
    }
}
