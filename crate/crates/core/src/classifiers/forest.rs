use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, Grower, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Overrides the default subset size `int(log2 k) + 1`.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            features_per_split: None,
        }
    }
}

/// `int(log2 k) + 1` for `k >= 1`.
pub fn split_features(k: usize) -> usize {
    (usize::BITS - k.leading_zeros()) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Node>,
}

/// Generator for member `index`: the master seed on its own stream, so
/// members can be grown in any order.
pub fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl Forest {
    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &ForestParams, seed: u64) -> Result<Self> {
        if !y.contains(&0) || !y.contains(&1) {
            return Err(Error::SingleClassInput);
        }
        let n = x.len();
        let k = x.first().map_or(0, Vec::len);
        let m = params
            .features_per_split
            .unwrap_or_else(|| split_features(k));
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = member_rng(seed, t);
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut grower = Grower {
                    x,
                    y,
                    criterion: Criterion::InfoGain,
                    min_per_node: 1,
                    sample: Some((m, &mut rng)),
                };
                grower.grow(&rows)
            })
            .collect();
        Ok(Forest { trees })
    }

    pub fn votes(&self, x: &[f64]) -> usize {
        self.trees.iter().map(|t| t.label(x) as usize).sum()
    }

    /// Fraction of members voting for class 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.votes(x) as f64 / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_size() {
        assert_eq!(split_features(38), 6);
        assert_eq!(split_features(1), 1);
        assert_eq!(split_features(19), 5);
        assert_eq!(split_features(2), 2);
        assert_eq!(split_features(64), 7);
    }

    #[test]
    fn seeded_determinism() {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                vec![
                    (i as f64 * 0.7).sin(),
                    (i as f64 * 1.3).cos(),
                    i as f64 / 60.0,
                ]
            })
            .collect();
        let y: Vec<u8> = x.iter().map(|r| (r[0] + r[1] > 0.0) as u8).collect();
        let p = ForestParams {
            n_trees: 20,
            ..Default::default()
        };
        let a = Forest::fit(&x, &y, &p, 9).unwrap();
        assert_eq!(a, Forest::fit(&x, &y, &p, 9).unwrap());
        assert_ne!(a, Forest::fit(&x, &y, &p, 10).unwrap());
        assert_eq!(a.trees.len(), 20);
    }
}
