//! One-hidden-layer perceptron with sigmoid units and squared-error loss,
//! trained by full-batch gradient descent with momentum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Initial weights are drawn uniformly from `[-init_range, init_range]`.
    pub init_range: f64,
    /// Overrides the default hidden-layer size `ceil((k + 1) / 2)`.
    pub hidden: Option<usize>,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            learning_rate: 0.3,
            momentum: 0.2,
            epochs: 500,
            init_range: 0.5,
            hidden: None,
        }
    }
}

pub fn hidden_units(k: usize) -> usize {
    (k + 2) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `hidden[j]` holds the input weights of unit `j` followed by its bias.
    pub hidden: Vec<Vec<f64>>,
    /// Hidden-to-output weights followed by the output bias.
    pub output: Vec<f64>,
}

impl Mlp {
    /// Uniform random weights; hidden rows first, then the output row.
    pub fn random(k: usize, h: usize, range: f64, rng: &mut impl Rng) -> Self {
        let mut draw = || rng.random_range(-range..=range);
        let hidden = (0..h).map(|_| (0..=k).map(|_| draw()).collect()).collect();
        let output = (0..=h).map(|_| draw()).collect();
        Mlp { hidden, output }
    }

    pub fn n_inputs(&self) -> usize {
        self.hidden.first().map_or(0, |r| r.len() - 1)
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        self.hidden
            .iter()
            .map(|w| {
                let k = w.len() - 1;
                sigmoid(w[..k].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[k])
            })
            .collect()
    }

    fn output_from(&self, hidden: &[f64]) -> f64 {
        let h = hidden.len();
        sigmoid(
            self.output[..h]
                .iter()
                .zip(hidden)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + self.output[h],
        )
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.output_from(&self.hidden_activations(x))
    }

    /// `1/2 sum (o - t)^2` over the batch.
    pub fn batch_loss(&self, x: &[Vec<f64>], y: &[u8]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(row, &t)| {
                let e = self.score(row) - t as f64;
                0.5 * e * e
            })
            .sum()
    }

    /// Gradient of [`Mlp::batch_loss`] with the same layout as the weights.
    pub fn batch_gradient(&self, x: &[Vec<f64>], y: &[u8]) -> Mlp {
        let h = self.hidden.len();
        let k = self.n_inputs();
        let mut g = Mlp {
            hidden: vec![vec![0.0; k + 1]; h],
            output: vec![0.0; h + 1],
        };
        for (row, &t) in x.iter().zip(y) {
            let a = self.hidden_activations(row);
            let o = self.output_from(&a);
            let delta_o = (o - t as f64) * o * (1.0 - o);
            for j in 0..h {
                g.output[j] += delta_o * a[j];
                let delta_h = delta_o * self.output[j] * a[j] * (1.0 - a[j]);
                for (gw, xi) in g.hidden[j].iter_mut().zip(row) {
                    *gw += delta_h * xi;
                }
                g.hidden[j][k] += delta_h;
            }
            g.output[h] += delta_o;
        }
        g
    }

    fn weights_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.hidden
            .iter_mut()
            .flatten()
            .chain(self.output.iter_mut())
    }

    pub fn weights(&self) -> impl Iterator<Item = &f64> {
        self.hidden.iter().flatten().chain(self.output.iter())
    }

    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &MlpParams, seed: u64) -> Self {
        let k = x.first().map_or(0, Vec::len);
        let h = params.hidden.unwrap_or_else(|| hidden_units(k));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::random(k, h, params.init_range, &mut rng);
        let mut velocity = Mlp {
            hidden: vec![vec![0.0; k + 1]; h],
            output: vec![0.0; h + 1],
        };
        for _ in 0..params.epochs {
            let g = net.batch_gradient(x, y);
            for (v, gw) in velocity.weights_mut().zip(g.weights()) {
                *v = params.momentum * *v - params.learning_rate * gw;
            }
            for (w, v) in net.weights_mut().zip(velocity.weights()) {
                *w += v;
            }
        }
        net
    }
}
