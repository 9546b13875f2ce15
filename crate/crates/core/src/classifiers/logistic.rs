use serde::{Deserialize, Serialize};

use super::linalg::{cholesky_solve, dot};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Ridge penalty on the weights; the intercept is not penalized.
    pub ridge: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            ridge: 1e-8,
            max_iter: 200,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    ridge: f64,
}

impl Problem<'_> {
    fn margin(&self, theta: &[f64], row: &[f64]) -> f64 {
        let k = row.len();
        dot(&theta[..k], row) + theta[k]
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let k = theta.len() - 1;
        let nll: f64 = self
            .x
            .iter()
            .zip(self.y)
            .map(|(row, &t)| {
                let z = self.margin(theta, row);
                softplus(z) - t as f64 * z
            })
            .sum();
        nll + 0.5 * self.ridge * dot(&theta[..k], &theta[..k])
    }

    fn gradient_hessian(&self, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = theta.len();
        let k = d - 1;
        let mut g = vec![0.0; d];
        let mut h = vec![vec![0.0; d]; d];
        for (row, &t) in self.x.iter().zip(self.y) {
            let p = sigmoid(self.margin(theta, row));
            let r = p - t as f64;
            let w = p * (1.0 - p);
            let xt = |i: usize| if i < k { row[i] } else { 1.0 };
            for i in 0..d {
                g[i] += r * xt(i);
                for j in 0..=i {
                    h[i][j] += w * xt(i) * xt(j);
                }
            }
        }
        for i in 0..k {
            g[i] += self.ridge * theta[i];
            h[i][i] += self.ridge;
        }
        for i in 0..d {
            for j in 0..i {
                h[j][i] = h[i][j];
            }
        }
        (g, h)
    }
}

pub struct LogisticFit {
    pub model: Logistic,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl Logistic {
    /// Damped Newton on the penalized negative log-likelihood, starting at zero.
    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &LogisticParams) -> Result<LogisticFit> {
        if !y.contains(&0) || !y.contains(&1) {
            return Err(Error::SingleClassInput);
        }
        let k = x.first().map_or(0, Vec::len);
        let prob = Problem {
            x,
            y,
            ridge: params.ridge,
        };
        let mut theta = vec![0.0; k + 1];
        let mut f = prob.objective(&theta);
        let mut grad_norm = f64::INFINITY;
        for iter in 0..=params.max_iter {
            let (g, mut h) = prob.gradient_hessian(&theta);
            grad_norm = g.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if grad_norm < params.grad_tol {
                return Ok(LogisticFit {
                    model: Logistic {
                        weights: theta[..k].to_vec(),
                        bias: theta[k],
                    },
                    iterations: iter,
                    grad_norm,
                });
            }
            if iter == params.max_iter {
                break;
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            // Levenberg damping when the Hessian is numerically singular
            let scale = (0..=k).map(|i| h[i][i]).fold(0.0, f64::max).max(1e-300);
            let mut mu = 0.0;
            let step = loop {
                if let Some(s) = cholesky_solve(&h, &neg_g) {
                    break s;
                }
                let next = if mu == 0.0 { scale * 1e-12 } else { mu * 10.0 };
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] += next - mu;
                }
                mu = next;
            };
            let slope = dot(&g, &step);
            // near the optimum the predicted decrease is below the rounding of
            // the objective, so the line search only sees noise
            if -slope <= 1e-12 * f.abs().max(1.0) {
                theta.iter_mut().zip(&step).for_each(|(a, s)| *a += s);
                f = prob.objective(&theta);
                continue;
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                let fc = prob.objective(&cand);
                if fc <= f + 1e-4 * t * slope {
                    theta = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // objective flat to rounding; take the full step and rely on the gradient test
                theta.iter_mut().zip(&step).for_each(|(a, s)| *a += s);
                f = prob.objective(&theta);
            }
        }
        Err(Error::NonConvergence {
            iterations: params.max_iter,
            residual: grad_norm,
        })
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_data_is_finite() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![0.3, 1.0],
            vec![3.0, 3.0],
            vec![4.0, 2.5],
            vec![3.5, 4.0],
        ];
        let y = vec![0, 0, 0, 1, 1, 1];
        let fit = Logistic::fit(&x, &y, &LogisticParams::default()).unwrap();
        assert!(fit.model.weights.iter().all(|w| w.is_finite()));
        for (row, &t) in x.iter().zip(&y) {
            assert_eq!((fit.model.score(row) > 0.5) as u8, t);
        }
    }

    #[test]
    fn single_class() {
        assert!(matches!(
            Logistic::fit(&[vec![1.0]], &[0], &LogisticParams::default()),
            Err(Error::SingleClassInput)
        ));
    }

    #[test]
    fn iteration_cap_reports_gradient() {
        let x = vec![vec![-1.0], vec![0.5], vec![1.0], vec![-0.2]];
        let y = vec![0, 0, 1, 1];
        let p = LogisticParams {
            max_iter: 0,
            ..Default::default()
        };
        assert!(matches!(
            Logistic::fit(&x, &y, &p),
            Err(Error::NonConvergence { iterations: 0, .. })
        ));
    }
}
