//! Soft-margin support vector machine trained by SMO with second-order
//! working-set selection.

use serde::{Deserialize, Serialize};

use super::linalg::dot;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `(u·v)^2` without an additive constant.
    Poly2,
}

impl Kernel {
    pub fn eval(self, u: &[f64], v: &[f64]) -> f64 {
        let d = dot(u, v);
        match self {
            Kernel::Linear => d,
            Kernel::Poly2 => d * d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// KKT tolerance on the maximal violating pair.
    pub tol: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: usize,
    /// Rescale every input to [0, 1] using the training range, as Weka's SMO
    /// does by default. The unshifted quadratic kernel cannot tell `x` from
    /// `-x`, so it needs inputs on one side of the origin.
    pub normalize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10_000,
            normalize: true,
        }
    }
}

/// Per-column affine map onto [0, 1]; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl MinMax {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let k = x.first().map_or(0, Vec::len);
        let (min, range) = (0..k)
            .map(|j| {
                let lo = x.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
                let hi = x.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            })
            .unzip();
        MinMax { min, range }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.range))
            .map(|(v, (lo, r))| if *r > 0.0 { (v - lo) / r } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    /// Input scaling; support vectors are stored already scaled.
    pub scaling: Option<MinMax>,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector, with `y` in `{-1, +1}`.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

/// Full solver state, exposed so callers can audit the dual solution.
#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: Svm,
    /// Dual variables for every training row.
    pub alpha: Vec<f64>,
    /// Training labels in `{-1, +1}`.
    pub y: Vec<f64>,
    /// `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
    pub dual_objective: f64,
    /// Largest KKT violation `m(alpha) - M(alpha)` at exit.
    pub kkt_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

impl Svm {
    pub fn fit(
        x: &[Vec<f64>],
        labels: &[u8],
        kernel: Kernel,
        params: &SvmParams,
    ) -> Result<SvmFit> {
        if !params.normalize {
            return Self::solve(x, labels, kernel, params);
        }
        let scaling = MinMax::fit(x);
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| scaling.apply(r)).collect();
        let mut fit = Self::solve(&scaled, labels, kernel, params)?;
        fit.model.scaling = Some(scaling);
        Ok(fit)
    }

    fn solve(x: &[Vec<f64>], labels: &[u8], kernel: Kernel, params: &SvmParams) -> Result<SvmFit> {
        let n = x.len();
        if !labels.contains(&0) || !labels.contains(&1) {
            return Err(Error::SingleClassInput);
        }
        // Solve with the first row's class as +1 so relabelling the data
        // yields the mirrored solution exactly.
        let orient = if labels[0] == 1 { 1.0 } else { -1.0 };
        let ys: Vec<f64> = labels
            .iter()
            .map(|&l| orient * if l == 1 { 1.0 } else { -1.0 })
            .collect();
        let c = params.c;

        let mut kmat = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.eval(&x[i], &x[j]);
                kmat[i][j] = v;
                kmat[j][i] = v;
            }
        }
        let q = |i: usize, j: usize| ys[i] * ys[j] * kmat[i][j];

        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
        let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

        let budget = params.max_passes.saturating_mul(n.max(1));
        let mut iterations = 0;
        let mut converged = false;
        let mut violation = f64::INFINITY;
        while iterations < budget {
            let mut i = usize::MAX;
            let mut gmax = f64::NEG_INFINITY;
            let mut gmin = f64::INFINITY;
            for t in 0..n {
                let v = -ys[t] * grad[t];
                if in_up(alpha[t], ys[t]) && v > gmax {
                    gmax = v;
                    i = t;
                }
                if in_low(alpha[t], ys[t]) && v < gmin {
                    gmin = v;
                }
            }
            violation = gmax - gmin;
            if i == usize::MAX || violation <= params.tol {
                converged = true;
                break;
            }
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..n {
                let v = -ys[t] * grad[t];
                if !in_low(alpha[t], ys[t]) || v >= gmax {
                    continue;
                }
                let b = gmax - v;
                let a = kmat[i][i] + kmat[t][t] - 2.0 * kmat[i][t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
            if j == usize::MAX {
                converged = true;
                break;
            }

            let (ai_old, aj_old) = (alpha[i], alpha[j]);
            let quad = {
                let a = kmat[i][i] + kmat[j][j] - 2.0 * kmat[i][j];
                if a > 0.0 {
                    a
                } else {
                    TAU
                }
            };
            if ys[i] != ys[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - ai_old, alpha[j] - aj_old);
            for t in 0..n {
                grad[t] += q(t, i) * di + q(t, j) * dj;
            }
            iterations += 1;
        }
        if !converged {
            log::warn!(
                "SMO stopped after {iterations} iterations with KKT violation {violation:.3e}"
            );
        }

        // intercept from free vectors, else the midpoint of the feasible range
        let (mut sum, mut free) = (0.0, 0usize);
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in 0..n {
            let yg = ys[t] * grad[t];
            if alpha[t] > 0.0 && alpha[t] < c {
                sum += yg;
                free += 1;
            } else if (alpha[t] >= c && ys[t] < 0.0) || (alpha[t] <= 0.0 && ys[t] > 0.0) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        }
        let rho = if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        };

        let dual_objective = alpha.iter().sum::<f64>()
            - 0.5 * (0..n).map(|t| alpha[t] * (grad[t] + 1.0)).sum::<f64>();
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                support_vectors.push(x[t].clone());
                coefficients.push(orient * alpha[t] * ys[t]);
            }
        }
        let y_out: Vec<f64> = ys.iter().map(|v| orient * v).collect();
        Ok(SvmFit {
            model: Svm {
                kernel,
                scaling: None,
                support_vectors,
                coefficients,
                bias: -orient * rho,
            },
            alpha,
            y: y_out,
            dual_objective,
            kkt_violation: violation,
            iterations,
            converged,
        })
    }

    /// Signed decision value; positive favours class 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        let scaled;
        let x = match &self.scaling {
            Some(s) => {
                scaled = s.apply(x);
                &scaled[..]
            }
            None => x,
        };
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            vec![
                vec![-1.0, -1.0],
                vec![1.0, 1.0],
                vec![-1.0, 1.0],
                vec![1.0, -1.0],
            ],
            vec![0, 0, 1, 1],
        )
    }

    fn accuracy(svm: &Svm, x: &[Vec<f64>], y: &[u8]) -> f64 {
        let hits = x
            .iter()
            .zip(y)
            .filter(|(r, &t)| (svm.score(r) > 0.0) as u8 == t)
            .count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn xor_needs_quadratic_kernel() {
        let (x, y) = xor();
        let raw = SvmParams {
            normalize: false,
            ..SvmParams::default()
        };
        let lin = Svm::fit(&x, &y, Kernel::Linear, &raw).unwrap();
        assert!(accuracy(&lin.model, &x, &y) <= 0.75);
        let quad = Svm::fit(&x, &y, Kernel::Poly2, &raw).unwrap();
        assert_eq!(accuracy(&quad.model, &x, &y), 1.0);
    }

    #[test]
    fn dual_feasibility() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.11).cos()])
            .collect();
        let y: Vec<u8> = x.iter().map(|r| (r[0] + 0.3 * r[1] > 0.1) as u8).collect();
        let fit = Svm::fit(&x, &y, Kernel::Linear, &SvmParams::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
        let resid: f64 = fit.alpha.iter().zip(&fit.y).map(|(a, y)| a * y).sum();
        assert!(resid.abs() < 1e-10, "{resid}");
        assert!(fit.kkt_violation <= 1.1e-3);
    }

    #[test]
    fn flipped_labels_negate_scores() {
        let (x, y) = xor();
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        let a = Svm::fit(&x, &y, Kernel::Poly2, &SvmParams::default())
            .unwrap()
            .model;
        let b = Svm::fit(&x, &flipped, Kernel::Poly2, &SvmParams::default())
            .unwrap()
            .model;
        for r in &x {
            assert_eq!(a.score(r), -b.score(r));
        }
    }

    #[test]
    fn scaling_separates_mirrored_clusters() {
        // two clusters at +c and -c: (u.v)^2 sees them as one without scaling
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![
                    s * 2.0 + 0.3 * (i as f64 * 0.7).sin(),
                    s * 2.0 + 0.3 * (i as f64 * 1.3).cos(),
                ]
            })
            .collect();
        let y: Vec<u8> = (0..40).map(|i| (i % 2 == 0) as u8).collect();
        let raw = SvmParams {
            normalize: false,
            ..SvmParams::default()
        };
        let plain = Svm::fit(&x, &y, Kernel::Poly2, &raw).unwrap();
        assert!(accuracy(&plain.model, &x, &y) <= 0.6);
        let scaled = Svm::fit(&x, &y, Kernel::Poly2, &SvmParams::default()).unwrap();
        assert_eq!(accuracy(&scaled.model, &x, &y), 1.0);
        assert_eq!(
            MinMax::fit(&[vec![3.0], vec![3.0]]).apply(&[5.0]),
            vec![0.0]
        );
    }
}
