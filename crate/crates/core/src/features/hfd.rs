//! Higuchi fractal dimension.
//!
//! For each scale `k` the series is subsampled from every start `m` in `1..=k`
//! and the normalized curve length `L_m(k)` is averaged into `L(k)`. The
//! dimension is the least-squares slope of `ln L(k)` against `ln(1/k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfdParams {
    pub k_max: usize,
}

impl Default for HfdParams {
    fn default() -> Self {
        HfdParams { k_max: 8 }
    }
}

/// Normalized curve length `L_m(k)` with a 1-based start index `start`.
pub fn curve_length(x: &[f64], k: usize, start: usize) -> Result<f64> {
    let n = x.len();
    if k == 0 || start == 0 || start > k || k >= n {
        return Err(Error::DegenerateScale { k, start, len: n });
    }
    let steps = (n - start) / k;
    if steps == 0 {
        return Err(Error::DegenerateScale { k, start, len: n });
    }
    let first = start - 1;
    let mut sum = 0.0;
    let mut prev = x[first];
    for i in 1..=steps {
        let cur = x[first + i * k];
        sum += (cur - prev).abs();
        prev = cur;
    }
    Ok(sum * (n - 1) as f64 / (steps * k) as f64 / k as f64)
}

/// Result of the log-log fit, including the per-scale mean curve lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct HfdFit {
    pub dimension: f64,
    /// `L(k)` for `k = 1..=k_max`.
    pub lengths: Vec<f64>,
}

impl HfdFit {
    /// The estimator is not clamped; values outside `[1, 2]` are flagged here.
    pub fn out_of_range(&self) -> bool {
        !(1.0..=2.0).contains(&self.dimension)
    }
}

pub fn higuchi_fit(x: &[f64], params: &HfdParams) -> Result<HfdFit> {
    let n = x.len();
    let k_max = params.k_max;
    if k_max < 2 || k_max >= n {
        return Err(Error::ParameterOutOfRange(format!(
            "k_max={k_max} must satisfy 2 <= k_max < N={n}"
        )));
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::ParameterOutOfRange(
            "series contains non-finite values".into(),
        ));
    }
    if lo == hi {
        return Err(Error::ConstantSeries);
    }

    let mut lengths = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut total = 0.0;
        for start in 1..=k {
            total += curve_length(x, k, start)?;
        }
        let mean = total / k as f64;
        if mean <= 0.0 {
            // a series periodic in k has zero length at that scale
            return Err(Error::DegenerateScale {
                k,
                start: 0,
                len: n,
            });
        }
        lengths.push(mean);
    }

    let points: Vec<(f64, f64)> = lengths
        .iter()
        .enumerate()
        .map(|(i, l)| (-((i + 1) as f64).ln(), l.ln()))
        .collect();
    let dimension = ols_slope(&points);
    Ok(HfdFit { dimension, lengths })
}

pub fn higuchi_fd(x: &[f64], params: &HfdParams) -> Result<f64> {
    let fit = higuchi_fit(x, params)?;
    if fit.out_of_range() {
        log::debug!("Higuchi dimension {} outside [1, 2]", fit.dimension);
    }
    Ok(fit.dimension)
}

fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_u = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_v = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut suv, mut suu) = (0.0, 0.0);
    for &(u, v) in points {
        suv += (u - mean_u) * (v - mean_v);
        suu += (u - mean_u) * (u - mean_u);
    }
    suv / suu
}
