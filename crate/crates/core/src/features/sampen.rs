//! Sample entropy.
//!
//! Templates of length `m` start at every index `i < N - m`, so the length-`m`
//! and length-`m + 1` counts range over the same set of starts. Matching uses
//! the Chebyshev distance with an inclusive tolerance and excludes
//! self-matches; counts are over ordered pairs.
//!
//! The counting kernel sorts template starts by their first sample, so each
//! template is only compared against the ones whose first sample lies within
//! `r`. The counts are identical to the quadratic double loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SdConvention {
    /// Divide by `N`.
    #[default]
    Population,
    /// Divide by `N - 1`.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampEnParams {
    pub m: usize,
    pub r_factor: f64,
    #[serde(default)]
    pub sd: SdConvention,
}

impl Default for SampEnParams {
    fn default() -> Self {
        SampEnParams {
            m: 2,
            r_factor: 0.15,
            sd: SdConvention::Population,
        }
    }
}

/// Ordered-pair match counts: `b` for length `m`, `a` for length `m + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchCounts {
    pub a: u64,
    pub b: u64,
    pub r: f64,
}

impl MatchCounts {
    pub fn entropy(&self) -> Result<f64> {
        if self.a == 0 || self.b == 0 {
            return Err(Error::NoTemplateMatches {
                a: self.a,
                b: self.b,
            });
        }
        Ok(-(self.a as f64 / self.b as f64).ln())
    }
}

pub fn standard_deviation(x: &[f64], convention: SdConvention) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let denom = match convention {
        SdConvention::Population => n,
        SdConvention::Sample => n - 1.0,
    };
    (ss / denom).sqrt()
}

fn validate(x: &[f64], params: &SampEnParams) -> Result<()> {
    if params.m == 0 {
        return Err(Error::ParameterOutOfRange("m must be at least 1".into()));
    }
    if !(params.r_factor > 0.0 && params.r_factor.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!(
            "r_factor={} must be positive",
            params.r_factor
        )));
    }
    if x.len() < params.m + 2 {
        return Err(Error::ParameterOutOfRange(format!(
            "series of length {} too short for m={}",
            x.len(),
            params.m
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::ParameterOutOfRange(
            "series contains non-finite values".into(),
        ));
    }
    Ok(())
}

pub fn match_counts(x: &[f64], params: &SampEnParams) -> Result<MatchCounts> {
    validate(x, params)?;
    let m = params.m;
    let r = params.r_factor * standard_deviation(x, params.sd);
    let starts = x.len() - m;

    let mut order: Vec<usize> = (0..starts).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)));

    let (mut a, mut b) = (0u64, 0u64);
    for (pos, &i) in order.iter().enumerate() {
        let xi = x[i];
        for &j in &order[pos + 1..] {
            // sorted ascending, so this is |x[i] - x[j]| for the first coordinate
            if x[j] - xi > r {
                break;
            }
            if (1..m).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    Ok(MatchCounts {
        a: 2 * a,
        b: 2 * b,
        r,
    })
}

pub fn sample_entropy(x: &[f64], params: &SampEnParams) -> Result<f64> {
    match_counts(x, params)?.entropy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(x: &[f64], m: usize, r: f64) -> (u64, u64) {
        let starts = x.len() - m;
        let (mut a, mut b) = (0, 0);
        for i in 0..starts {
            for j in 0..starts {
                if i == j {
                    continue;
                }
                let dist_m = (0..m)
                    .map(|k| (x[i + k] - x[j + k]).abs())
                    .fold(0.0, f64::max);
                if dist_m <= r {
                    b += 1;
                    if dist_m.max((x[i + m] - x[j + m]).abs()) <= r {
                        a += 1;
                    }
                }
            }
        }
        (a, b)
    }

    #[test]
    fn constant_series_is_zero() {
        let x = vec![4.0; 30];
        let c = match_counts(&x, &SampEnParams::default()).unwrap();
        assert_eq!(c.r, 0.0);
        assert_eq!(c.a, c.b);
        assert_eq!(sample_entropy(&x, &SampEnParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn alternating_series_is_zero() {
        let x: Vec<f64> = (0..200)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        assert_eq!(sample_entropy(&x, &SampEnParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn uniform_noise_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let p = SampEnParams::default();
        let c = match_counts(&x, &p).unwrap();
        assert_eq!(brute_force(&x, 2, c.r), (c.a, c.b));
        let want = -((c.a as f64) / (c.b as f64)).ln();
        assert_eq!(sample_entropy(&x, &p).unwrap(), want);
    }

    #[test]
    fn no_matches_reports_counts() {
        // strictly increasing with large steps never matches at r = 0.15 SD
        let x: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let p = SampEnParams {
            m: 2,
            r_factor: 0.01,
            ..Default::default()
        };
        match sample_entropy(&x, &p) {
            Err(Error::NoTemplateMatches { a, b }) => assert_eq!((a, b), (0, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parameter_validation() {
        let x = [1.0, 2.0, 3.0, 1.0];
        let bad_m = SampEnParams {
            m: 0,
            ..Default::default()
        };
        assert!(sample_entropy(&x, &bad_m).is_err());
        let bad_r = SampEnParams {
            r_factor: 0.0,
            ..Default::default()
        };
        assert!(sample_entropy(&x, &bad_r).is_err());
        assert!(match_counts(&x[..3], &SampEnParams::default()).is_err());
    }

    #[test]
    fn sample_sd_convention_widens_tolerance() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let pop = standard_deviation(&x, SdConvention::Population);
        let smp = standard_deviation(&x, SdConvention::Sample);
        assert!((smp / pop - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
