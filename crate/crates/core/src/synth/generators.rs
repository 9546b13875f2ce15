use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Frequency ratio between successive Weierstrass terms.
pub const WEIERSTRASS_B: f64 = 1.5;

/// `W(t) = sum_n a^n cos(2 pi b^n t + phi_n)` sampled at `t = i / fs`, with
/// `b = 1.5`, `a = b^(D - 2)` and phases drawn from `phase_seed`.
pub fn weierstrass(
    dimension: f64,
    n: usize,
    fs: f64,
    n_terms: usize,
    phase_seed: u64,
) -> Result<Vec<f64>> {
    if !(dimension > 1.0 && dimension < 2.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "Weierstrass dimension {dimension} outside (1, 2)"
        )));
    }
    if n_terms < 20 {
        return Err(Error::ParameterOutOfRange(format!(
            "{n_terms} Weierstrass terms, need at least 20"
        )));
    }
    if !(fs > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("sampling rate {fs}")));
    }
    let b = WEIERSTRASS_B;
    let a = b.powf(dimension - 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(phase_seed);
    let terms: Vec<(f64, f64, f64)> = (0..n_terms)
        .map(|k| {
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (
                a.powi(k as i32),
                std::f64::consts::TAU * b.powi(k as i32),
                phase,
            )
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / fs;
            terms
                .iter()
                .map(|&(amp, omega, phase)| amp * (omega * t + phase).cos())
                .sum()
        })
        .collect())
}

/// Autocovariance of unit-variance fractional Gaussian noise at `lag`.
pub fn fgn_autocovariance(hurst: f64, lag: usize) -> f64 {
    let k = lag as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(format!(
            "Hurst exponent {hurst} outside (0, 1)"
        )))
    }
}

/// Eigenvalues of the minimal circulant embedding (size `2n`) of the fGn
/// covariance. Fails if any is negative beyond rounding.
pub fn circulant_eigenvalues(hurst: f64, n: usize) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut c: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut c);
    let lam: Vec<f64> = c.iter().map(|z| z.re).collect();
    let floor = -1e-10 * lam.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    if let Some(&bad) = lam.iter().find(|&&v| v < floor) {
        return Err(Error::EmbeddingFailure(bad));
    }
    Ok(lam.into_iter().map(|v| v.max(0.0)).collect())
}

/// Fractional Gaussian noise by Davies–Harte circulant embedding.
pub fn fgn_circulant(hurst: f64, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lam = circulant_eigenvalues(hurst, n)?;
    let m = lam.len();
    let mut w: Vec<Complex<f64>> = lam
        .iter()
        .map(|&l| {
            let s = (l / m as f64).sqrt();
            Complex::new(
                s * rng.sample::<f64, _>(StandardNormal),
                s * rng.sample::<f64, _>(StandardNormal),
            )
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut w);
    Ok(w[..n].iter().map(|z| z.re).collect())
}

/// Fractional Gaussian noise by sequential Cholesky factorization of the
/// Toeplitz covariance (Durbin–Levinson innovations); O(n^2) time, O(n) memory.
pub fn fgn_cholesky(hurst: f64, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut x = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut v = gamma.first().copied().unwrap_or(1.0);
    for t in 0..n {
        if t > 0 {
            // extend the order-(t-1) predictor to order t
            let num = gamma[t] - (0..t - 1).map(|j| phi[j] * gamma[t - 1 - j]).sum::<f64>();
            let kappa = num / v;
            let prev = phi.clone();
            for j in 0..t - 1 {
                phi[j] = prev[j] - kappa * prev[t - 2 - j];
            }
            phi.push(kappa);
            v *= 1.0 - kappa * kappa;
        }
        let mean: f64 = (0..t).map(|j| phi[j] * x[t - 1 - j]).sum();
        let z: f64 = rng.sample(StandardNormal);
        x.push(mean + v.max(0.0).sqrt() * z);
    }
    Ok(x)
}

/// Fractional Brownian motion of length `n`: cumulative sum of fGn, drawn by
/// circulant embedding with the Cholesky route as fallback.
pub fn fbm(hurst: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = match fgn_circulant(hurst, n, &mut rng) {
        Err(Error::EmbeddingFailure(l)) => {
            log::warn!("circulant embedding failed (eigenvalue {l:e}); using Cholesky synthesis");
            fgn_cholesky(hurst, n, &mut rng)?
        }
        other => other?,
    };
    let mut acc = 0.0;
    Ok(noise
        .into_iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{higuchi_fd, HfdParams};

    #[test]
    fn weierstrass_validation_and_determinism() {
        assert!(weierstrass(1.0, 100, 1000.0, 50, 1).is_err());
        assert!(weierstrass(2.0, 100, 1000.0, 50, 1).is_err());
        assert!(weierstrass(1.5, 100, 1000.0, 19, 1).is_err());
        let a = weierstrass(1.5, 500, 1000.0, 50, 4).unwrap();
        assert_eq!(a, weierstrass(1.5, 500, 1000.0, 50, 4).unwrap());
        assert_ne!(a, weierstrass(1.5, 500, 1000.0, 50, 5).unwrap());
    }

    #[test]
    fn smooth_limit() {
        let x = weierstrass(1.0 + 1e-6, 5000, 1000.0, 50, 2).unwrap();
        let d = higuchi_fd(&x, &HfdParams::default()).unwrap();
        assert!(d <= 1.1, "{d}");
    }

    #[test]
    fn embedding_reproduces_covariance() {
        // inverse transform of the eigenvalues must give back the covariance
        for &h in &[0.2, 0.5, 0.8] {
            let n = 2048;
            let lam = circulant_eigenvalues(h, n).unwrap();
            let m = lam.len();
            let mut c: Vec<Complex<f64>> = lam.iter().map(|&l| Complex::new(l, 0.0)).collect();
            FftPlanner::new().plan_fft_inverse(m).process(&mut c);
            for lag in 0..n {
                let got = c[lag].re / m as f64;
                assert!(
                    (got - fgn_autocovariance(h, lag)).abs() < 1e-8,
                    "H={h} lag={lag}"
                );
            }
        }
    }

    #[test]
    fn fbm_is_seeded_and_validated() {
        assert!(fbm(0.0, 10, 1).is_err());
        assert!(fbm(1.0, 10, 1).is_err());
        assert_eq!(fbm(0.3, 256, 9).unwrap(), fbm(0.3, 256, 9).unwrap());
    }

    #[test]
    fn cholesky_route_matches_covariance() {
        let (h, n, reps) = (0.7, 16, 4000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cov = vec![0.0; 4];
        for _ in 0..reps {
            let x = fgn_cholesky(h, n, &mut rng).unwrap();
            for lag in 0..4 {
                cov[lag] += (0..n - lag).map(|i| x[i] * x[i + lag]).sum::<f64>() / (n - lag) as f64;
            }
        }
        for lag in 0..4 {
            let emp = cov[lag] / reps as f64;
            assert!(
                (emp - fgn_autocovariance(h, lag)).abs() < 0.05,
                "lag {lag}: {emp}"
            );
        }
    }
}
