//! Exact fractional Brownian motion on a uniform grid.
//!
//! The increments of `B^H` over cells of width `dt` form a stationary Gaussian
//! sequence (fractional Gaussian noise) with autocovariance
//!
//! ```text
//! gamma(k) = dt^{2H} / 2 * (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})
//! ```
//!
//! Samples are produced as `L z` with `L` the lower Cholesky factor of the
//! Toeplitz covariance. Because the matrix is Toeplitz, `L z` is applied through
//! the Levinson-Durbin innovations recursion instead of a dense factorization:
//! the reflection coefficients and innovation variances are computed once per
//! sampler (`O(n^2)`), and each path costs `O(n^2)` with `O(n)` memory.

use crate::error::{Error, Result};

/// Default cap on the number of steps for exact fBm generation.
pub const DEFAULT_FBM_CAP: usize = 8192;

/// Autocovariance of fractional Gaussian noise at lag `k` for cell width `dt`.
pub fn fgn_autocovariance(k: usize, hurst: f64, dt: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    let lag = |x: f64| x.abs().powf(h2);
    0.5 * dt.powf(h2) * (lag(k + 1.0) - 2.0 * lag(k) + lag(k - 1.0))
}

/// Dense `n x n` covariance matrix of the increments, row-major.
pub fn fgn_covariance(n: usize, hurst: f64, dt: f64) -> Vec<f64> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, hurst, dt)).collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = gamma[i.abs_diff(j)];
        }
    }
    out
}

/// Analytic covariance `E[B_s B_t]`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
}

/// Precomputed Levinson-Durbin factorization for one `(n, H, dt)`.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    hurst: f64,
    reflection: Vec<f64>,
    innovation_sd: Vec<f64>,
}

impl FbmSampler {
    pub fn new(n: usize, hurst: f64, dt: f64, cap: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hurst must lie in (0, 1), got {hurst}"
            )));
        }
        if n > cap {
            return Err(Error::Capacity(format!(
                "exact fBm limited to {cap} steps, requested {n}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("fBm needs at least one step".into()));
        }
        let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, hurst, dt)).collect();
        let mut reflection = vec![0.0; n];
        let mut variance = vec![0.0; n];
        variance[0] = gamma[0];
        let mut phi = vec![0.0; n];
        let mut prev = vec![0.0; n];
        for k in 1..n {
            let mut acc = gamma[k];
            for j in 1..k {
                acc -= prev[j] * gamma[k - j];
            }
            let kappa = acc / variance[k - 1];
            reflection[k] = kappa;
            phi[k] = kappa;
            for j in 1..k {
                phi[j] = prev[j] - kappa * prev[k - j];
            }
            variance[k] = variance[k - 1] * (1.0 - kappa * kappa);
            if !(variance[k] > 0.0) {
                return Err(Error::Degenerate(format!(
                    "fGn covariance not positive definite at lag {k}"
                )));
            }
            prev[1..=k].copy_from_slice(&phi[1..=k]);
        }
        Ok(Self {
            hurst,
            reflection,
            innovation_sd: variance.into_iter().map(f64::sqrt).collect(),
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn n(&self) -> usize {
        self.innovation_sd.len()
    }

    /// Writes `L z` into `out`, where `L` is the Cholesky factor of the increment covariance.
    pub fn increments_from_noise(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n();
        assert_eq!(z.len(), n);
        assert_eq!(out.len(), n);
        let mut phi = vec![0.0; n];
        let mut prev = vec![0.0; n];
        out[0] = self.innovation_sd[0] * z[0];
        for k in 1..n {
            let kappa = self.reflection[k];
            phi[k] = kappa;
            for j in 1..k {
                phi[j] = prev[j] - kappa * prev[k - j];
            }
            let mut pred = 0.0;
            for j in 1..=k {
                pred += phi[j] * out[k - j];
            }
            out[k] = pred + self.innovation_sd[k] * z[k];
            prev[1..=k].copy_from_slice(&phi[1..=k]);
        }
    }

    /// Zero-started fBm values (length `n + 1`) from standard normal noise.
    pub fn path_from_noise(&self, z: &[f64]) -> Vec<f64> {
        let mut inc = vec![0.0; self.n()];
        self.increments_from_noise(z, &mut inc);
        let mut values = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for d in inc {
            acc += d;
            values.push(acc);
        }
        values
    }
}
