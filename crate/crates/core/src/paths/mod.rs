//! Reproducible path ensembles.
//!
//! Every path draws from its own ChaCha8 stream selected by `(seed, path_index)`,
//! so ensembles are identical whatever the number of worker threads.

mod fbm;
mod grid;
pub mod io;

pub use fbm::{fbm_covariance, fgn_autocovariance, fgn_covariance, FbmSampler, DEFAULT_FBM_CAP};
pub use grid::{SamplePath, TimeGrid};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of paths sharing one grid, tagged with the seed and generator that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    grid: TimeGrid,
    paths: Vec<SamplePath>,
    seed: u64,
    generator_id: String,
}

impl PathEnsemble {
    pub fn new(
        grid: TimeGrid,
        paths: Vec<SamplePath>,
        seed: u64,
        generator_id: impl Into<String>,
    ) -> Result<Self> {
        if let Some(p) = paths.iter().find(|p| p.grid() != grid) {
            return Err(Error::GridMismatch(format!(
                "member path has {} steps, ensemble has {}",
                p.grid().n_steps(),
                grid.n_steps()
            )));
        }
        Ok(Self {
            grid,
            paths,
            seed,
            generator_id: generator_id.into(),
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn paths(&self) -> &[SamplePath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    /// Values of all paths at node `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.value(i)).collect()
    }

    /// Applies `f` to every path, keeping order and metadata.
    pub fn try_map(
        &self,
        generator_id: impl Into<String>,
        f: impl Fn(&SamplePath) -> Result<SamplePath> + Sync + Send,
    ) -> Result<Self> {
        let paths = self.paths.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.grid, paths, self.seed, generator_id)
    }
}

/// RNG stream for path `index` of an ensemble generated with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn generate(
    grid: TimeGrid,
    seed: u64,
    n_paths: usize,
    generator_id: String,
    make: impl Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
    }
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            SamplePath::new(grid, make(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    PathEnsemble::new(grid, paths, seed, generator_id)
}

fn cumulative(start: f64, increments: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = start;
    let mut out = vec![start];
    for d in increments {
        acc += d;
        out.push(acc);
    }
    out
}

fn brownian_values(rng: &mut ChaCha8Rng, n: usize, step: f64) -> Vec<f64> {
    let sd = step.sqrt();
    cumulative(0.0, normals(rng, n).into_iter().map(|z| sd * z))
}

/// Standard Brownian motion started at 0.
pub fn gen_brownian(grid: TimeGrid, seed: u64, n_paths: usize) -> Result<PathEnsemble> {
    let n = grid.n_steps();
    let step = grid.step();
    generate(grid, seed, n_paths, "brownian".into(), |rng| {
        brownian_values(rng, n, step)
    })
}

/// Fractional Brownian motion with Hurst index `hurst`, exact on the grid.
pub fn gen_fbm(grid: TimeGrid, hurst: f64, seed: u64, n_paths: usize) -> Result<PathEnsemble> {
    gen_fbm_with_cap(grid, hurst, seed, n_paths, DEFAULT_FBM_CAP)
}

pub fn gen_fbm_with_cap(
    grid: TimeGrid,
    hurst: f64,
    seed: u64,
    n_paths: usize,
    cap: usize,
) -> Result<PathEnsemble> {
    let n = grid.n_steps();
    let sampler = FbmSampler::new(n, hurst, grid.step(), cap)?;
    generate(grid, seed, n_paths, format!("fbm(H={hurst})"), |rng| {
        sampler.path_from_noise(&normals(rng, n))
    })
}

const WEAK_BM_SCALE: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Builds the order-1 weak Brownian motion
/// `X_t = B_t` on `[0, 1/2]`, `X_t = B_{1/2} + (sqrt 2 - 1) B_{t - 1/2}` on `(1/2, 1]`
/// from a Brownian path `b` on the same grid. Only `b` on `[0, 1/2]` is used.
pub fn weak_bm1_from_brownian(b: &SamplePath) -> Result<SamplePath> {
    let grid = b.grid();
    let n = grid.n_steps();
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "weak Brownian motion needs an even number of steps, got {n}"
        )));
    }
    let half = n / 2;
    let v = b.values();
    let mut out = Vec::with_capacity(n + 1);
    out.extend_from_slice(&v[..=half]);
    for j in 1..=half {
        out.push(v[half] + WEAK_BM_SCALE * v[j]);
    }
    SamplePath::new(grid, out)
}

fn weak_bm1_values(rng: &mut ChaCha8Rng, grid: TimeGrid) -> Vec<f64> {
    let n = grid.n_steps();
    let half = n / 2;
    let mut b = brownian_values(rng, half, grid.step());
    b.resize(n + 1, 0.0);
    weak_bm1_from_brownian(&SamplePath::from_raw(grid, b))
        .expect("grid checked by caller")
        .into_values()
}

/// Weak Brownian motion of order 1 (a non-semimartingale with Brownian marginals).
pub fn gen_weak_bm1(grid: TimeGrid, seed: u64, n_paths: usize) -> Result<PathEnsemble> {
    if !grid.n_steps().is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "weak Brownian motion needs an even number of steps, got {}",
            grid.n_steps()
        )));
    }
    generate(grid, seed, n_paths, "weak_bm1".into(), |rng| {
        weak_bm1_values(rng, grid)
    })
}

/// Price dynamics used to drive hedging and portfolio experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriceModel {
    /// `S = s0 exp(sigma W + (mu - sigma^2/2) t)`.
    Gbm { sigma: f64, mu: f64, s0: f64 },
    /// GBM with an extra `eta * B^H` in the exponent, `H > 1/2`.
    MixedGbm {
        sigma: f64,
        mu: f64,
        s0: f64,
        eta: f64,
        hurst: f64,
    },
    /// `S = s0 exp(sigma X - sigma^2 t / 2 + mu t)` with `X` the order-1 weak Brownian motion.
    WeakGbm {
        sigma: f64,
        s0: f64,
        #[serde(default)]
        mu: f64,
    },
}

impl PriceModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            PriceModel::Gbm { sigma, .. }
            | PriceModel::MixedGbm { sigma, .. }
            | PriceModel::WeakGbm { sigma, .. } => sigma,
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            PriceModel::Gbm { mu, .. }
            | PriceModel::MixedGbm { mu, .. }
            | PriceModel::WeakGbm { mu, .. } => mu,
        }
    }

    pub fn s0(&self) -> f64 {
        match *self {
            PriceModel::Gbm { s0, .. }
            | PriceModel::MixedGbm { s0, .. }
            | PriceModel::WeakGbm { s0, .. } => s0,
        }
    }

    pub fn id(&self) -> String {
        match *self {
            PriceModel::Gbm { sigma, mu, s0 } => format!("gbm(sigma={sigma},mu={mu},s0={s0})"),
            PriceModel::MixedGbm {
                sigma,
                mu,
                s0,
                eta,
                hurst,
            } => format!("mixed_gbm(sigma={sigma},mu={mu},s0={s0},eta={eta},H={hurst})"),
            PriceModel::WeakGbm { sigma, s0, mu } => {
                format!("weak_gbm(sigma={sigma},mu={mu},s0={s0})")
            }
        }
    }

    /// Expected quadratic variation density of `log S` over `[0, 1]`, i.e. `E[[log S]_1]`.
    pub fn log_qv_at_one(&self) -> f64 {
        let s = self.sigma();
        match self {
            PriceModel::WeakGbm { .. } => s * s * (2.0 - std::f64::consts::SQRT_2),
            _ => s * s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (sigma, mu, s0) = (self.sigma(), self.mu(), self.s0());
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "s0 must be positive, got {s0}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be non-negative, got {sigma}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        if let PriceModel::MixedGbm { eta, hurst, .. } = *self {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "eta must be >= 0, got {eta}"
                )));
            }
            if !(hurst > 0.5 && hurst < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "mixed model needs hurst in (1/2, 1), got {hurst}"
                )));
            }
        }
        Ok(())
    }
}

/// Strictly positive price paths for `model`.
///
/// GBM and mixed GBM consume the same leading normals for `W`, so with a common seed
/// the two ensembles share their Brownian component.
pub fn gen_price(
    model: PriceModel,
    grid: TimeGrid,
    seed: u64,
    n_paths: usize,
) -> Result<PathEnsemble> {
    model.validate()?;
    let n = grid.n_steps();
    let step = grid.step();
    let times = grid.times();
    let id = model.id();
    match model {
        PriceModel::Gbm { sigma, mu, s0 } => generate(grid, seed, n_paths, id, |rng| {
            let w = brownian_values(rng, n, step);
            exp_path(s0, &times, |i, t| {
                sigma * w[i] + (mu - 0.5 * sigma * sigma) * t
            })
        }),
        PriceModel::MixedGbm {
            sigma,
            mu,
            s0,
            eta,
            hurst,
        } => {
            let sampler = FbmSampler::new(n, hurst, step, DEFAULT_FBM_CAP)?;
            generate(grid, seed, n_paths, id, |rng| {
                let w = brownian_values(rng, n, step);
                let b = sampler.path_from_noise(&normals(rng, n));
                exp_path(s0, &times, |i, t| {
                    sigma * w[i] + eta * b[i] + (mu - 0.5 * sigma * sigma) * t
                })
            })
        }
        PriceModel::WeakGbm { sigma, s0, mu } => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidGrid(format!(
                    "weak GBM needs an even number of steps, got {n}"
                )));
            }
            generate(grid, seed, n_paths, id, |rng| {
                let x = weak_bm1_values(rng, grid);
                exp_path(s0, &times, |i, t| {
                    sigma * x[i] - 0.5 * sigma * sigma * t + mu * t
                })
            })
        }
    }
}

fn exp_path(s0: f64, times: &[f64], exponent: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| s0 * exponent(i, t).exp())
        .collect()
}
