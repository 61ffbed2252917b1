use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Finite-difference spacing for derivative cross-checks.
pub const PROBE_SPACING: f64 = 1e-5;
/// Relative tolerance for derivative cross-checks.
pub const PROBE_TOLERANCE: f64 = 1e-4;

/// A `C^{1,2}` function `Psi(t, x)` carried with its partial derivatives.
#[derive(Clone)]
pub struct SmoothField {
    label: String,
    value: Fn2,
    d_t: Fn2,
    d_x: Fn2,
    d_xx: Fn2,
    /// Polynomial growth degree, diagnostic only.
    pub growth_degree: u32,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothField")
            .field("label", &self.label)
            .field("growth_degree", &self.growth_degree)
            .finish()
    }
}

impl SmoothField {
    pub fn new<V, T, X, XX>(label: impl Into<String>, value: V, d_t: T, d_x: X, d_xx: XX) -> Self
    where
        V: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        T: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        X: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        XX: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            value: Arc::new(value),
            d_t: Arc::new(d_t),
            d_x: Arc::new(d_x),
            d_xx: Arc::new(d_xx),
            growth_degree: 0,
        }
    }

    pub fn with_growth(mut self, degree: u32) -> Self {
        self.growth_degree = degree;
        self
    }

    /// `Psi = x`.
    pub fn identity() -> Self {
        Self::new("x", |_, x| x, |_, _| 0.0, |_, _| 1.0, |_, _| 0.0).with_growth(1)
    }

    /// `Psi = x^2 / 2`.
    pub fn half_square() -> Self {
        Self::new(
            "x^2/2",
            |_, x| 0.5 * x * x,
            |_, _| 0.0,
            |_, x| x,
            |_, _| 1.0,
        )
        .with_growth(2)
    }

    /// `Psi = x^2`.
    pub fn square() -> Self {
        Self::new("x^2", |_, x| x * x, |_, _| 0.0, |_, x| 2.0 * x, |_, _| 2.0).with_growth(2)
    }

    /// `Psi = sin x`.
    pub fn sine() -> Self {
        Self::new(
            "sin x",
            |_, x| x.sin(),
            |_, _| 0.0,
            |_, x| x.cos(),
            |_, x| -x.sin(),
        )
    }

    /// `Psi = -cos x`, whose `x`-derivative is `sin x`.
    pub fn neg_cosine() -> Self {
        Self::new(
            "-cos x",
            |_, x| -x.cos(),
            |_, _| 0.0,
            |_, x| x.sin(),
            |_, x| x.cos(),
        )
    }

    /// `Psi = e^x`.
    pub fn exp() -> Self {
        Self::new(
            "exp x",
            |_, x| x.exp(),
            |_, _| 0.0,
            |_, x| x.exp(),
            |_, x| x.exp(),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        (self.value)(t, x)
    }

    pub fn d_t(&self, t: f64, x: f64) -> f64 {
        (self.d_t)(t, x)
    }

    pub fn d_x(&self, t: f64, x: f64) -> f64 {
        (self.d_x)(t, x)
    }

    pub fn d_xx(&self, t: f64, x: f64) -> f64 {
        (self.d_xx)(t, x)
    }

    /// Compares the supplied derivatives with centered differences of `Psi` at `probes`.
    pub fn cross_check_at(&self, probes: &[(f64, f64)]) -> Result<()> {
        let h = PROBE_SPACING;
        for &(t, x) in probes {
            let v = self.value(t, x);
            let fd_t = (self.value(t + h, x) - self.value(t - h, x)) / (2.0 * h);
            let fd_x = (self.value(t, x + h) - self.value(t, x - h)) / (2.0 * h);
            let fd_xx = (self.value(t, x + h) - 2.0 * v + self.value(t, x - h)) / (h * h);
            for (name, fd, given) in [
                ("d_t", fd_t, self.d_t(t, x)),
                ("d_x", fd_x, self.d_x(t, x)),
                ("d_xx", fd_xx, self.d_xx(t, x)),
            ] {
                // Second differences lose about eps/h^2 of |Psi| to rounding.
                let floor = if name == "d_xx" {
                    1e-5 * v.abs().max(1.0)
                } else {
                    0.0
                };
                if (fd - given).abs() > PROBE_TOLERANCE * given.abs().max(1.0) + floor {
                    return Err(Error::DerivativeCheck(format!(
                        "{}: {name} at (t={t}, x={x}) is {given}, finite difference gives {fd}",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }

    /// Cross-check at 16 pseudo-random probes in `[0.05, 0.95] x [-2, 2]`.
    pub fn cross_check(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let probes: Vec<(f64, f64)> = (0..16)
            .map(|_| (rng.random_range(0.05..0.95), rng.random_range(-2.0..2.0)))
            .collect();
        self.cross_check_at(&probes)
    }
}

type VecFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VecGrad = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Time-independent `psi: R^d -> R` with gradient and Hessian (row-major `d x d`).
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    value: VecFn,
    gradient: VecGrad,
    hessian: VecGrad,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .finish()
    }
}

impl VectorField {
    pub fn new<V, G, H>(dim: usize, value: V, gradient: G, hessian: H) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        H: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
        }
    }

    /// One-dimensional field from `Psi(0, .)`.
    pub fn from_scalar(field: &SmoothField) -> Self {
        let (f, g, h) = (field.clone(), field.clone(), field.clone());
        Self::new(
            1,
            move |x| f.value(0.0, x[0]),
            move |x, out| out[0] = g.d_x(0.0, x[0]),
            move |x, out| out[0] = h.d_xx(0.0, x[0]),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }

    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        (self.hessian)(x, out)
    }
}
