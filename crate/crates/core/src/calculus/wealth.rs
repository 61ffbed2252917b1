use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{PathEnsemble, SamplePath};
use crate::quad::adaptive_simpson;
use crate::regularize::{forward_integral, RegParams};
use crate::stats;

/// Absolute tolerance of the quadrature fallback for `phi~ = int_0^x phi dy`.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Path functionals that may enter a strategy besides the current price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    RunningMin,
    RunningMax,
    RunningIntegral,
}

impl FactorKind {
    /// Factor path along `s`: exact running extrema, and `int_0^t S ds` by the left rule.
    pub fn path(&self, s: &SamplePath) -> SamplePath {
        let v = s.values();
        let mut out = Vec::with_capacity(v.len());
        match self {
            FactorKind::RunningMin => {
                let mut m = v[0];
                for &x in v {
                    m = m.min(x);
                    out.push(m);
                }
            }
            FactorKind::RunningMax => {
                let mut m = v[0];
                for &x in v {
                    m = m.max(x);
                    out.push(m);
                }
            }
            FactorKind::RunningIntegral => {
                let step = s.grid().step();
                let mut acc = 0.0;
                out.push(acc);
                for &x in &v[..v.len() - 1] {
                    acc += x * step;
                    out.push(acc);
                }
            }
        }
        SamplePath::new(s.grid(), out).expect("factor of a finite path is finite")
    }

    /// Node at which the integrand of `int . dV` is sampled for the increment over cell `i`.
    /// Running extrema move only where the price sits at the extremum, i.e. the right node.
    fn stieltjes_node(&self, i: usize) -> usize {
        match self {
            FactorKind::RunningMin | FactorKind::RunningMax => i + 1,
            FactorKind::RunningIntegral => i,
        }
    }
}

type PhiFn = Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;
type PhiFactorFn = Arc<dyn Fn(f64, &[f64], f64, usize) -> f64 + Send + Sync>;

/// Closed-form `phi~(t, v, x) = int_0^x phi(t, v, y) dy` with its `t`- and `v_k`-derivatives.
#[derive(Clone)]
pub struct Antiderivative {
    pub value: PhiFn,
    pub d_t: PhiFn,
    pub d_v: PhiFactorFn,
}

impl Antiderivative {
    pub fn new<V, T, D>(value: V, d_t: T, d_v: D) -> Self
    where
        V: Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
        T: Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64, &[f64], f64, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            d_t: Arc::new(d_t),
            d_v: Arc::new(d_v),
        }
    }
}

/// Holding `h_t = phi(t, V_t^1, .., V_t^k, S_t)` driven by inside factors `V^k`.
#[derive(Clone)]
pub struct InsideFactorStrategy {
    label: String,
    factors: Vec<FactorKind>,
    phi: PhiFn,
    d_x: Option<PhiFn>,
    d_t: Option<PhiFn>,
    d_v: Option<PhiFactorFn>,
    antiderivative: Option<Antiderivative>,
}

impl fmt::Debug for InsideFactorStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InsideFactorStrategy")
            .field("label", &self.label)
            .field("factors", &self.factors)
            .field("closed_form", &self.antiderivative.is_some())
            .finish()
    }
}

impl InsideFactorStrategy {
    pub fn new<P>(label: impl Into<String>, factors: Vec<FactorKind>, phi: P) -> Self
    where
        P: Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            factors,
            phi: Arc::new(phi),
            d_x: None,
            d_t: None,
            d_v: None,
            antiderivative: None,
        }
    }

    pub fn with_d_x(mut self, f: impl Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d_x = Some(Arc::new(f));
        self
    }

    pub fn with_d_t(mut self, f: impl Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d_t = Some(Arc::new(f));
        self
    }

    pub fn with_d_v(
        mut self,
        f: impl Fn(f64, &[f64], f64, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d_v = Some(Arc::new(f));
        self
    }

    pub fn with_antiderivative(mut self, a: Antiderivative) -> Self {
        self.antiderivative = Some(a);
        self
    }

    /// `phi = 1`: buy and hold one share.
    pub fn unit() -> Self {
        Self::new("1", vec![], |_, _, _| 1.0)
            .with_d_x(|_, _, _| 0.0)
            .with_antiderivative(Antiderivative::new(
                |_, _, x| x,
                |_, _, _| 0.0,
                |_, _, _, _| 0.0,
            ))
    }

    /// `phi = x`.
    pub fn linear() -> Self {
        Self::new("x", vec![], |_, _, x| x)
            .with_d_x(|_, _, _| 1.0)
            .with_antiderivative(Antiderivative::new(
                |_, _, x| 0.5 * x * x,
                |_, _, _| 0.0,
                |_, _, _, _| 0.0,
            ))
    }

    /// `phi = x - min_{s <= t} S_s`: hold the distance above the running minimum.
    pub fn above_running_min() -> Self {
        Self::new("x - min", vec![FactorKind::RunningMin], |_, v, x| x - v[0])
            .with_d_x(|_, _, _| 1.0)
            .with_antiderivative(Antiderivative::new(
                |_, v, x| 0.5 * x * x - v[0] * x,
                |_, _, _| 0.0,
                |_, _, x, _| -x,
            ))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn factors(&self) -> &[FactorKind] {
        &self.factors
    }

    pub fn phi(&self, t: f64, v: &[f64], x: f64) -> f64 {
        (self.phi)(t, v, x)
    }

    fn missing(&self, what: &str) -> Error {
        Error::InvalidParameter(format!("strategy {}: {what} not supplied", self.label))
    }

    fn quad(&self, f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
        adaptive_simpson(f, 0.0, x, QUADRATURE_TOLERANCE)
            .ok_or_else(|| Error::Degenerate(format!("quadrature failed for {}", self.label)))
    }

    fn tilde(&self, t: f64, v: &[f64], x: f64) -> Result<f64> {
        match &self.antiderivative {
            Some(a) => Ok((a.value)(t, v, x)),
            None => self.quad(|y| (self.phi)(t, v, y), x),
        }
    }

    fn tilde_d_t(&self, t: f64, v: &[f64], x: f64) -> Result<f64> {
        match (&self.antiderivative, &self.d_t) {
            (Some(a), _) => Ok((a.d_t)(t, v, x)),
            (None, Some(d)) => self.quad(|y| d(t, v, y), x),
            (None, None) => Err(self.missing("time derivative")),
        }
    }

    fn tilde_d_v(&self, t: f64, v: &[f64], x: f64, k: usize) -> Result<f64> {
        match (&self.antiderivative, &self.d_v) {
            (Some(a), _) => Ok((a.d_v)(t, v, x, k)),
            (None, Some(d)) => self.quad(|y| d(t, v, y, k), x),
            (None, None) => Err(self.missing("factor derivative")),
        }
    }

    fn d_x(&self) -> Result<&PhiFn> {
        self.d_x
            .as_ref()
            .ok_or_else(|| self.missing("x derivative"))
    }

    fn factor_paths(&self, s: &SamplePath) -> Vec<SamplePath> {
        self.factors.iter().map(|f| f.path(s)).collect()
    }
}

/// The discrete history `{S_s : s <= t}` handed to volatility functionals.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    values: &'a [f64],
    step: f64,
}

impl<'a> History<'a> {
    pub fn new(values: &'a [f64], step: f64) -> Self {
        assert!(!values.is_empty());
        Self { values, step }
    }

    pub fn current(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `S_{t + r}` for a lag `r <= 0` rounded to the grid; times before 0 read `S_0`.
    pub fn at_lag(&self, r: f64) -> f64 {
        let back = (-r / self.step).round().max(0.0) as usize;
        let last = self.values.len() - 1;
        self.values[last.saturating_sub(back)]
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }
}

/// Strategy holdings `h_{t_i} = phi(t_i, V_{t_i}, S_{t_i})` along `s`.
pub fn strategy_path(strategy: &InsideFactorStrategy, s: &SamplePath) -> Result<SamplePath> {
    let factors = strategy.factor_paths(s);
    let grid = s.grid();
    let mut v = vec![0.0; factors.len()];
    let values = (0..grid.len())
        .map(|i| {
            for (k, f) in factors.iter().enumerate() {
                v[k] = f.value(i);
            }
            strategy.phi(grid.time(i), &v, s.value(i))
        })
        .collect();
    SamplePath::new(grid, values)
}

/// Pathwise wealth `V_phi(S)` of a strategy with inside factors, assuming
/// `d[S]_t = sigma^2(t, S_t(.)) S_t^2 dt`.
///
/// Only pointwise evaluations and Stieltjes sums are used, no forward integral:
///
/// ```text
/// V = phi~(1, V_1, S_1) - phi~(0, V_0, S_0) - int d_t phi~ ds
///     - 1/2 int d_x phi sigma^2 S^2 ds - sum_k int d_{v_k} phi~ dV^k
/// ```
pub fn pathwise_wealth_functional<F>(
    strategy: &InsideFactorStrategy,
    s: &SamplePath,
    sigma: &F,
) -> Result<f64>
where
    F: Fn(f64, &History) -> f64 + ?Sized,
{
    let d_x = strategy.d_x()?;
    let grid = s.grid();
    let n = grid.n_steps();
    let step = grid.step();
    let factors = strategy.factor_paths(s);
    let sv = s.values();
    let at = |i: usize| -> Vec<f64> { factors.iter().map(|f| f.value(i)).collect() };

    let boundary = strategy.tilde(1.0, &at(n), sv[n])? - strategy.tilde(0.0, &at(0), sv[0])?;
    let mut time_term = 0.0;
    let mut qv_term = 0.0;
    for i in 0..n {
        let t = grid.time(i);
        let v = at(i);
        let x = sv[i];
        time_term += strategy.tilde_d_t(t, &v, x)? * step;
        let vol = sigma(t, &History::new(&sv[..=i], step));
        qv_term += d_x(t, &v, x) * vol * vol * x * x * step;
    }
    let mut factor_term = 0.0;
    for (k, (kind, path)) in strategy.factors.iter().zip(&factors).enumerate() {
        for i in 0..n {
            let dv = path.value(i + 1) - path.value(i);
            if dv == 0.0 {
                continue;
            }
            let j = kind.stieltjes_node(i);
            factor_term += strategy.tilde_d_v(grid.time(j), &at(j), sv[j], k)? * dv;
        }
    }
    Ok(boundary - time_term - 0.5 * qv_term - factor_term)
}

/// Gap between `V_phi` and the forward-integral wealth over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalGapSummary {
    pub n: usize,
    pub n_paths: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
}

/// Per-path `|V_phi(S) - int_0^1 h d^- S|`, summarized.
pub fn compare_functional<F>(
    strategy: &InsideFactorStrategy,
    ensemble: &PathEnsemble,
    sigma: &F,
    params: RegParams,
) -> Result<FunctionalGapSummary>
where
    F: Fn(f64, &History) -> f64 + Sync + ?Sized,
{
    let gaps = ensemble
        .paths()
        .par_iter()
        .map(|s| {
            let v = pathwise_wealth_functional(strategy, s, sigma)?;
            let h = strategy_path(strategy, s)?;
            let fi = forward_integral(&h, s, params)?.last();
            Ok((v - fi).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FunctionalGapSummary {
        n: ensemble.grid().n_steps(),
        n_paths: ensemble.len(),
        mean_gap: stats::mean(&gaps),
        max_gap: stats::max_abs(&gaps),
    })
}

/// Fraction of ensemble paths within sup-distance `eps` of `target` on the grid nodes.
pub fn full_support_fraction(
    ensemble: &PathEnsemble,
    target: &SamplePath,
    eps: f64,
) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tube radius must be >= 0, got {eps}"
        )));
    }
    if ensemble.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    if target.grid() != ensemble.grid() {
        return Err(Error::GridMismatch(
            "target and ensemble grids differ".into(),
        ));
    }
    let tv = target.values();
    let inside: usize = ensemble
        .paths()
        .par_iter()
        .map(|p| {
            let dist = p
                .values()
                .iter()
                .zip(tv)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            usize::from(dist <= eps)
        })
        .sum();
    Ok(inside as f64 / ensemble.len() as f64)
}
