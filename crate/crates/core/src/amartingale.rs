//! Monte Carlo tests of the A-martingale property and the compensated weak
//! Brownian motion.
//!
//! A process `M` is an A-martingale when `E[int_0^t theta d^- M] = 0` for every
//! strategy `theta` in a class A and every `t`. A finite family can only fail to
//! reject; the report names the family it was run against.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::SmoothField;
use crate::error::{Error, Result};
use crate::paths::{PathEnsemble, SamplePath, TimeGrid};
use crate::regularize::{forward_integral, RegParams};
use crate::stats;

/// One integrand `theta`.
#[derive(Debug, Clone)]
pub enum Strategy {
    /// `theta_t = d_x Psi(t, M_t)`.
    Markov { field: SmoothField },
    /// One sampled integrand per ensemble member, in ensemble order.
    Tabulated {
        label: String,
        paths: Vec<SamplePath>,
    },
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Markov { field } => format!("d_x({})", field.label()),
            Strategy::Tabulated { label, .. } => label.clone(),
        }
    }

    /// The integrand along member `index` of the ensemble whose path is `m`.
    pub fn integrand(&self, index: usize, m: &SamplePath) -> Result<SamplePath> {
        match self {
            Strategy::Markov { field } => m.map_with_time(|t, x| field.d_x(t, x)),
            Strategy::Tabulated { label, paths } => {
                let p = paths.get(index).ok_or_else(|| {
                    Error::InvalidParameter(format!("strategy {label} has no path {index}"))
                })?;
                m.ensure_same_grid(p)?;
                Ok(p.clone())
            }
        }
    }

    fn check(&self, ensemble: &PathEnsemble) -> Result<()> {
        if let Strategy::Tabulated { label, paths } = self {
            if paths.len() != ensemble.len() {
                return Err(Error::InvalidParameter(format!(
                    "strategy {label} has {} paths, ensemble has {}",
                    paths.len(),
                    ensemble.len()
                )));
            }
        }
        Ok(())
    }
}

/// A labelled finite family of strategies.
#[derive(Debug, Clone)]
pub struct StrategyFamily {
    pub label: String,
    pub strategies: Vec<Strategy>,
}

impl StrategyFamily {
    pub fn new(label: impl Into<String>, strategies: Vec<Strategy>) -> Self {
        Self {
            label: label.into(),
            strategies,
        }
    }

    /// `{d_x Psi : Psi in fields}`.
    pub fn from_fields(label: impl Into<String>, fields: Vec<SmoothField>) -> Self {
        Self::new(
            label,
            fields
                .into_iter()
                .map(|field| Strategy::Markov { field })
                .collect(),
        )
    }

    /// `{1, x, cos x}`, generated by `x`, `x^2/2` and `sin x`.
    pub fn smooth_three() -> Self {
        Self::from_fields(
            "{d_x Psi : Psi in {x, x^2/2, sin x}}",
            vec![
                SmoothField::identity(),
                SmoothField::half_square(),
                SmoothField::sine(),
            ],
        )
    }

    /// `{1, x, sin x}`, generated by `x`, `x^2/2` and `-cos x`.
    pub fn one_x_sine() -> Self {
        Self::from_fields(
            "{1, x, sin x}",
            vec![
                SmoothField::identity(),
                SmoothField::half_square(),
                SmoothField::neg_cosine(),
            ],
        )
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }
}

/// Statistics of `int_0^t theta d^- M` for one strategy and checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRow {
    pub strategy: String,
    pub checkpoint: f64,
    pub mean: f64,
    pub std: f64,
    pub n_paths: usize,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleTestResult {
    pub family: String,
    pub z_crit: f64,
    pub checkpoints: Vec<f64>,
    /// Strategy-major: all checkpoints of the first strategy, then the next.
    pub rows: Vec<TestRow>,
    pub pass: bool,
}

impl MartingaleTestResult {
    /// Largest `|z|` over the table, 0 for an empty table.
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().fold(0.0_f64, |m, r| m.max(r.z.abs()))
    }

    pub fn row(&self, strategy: usize, checkpoint: usize) -> Option<&TestRow> {
        if checkpoint >= self.checkpoints.len() {
            return None;
        }
        self.rows
            .get(strategy * self.checkpoints.len() + checkpoint)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy_id,checkpoint,mean,std,z,verdict\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{}\n",
                r.strategy,
                r.checkpoint,
                r.mean,
                r.std,
                r.z,
                if r.pass { "pass" } else { "fail" }
            ));
        }
        out
    }
}

fn checkpoint_indices(grid: TimeGrid, checkpoints: &[f64]) -> Result<Vec<usize>> {
    checkpoints.iter().map(|&t| grid.index_of(t)).collect()
}

/// z-tests of `E[int_0^t theta d^- M] = 0` for every strategy and checkpoint.
///
/// Per-path integrals are computed in parallel and reduced in path order.
pub fn test_amartingale(
    m: &PathEnsemble,
    family: &StrategyFamily,
    checkpoints: &[f64],
    params: RegParams,
    z_crit: f64,
) -> Result<MartingaleTestResult> {
    if !(z_crit > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "z_crit must be positive, got {z_crit}"
        )));
    }
    let grid = m.grid();
    params.validate(grid)?;
    let idx = checkpoint_indices(grid, checkpoints)?;
    let n = m.len();
    if n < 2 && !family.is_empty() {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    let mut rows = Vec::with_capacity(family.strategies.len() * idx.len());
    for strategy in &family.strategies {
        strategy.check(m)?;
        let label = strategy.label();
        let samples = m
            .paths()
            .par_iter()
            .enumerate()
            .map(|(k, path)| {
                let theta = strategy.integrand(k, path)?;
                let integral = forward_integral(&theta, path, params)?;
                Ok(idx.iter().map(|&i| integral.value(i)).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        for (c, &t) in checkpoints.iter().enumerate() {
            let column: Vec<f64> = samples.iter().map(|s| s[c]).collect();
            let mean = stats::mean(&column);
            let std = stats::std_dev(&column);
            let z = if std > 0.0 {
                mean / (std / (n as f64).sqrt())
            } else if mean == 0.0 {
                0.0
            } else {
                return Err(Error::Degenerate(format!(
                    "strategy {label} at t={t}: integral is the constant {mean} on every path"
                )));
            };
            rows.push(TestRow {
                strategy: label.clone(),
                checkpoint: t,
                mean,
                std,
                n_paths: n,
                z,
                pass: z.abs() <= z_crit,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(MartingaleTestResult {
        family: family.label.clone(),
        z_crit,
        checkpoints: checkpoints.to_vec(),
        rows,
        pass,
    })
}

/// Piecewise-constant density `f`, one value per grid cell `(t_i, t_{i+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDensity {
    grid: TimeGrid,
    cells: Vec<f64>,
}

impl StepDensity {
    pub fn new(grid: TimeGrid, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != grid.n_steps() {
            return Err(Error::GridMismatch(format!(
                "{} cell values for {} cells",
                cells.len(),
                grid.n_steps()
            )));
        }
        if let Some(v) = cells.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "density must be positive and finite, got {v}"
            )));
        }
        Ok(Self { grid, cells })
    }

    /// Samples `f` at the cell midpoints.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = grid.step();
        let cells = (0..grid.n_steps())
            .map(|i| f(grid.time(i) + 0.5 * h))
            .collect();
        Self::new(grid, cells)
    }

    /// `f = 1` on `[0, 1/2]` and `(sqrt 2 - 1)^2` on `(1/2, 1]`, the density of the
    /// order-1 weak Brownian motion.
    pub fn weak_bm1(grid: TimeGrid) -> Result<Self> {
        let c = (std::f64::consts::SQRT_2 - 1.0).powi(2);
        Self::from_fn(grid, |t| if t <= 0.5 { 1.0 } else { c })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n_steps()])
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }
}

/// `M = X - int_0^. (1 - f_s) X_s / (2s) ds` for every path.
///
/// For `X_s ~ N(0, s)` Gaussian integration by parts gives
/// `E[int psi d^- X] = E[int psi (1 - f_s) X_s / (2s) ds]`, so this drift is removed.
/// Trapezoid rule on every cell but the first; the first cell uses its midpoint
/// with `X` at the right node to avoid `0/0` at `s = 0`.
pub fn compensate_weak_bm(x: &PathEnsemble, f: &StepDensity) -> Result<PathEnsemble> {
    let grid = x.grid();
    if f.grid() != grid {
        return Err(Error::GridMismatch(format!(
            "density has {} cells, ensemble has {} steps",
            f.grid().n_steps(),
            grid.n_steps()
        )));
    }
    let h = grid.step();
    let times = grid.times();
    let cells = f.cells();
    x.try_map(format!("compensated({})", x.generator_id()), |path| {
        let v = path.values();
        let mut out = Vec::with_capacity(v.len());
        out.push(v[0]);
        let mut acc = 0.0;
        for i in 0..cells.len() {
            let w = 1.0 - cells[i];
            if w != 0.0 {
                acc -= if i == 0 {
                    w * v[1] / (2.0 * (0.5 * h)) * h
                } else {
                    w * 0.5 * h * (v[i] / (2.0 * times[i]) + v[i + 1] / (2.0 * times[i + 1]))
                };
            }
            out.push(v[i + 1] + acc);
        }
        SamplePath::new(grid, out)
    })
}
