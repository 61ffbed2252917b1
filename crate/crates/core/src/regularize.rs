//! Discrete regularization estimators.
//!
//! With `eps = m * step` and a left-endpoint rule for the `ds` integral,
//!
//! ```text
//! I(eps, Y, X, t_j) = (1/m) * sum_{i<j} Y_i (X_{i+m} - X_i)
//! C(eps, X, Y, t_j) = (1/m) * sum_{i<j} (X_{i+m} - X_i)(Y_{i+m} - Y_i)
//! ```
//!
//! where indices past the last node clamp to it. For `m = 1` these are the
//! forward Riemann sum and the realized covariation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{PathEnsemble, SamplePath, TimeGrid};
use crate::stats;

/// Regularization window: `eps = m * step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegParams {
    pub m: usize,
}

impl Default for RegParams {
    fn default() -> Self {
        Self { m: 1 }
    }
}

impl RegParams {
    pub fn new(m: usize) -> Self {
        Self { m }
    }

    pub fn validate(&self, grid: TimeGrid) -> Result<()> {
        if self.m == 0 || self.m > grid.n_steps() {
            return Err(Error::InvalidParameter(format!(
                "regularization window m = {} outside [1, {}]",
                self.m,
                grid.n_steps()
            )));
        }
        Ok(())
    }

    pub fn epsilon(&self, grid: TimeGrid) -> f64 {
        self.m as f64 * grid.step()
    }
}

fn accumulate(grid: TimeGrid, term: impl Fn(usize) -> f64) -> SamplePath {
    let n = grid.n_steps();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for i in 0..n {
        acc += term(i);
        out.push(acc);
    }
    SamplePath::from_raw(grid, out)
}

/// Forward integral `int_0^. Y d^- X`.
pub fn forward_integral(y: &SamplePath, x: &SamplePath, params: RegParams) -> Result<SamplePath> {
    y.ensure_same_grid(x)?;
    let grid = x.grid();
    params.validate(grid)?;
    let m = params.m;
    let inv_m = 1.0 / m as f64;
    let (yv, xv) = (y.values(), x.values());
    Ok(if m == 1 {
        accumulate(grid, |i| yv[i] * (xv[i + 1] - xv[i]))
    } else {
        accumulate(grid, |i| yv[i] * (x.shifted(i, m) - xv[i]) * inv_m)
    })
}

/// Covariation `[X, Y]`; symmetric in its arguments bit for bit.
pub fn covariation(x: &SamplePath, y: &SamplePath, params: RegParams) -> Result<SamplePath> {
    x.ensure_same_grid(y)?;
    let grid = x.grid();
    params.validate(grid)?;
    let m = params.m;
    let inv_m = 1.0 / m as f64;
    let (xv, yv) = (x.values(), y.values());
    Ok(if m == 1 {
        accumulate(grid, |i| (xv[i + 1] - xv[i]) * (yv[i + 1] - yv[i]))
    } else {
        accumulate(grid, |i| {
            (x.shifted(i, m) - xv[i]) * (y.shifted(i, m) - yv[i]) * inv_m
        })
    })
}

/// Quadratic variation `[X]`.
pub fn quadratic_variation(x: &SamplePath, params: RegParams) -> Result<SamplePath> {
    covariation(x, x, params)
}

/// Riemann-Stieltjes sum `int_0^. Y dV` against a bounded-variation path, left endpoint rule.
pub fn stieltjes(y: &SamplePath, v: &SamplePath) -> Result<SamplePath> {
    forward_integral(y, v, RegParams::default())
}

/// `int_0^. f(t) dt` by the left-endpoint rule (adapted integrand sample).
pub fn time_integral(f: &SamplePath) -> SamplePath {
    let grid = f.grid();
    let step = grid.step();
    let fv = f.values();
    accumulate(grid, |i| fv[i] * step)
}

/// One line of a [`ConvergenceTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: usize,
    pub mean_abs_error: f64,
    pub rms_error: f64,
}

/// Errors of an estimator at `t = 1` against a per-path reference, across grids and windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// For every `m`, RMS error is non-increasing as `n` grows.
    pub monotone: bool,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,mean_abs_error,rms_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.n, r.m, r.mean_abs_error, r.rms_error
            ));
        }
        out
    }

    pub fn row(&self, n: usize, m: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n && r.m == m)
    }
}

/// Runs `estimator` at `t = 1` on ensembles from `family` for each `(n, m)` and compares
/// with `target`, evaluated on the same path.
pub fn convergence_study<G, E, T>(
    family: G,
    estimator: E,
    target: T,
    m_list: &[usize],
    n_list: &[usize],
) -> Result<ConvergenceTable>
where
    G: Fn(TimeGrid) -> Result<PathEnsemble>,
    E: Fn(&SamplePath, RegParams) -> Result<SamplePath>,
    T: Fn(&SamplePath) -> f64,
{
    if m_list.is_empty() || n_list.is_empty() {
        return Err(Error::InvalidParameter(
            "convergence study needs non-empty m and n lists".into(),
        ));
    }
    let mut n_sorted = n_list.to_vec();
    n_sorted.sort_unstable();
    let mut rows = Vec::new();
    for &n in &n_sorted {
        let grid = TimeGrid::new(n)?;
        let ensemble = family(grid)?;
        for &m in m_list {
            let params = RegParams::new(m);
            let errors = ensemble
                .paths()
                .iter()
                .map(|p| Ok(estimator(p, params)?.last() - target(p)))
                .collect::<Result<Vec<f64>>>()?;
            let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
            rows.push(ConvergenceRow {
                n,
                m,
                mean_abs_error: stats::mean(&abs),
                rms_error: stats::rms(&errors),
            });
        }
    }
    let monotone = m_list.iter().all(|&m| {
        let col: Vec<f64> = rows
            .iter()
            .filter(|r| r.m == m)
            .map(|r| r.rms_error)
            .collect();
        col.windows(2).all(|w| w[1] <= w[0])
    });
    Ok(ConvergenceTable { rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::gen_brownian;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n).unwrap()
    }

    #[test]
    fn unit_integrand_telescopes() {
        let e = gen_brownian(grid(64), 1, 1).unwrap();
        let x = &e.paths()[0];
        let one = SamplePath::constant(x.grid(), 1.0).unwrap();
        let fi = forward_integral(&one, x, RegParams::default()).unwrap();
        for j in 0..=64 {
            assert!((fi.value(j) - (x.value(j) - x.value(0))).abs() < 1e-14);
        }
    }

    #[test]
    fn self_integral_identity() {
        let e = gen_brownian(grid(128), 2, 1).unwrap();
        let w = &e.paths()[0];
        let fi = forward_integral(w, w, RegParams::default()).unwrap();
        let qv = quadratic_variation(w, RegParams::default()).unwrap();
        for j in 0..=128 {
            let rhs = 0.5 * (w.value(j).powi(2) - w.value(0).powi(2) - qv.value(j));
            assert!((fi.value(j) - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_path_has_qv_step() {
        let g = grid(100);
        let x = SamplePath::from_fn(g, |t| t).unwrap();
        let qv = quadratic_variation(&x, RegParams::default()).unwrap();
        assert!((qv.last() - g.step()).abs() < 1e-15);
        assert!(qv.sup_norm() <= g.step() + 1e-15);
    }

    #[test]
    fn window_bounds() {
        let g = grid(8);
        let x = SamplePath::from_fn(g, |t| t).unwrap();
        assert!(forward_integral(&x, &x, RegParams::new(0)).is_err());
        assert!(forward_integral(&x, &x, RegParams::new(9)).is_err());
        assert!(forward_integral(&x, &x, RegParams::new(8)).is_ok());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = SamplePath::from_fn(grid(8), |t| t).unwrap();
        let b = SamplePath::from_fn(grid(16), |t| t).unwrap();
        assert!(matches!(
            covariation(&a, &b, RegParams::default()),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn right_boundary_clamps() {
        // X_t = t with m = 4 on 8 steps: the last 3 cells see the clamped endpoint.
        let g = grid(8);
        let x = SamplePath::from_fn(g, |t| t).unwrap();
        let one = SamplePath::constant(g, 1.0).unwrap();
        let fi = forward_integral(&one, &x, RegParams::new(4)).unwrap();
        let expected: f64 = (0..8)
            .map(|i| (((i + 4).min(8) - i) as f64) * g.step() / 4.0)
            .sum();
        assert!((fi.last() - expected).abs() < 1e-15);
    }

    #[test]
    fn bv_cross_brownian_bound() {
        let g = grid(256);
        let w = gen_brownian(g, 4, 1).unwrap().paths()[0].clone();
        let v = SamplePath::from_fn(g, |t| (3.0 * t).sin()).unwrap();
        let c = covariation(&w, &v, RegParams::default()).unwrap();
        assert!(c.sup_norm() <= v.total_variation() * w.max_abs_increment());
    }

    #[test]
    fn empty_lists_rejected() {
        let r = convergence_study(
            |g| gen_brownian(g, 1, 2),
            quadratic_variation,
            |_| 1.0,
            &[],
            &[16],
        );
        assert!(r.is_err());
    }
}
