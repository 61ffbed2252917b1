use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_i = i * step` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeGrid {
    n_steps: usize,
}

impl TimeGrid {
    pub const HORIZON: f64 = 1.0;

    pub fn new(n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::InvalidGrid(format!(
                "n_steps must be >= 2, got {n_steps}"
            )));
        }
        Ok(Self { n_steps })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        Self::HORIZON
    }

    pub fn step(&self) -> f64 {
        Self::HORIZON / self.n_steps as f64
    }

    /// Time of node `i`. The last node is exactly the horizon.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            Self::HORIZON
        } else {
            i as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Index of the node at time `t`, after clamping `t` to `[0, 1]`.
    ///
    /// Times that do not fall on a node (up to `1e-9` of a step) are rejected.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        if !t.is_finite() {
            return Err(Error::OffGrid(t));
        }
        let clamped = t.clamp(0.0, Self::HORIZON);
        let pos = clamped / self.step();
        let idx = pos.round();
        if (pos - idx).abs() > 1e-9 {
            return Err(Error::OffGrid(t));
        }
        Ok(idx as usize)
    }

    /// Whether `t` is a node of this grid.
    pub fn contains(&self, t: f64) -> bool {
        (0.0..=Self::HORIZON).contains(&t) && self.index_of(t).is_ok()
    }
}

/// Values of a process on every node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at node {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Path `t_i -> f(t_i)`.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.times().into_iter().map(f).collect())
    }

    pub fn constant(grid: TimeGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub(crate) fn from_raw(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Value at time `t` (clamped to `[0, 1]`); `t` must be a grid node.
    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.index_of(t)?])
    }

    /// Value at node `i + shift`, clamped at the right endpoint.
    pub(crate) fn shifted(&self, i: usize, shift: usize) -> f64 {
        self.values[(i + shift).min(self.grid.n_steps)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `f(t_i, x_i)`.
    pub fn map_with_time(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.time(i), v))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn ensure_same_grid(&self, other: &SamplePath) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{} steps vs {} steps",
                self.grid.n_steps(),
                other.grid.n_steps()
            )));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Total variation `sum |x_{i+1} - x_i|`.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn max_abs_increment(&self) -> f64 {
        self.values
            .windows(2)
            .fold(0.0_f64, |m, w| m.max((w[1] - w[0]).abs()))
    }

    /// CSV with header `t,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.grid.time(i), v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_short() {
        assert!(TimeGrid::new(1).is_err());
        assert!(TimeGrid::new(0).is_err());
        assert!(TimeGrid::new(2).is_ok());
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = TimeGrid::new(7).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(7), 1.0);
        for i in 0..7 {
            assert!((g.time(i + 1) - g.time(i) - g.step()).abs() < 1e-15);
        }
    }

    #[test]
    fn clamped_lookup_and_off_grid() {
        let g = TimeGrid::new(4).unwrap();
        let p = SamplePath::from_fn(g, |t| 10.0 * t).unwrap();
        assert_eq!(p.at(0.5).unwrap(), 5.0);
        assert_eq!(p.at(-3.0).unwrap(), 0.0);
        assert_eq!(p.at(2.0).unwrap(), 10.0);
        assert_eq!(p.at(0.3), Err(Error::OffGrid(0.3)));
    }

    #[test]
    fn non_finite_rejected() {
        let g = TimeGrid::new(2).unwrap();
        assert!(SamplePath::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(SamplePath::new(g, vec![0.0, 1.0]).is_err());
    }
}
