//! Backward theta-scheme for `v_t + a(t, y) v_yy + b(t, y) v_y = 0` on a
//! nonuniform set of price nodes.
//!
//! Second derivatives use the three-point nonuniform stencil, which is exact for
//! affine functions, so linear payoffs are carried without discretization error.
//! At both ends `v_yy = 0` and `v_y` is taken one-sided into the domain.

use serde::{Deserialize, Serialize};

use super::tridiag::solve_in_place;

/// Spatial variable in which the nodes are uniformly spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    /// Nodes uniform in `log y`.
    LogPrice,
    /// Nodes uniform in `y`.
    Raw,
    /// Nodes uniform in `asinh(y / scale)`: raw values, clustered around 0.
    Sinh { scale: f64 },
}

impl Coordinate {
    fn forward(self, y: f64) -> f64 {
        match self {
            Coordinate::LogPrice => y.ln(),
            Coordinate::Raw => y,
            Coordinate::Sinh { scale } => (y / scale).asinh(),
        }
    }

    fn inverse(self, z: f64) -> f64 {
        match self {
            Coordinate::LogPrice => z.exp(),
            Coordinate::Raw => z,
            Coordinate::Sinh { scale } => scale * z.sinh(),
        }
    }

    /// Grid coordinate of the price `y`.
    pub fn to_grid(self, y: f64) -> f64 {
        self.forward(y)
    }
}

/// Node layout: `J` points uniform in `coordinate` over `[z_min, z_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceGrid {
    pub coordinate: Coordinate,
    pub z_min: f64,
    pub dz: f64,
    pub nodes: Vec<f64>,
}

impl SpaceGrid {
    /// `count` nodes uniform in the grid coordinate between `z_min` and `z_max`.
    pub fn new(coordinate: Coordinate, z_min: f64, z_max: f64, count: usize) -> Self {
        let dz = (z_max - z_min) / (count - 1) as f64;
        let nodes = (0..count)
            .map(|j| {
                let z = if j == count - 1 {
                    z_max
                } else {
                    z_min + j as f64 * dz
                };
                coordinate.inverse(z)
            })
            .collect();
        Self {
            coordinate,
            z_min,
            dz,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.nodes[0]
    }

    pub fn upper(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lower() && y <= self.upper()
    }

    /// Cell index and weight of the right node for `y`, clamped to the grid.
    /// The weight is linear in `y`, so affine functions interpolate exactly.
    fn locate(&self, y: f64) -> (usize, f64) {
        let n = self.nodes.len();
        let z = self.coordinate.forward(y);
        let pos = ((z - self.z_min) / self.dz).clamp(0.0, (n - 1) as f64);
        let mut k = (pos.floor() as usize).min(n - 2);
        // Rounding in the coordinate map can land one cell off.
        if y < self.nodes[k] && k > 0 {
            k -= 1;
        } else if y > self.nodes[k + 1] && k + 2 < n {
            k += 1;
        }
        let w = (y - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        (k, w.clamp(0.0, 1.0))
    }
}

/// First derivative on nonuniform nodes: three-point central in the interior,
/// one-sided at the ends.
pub(crate) fn derivative(nodes: &[f64], v: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n];
    out[0] = (v[1] - v[0]) / (nodes[1] - nodes[0]);
    out[n - 1] = (v[n - 1] - v[n - 2]) / (nodes[n - 1] - nodes[n - 2]);
    for j in 1..n - 1 {
        let hm = nodes[j] - nodes[j - 1];
        let hp = nodes[j + 1] - nodes[j];
        out[j] = -hp / (hm * (hm + hp)) * v[j - 1]
            + (hp - hm) / (hm * hp) * v[j]
            + hm / (hp * (hm + hp)) * v[j + 1];
    }
    out
}

/// Tridiagonal operator `(L v)_j = lo_j v_{j-1} + mid_j v_j + hi_j v_{j+1}`.
struct Operator {
    lo: Vec<f64>,
    mid: Vec<f64>,
    hi: Vec<f64>,
}

impl Operator {
    fn new(n: usize) -> Self {
        Self {
            lo: vec![0.0; n],
            mid: vec![0.0; n],
            hi: vec![0.0; n],
        }
    }

    fn assemble(&mut self, nodes: &[f64], t: f64, coeff: &impl Fn(f64, usize) -> (f64, f64)) {
        let n = nodes.len();
        for j in 1..n - 1 {
            let (a, b) = coeff(t, j);
            let hm = nodes[j] - nodes[j - 1];
            let hp = nodes[j + 1] - nodes[j];
            let mut lo = 2.0 * a / (hm * (hm + hp));
            let mut hi = 2.0 * a / (hp * (hm + hp));
            let mut mid = -2.0 * a / (hm * hp);
            if b != 0.0 {
                if a >= 0.5 * b.abs() * hm.max(hp) {
                    lo -= b * hp / (hm * (hm + hp));
                    mid += b * (hp - hm) / (hm * hp);
                    hi += b * hm / (hp * (hm + hp));
                } else if b > 0.0 {
                    mid -= b / hp;
                    hi += b / hp;
                } else {
                    lo -= b / hm;
                    mid += b / hm;
                }
            }
            self.lo[j] = lo;
            self.mid[j] = mid;
            self.hi[j] = hi;
        }
        let (_, b0) = coeff(t, 0);
        let h0 = nodes[1] - nodes[0];
        self.lo[0] = 0.0;
        self.mid[0] = -b0 / h0;
        self.hi[0] = b0 / h0;
        let (_, bn) = coeff(t, n - 1);
        let hn = nodes[n - 1] - nodes[n - 2];
        self.lo[n - 1] = -bn / hn;
        self.mid[n - 1] = bn / hn;
        self.hi[n - 1] = 0.0;
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for j in 0..n {
            let mut s = self.mid[j] * v[j];
            if j > 0 {
                s += self.lo[j] * v[j - 1];
            }
            if j + 1 < n {
                s += self.hi[j] * v[j + 1];
            }
            out[j] = s;
        }
    }
}

/// Backward sweep from `terminal` at `t_end` to `t_start` in `steps` uniform steps.
///
/// Returns one value vector per time level, ascending in time; the last level is
/// `terminal` itself. Crank-Nicolson throughout, except that with `rannacher` the
/// first step is replaced by two implicit Euler half steps.
pub(crate) fn solve_backward(
    nodes: &[f64],
    t_start: f64,
    t_end: f64,
    steps: usize,
    rannacher: bool,
    terminal: Vec<f64>,
    coeff: impl Fn(f64, usize) -> (f64, f64),
) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let dt = (t_end - t_start) / steps as f64;
    let time = |k: usize| {
        if k == steps {
            t_end
        } else {
            t_start + k as f64 * dt
        }
    };
    let mut levels = vec![Vec::new(); steps + 1];
    let mut op_hi = Operator::new(n);
    let mut op_lo = Operator::new(n);
    let mut rhs = vec![0.0; n];
    let mut lv = vec![0.0; n];
    let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut scratch = Vec::with_capacity(n);
    let mut v = terminal;

    let mut theta_step = |v: &mut Vec<f64>, t_hi: f64, t_lo: f64, theta: f64| {
        let h = t_hi - t_lo;
        rhs.copy_from_slice(v);
        if theta < 1.0 {
            op_hi.assemble(nodes, t_hi, &coeff);
            op_hi.apply(v, &mut lv);
            for j in 0..n {
                rhs[j] += (1.0 - theta) * h * lv[j];
            }
        }
        op_lo.assemble(nodes, t_lo, &coeff);
        for j in 0..n {
            sub[j] = -theta * h * op_lo.lo[j];
            diag[j] = 1.0 - theta * h * op_lo.mid[j];
            sup[j] = -theta * h * op_lo.hi[j];
        }
        solve_in_place(&sub, &diag, &sup, &mut rhs, &mut scratch);
        v.copy_from_slice(&rhs);
    };

    for k in (0..steps).rev() {
        let (t_hi, t_lo) = (time(k + 1), time(k));
        levels[k + 1] = v.clone();
        if rannacher && k + 1 == steps {
            let t_mid = 0.5 * (t_hi + t_lo);
            theta_step(&mut v, t_hi, t_mid, 1.0);
            theta_step(&mut v, t_mid, t_lo, 1.0);
        } else {
            theta_step(&mut v, t_hi, t_lo, 0.5);
        }
    }
    levels[0] = v;
    levels
}

/// Metadata attached to a solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionMeta {
    pub claim: String,
    pub params: String,
    pub rate: f64,
    pub spot: f64,
    pub notes: Vec<String>,
}

/// Value and delta surfaces on a uniform time grid times a [`SpaceGrid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSolution {
    space: SpaceGrid,
    t_start: f64,
    t_end: f64,
    values: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    pub meta: SolutionMeta,
}

impl PdeSolution {
    pub(crate) fn new(
        space: SpaceGrid,
        t_start: f64,
        t_end: f64,
        values: Vec<Vec<f64>>,
        meta: SolutionMeta,
    ) -> Self {
        let deltas = values.iter().map(|v| derivative(&space.nodes, v)).collect();
        Self {
            space,
            t_start,
            t_end,
            values,
            deltas,
            meta,
        }
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn nodes(&self) -> &[f64] {
        &self.space.nodes
    }

    pub fn n_levels(&self) -> usize {
        self.values.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        let steps = self.values.len() - 1;
        if k == steps {
            self.t_end
        } else {
            self.t_start + k as f64 * (self.t_end - self.t_start) / steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.time(k)).collect()
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Values at time level `k`.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// Deltas `d_y v` at time level `k`.
    pub fn deltas(&self, k: usize) -> &[f64] {
        &self.deltas[k]
    }

    pub fn contains(&self, y: f64) -> bool {
        self.space.contains(y)
    }

    fn interpolate(&self, surface: &[Vec<f64>], t: f64, y: f64) -> f64 {
        let steps = surface.len() - 1;
        let dt = (self.t_end - self.t_start) / steps as f64;
        let pos = ((t - self.t_start) / dt).clamp(0.0, steps as f64);
        let k = (pos.floor() as usize).min(steps - 1);
        let wt = pos - k as f64;
        let (j, wy) = self.space.locate(y);
        let at = |row: &[f64]| row[j] + wy * (row[j + 1] - row[j]);
        let lo = at(&surface[k]);
        if wt == 0.0 {
            lo
        } else {
            lo + wt * (at(&surface[k + 1]) - lo)
        }
    }

    /// `v(t, y)`, linear in time and in the grid coordinate; clamped outside the domain.
    pub fn value_at(&self, t: f64, y: f64) -> f64 {
        self.interpolate(&self.values, t, y)
    }

    /// `d_y v(t, y)`, interpolated like [`Self::value_at`].
    pub fn delta_at(&self, t: f64, y: f64) -> f64 {
        self.interpolate(&self.deltas, t, y)
    }

    /// Surface dump with columns `t,y,v,delta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,y,v,delta\n");
        for k in 0..self.values.len() {
            let t = self.time(k);
            for (j, y) in self.space.nodes.iter().enumerate() {
                out.push_str(&format!(
                    "{t},{y:e},{:e},{:e}\n",
                    self.values[k][j], self.deltas[k][j]
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_exact_for_quadratics() {
        let g = SpaceGrid::new(Coordinate::LogPrice, -1.0, 1.0, 21);
        let v: Vec<f64> = g.nodes.iter().map(|y| 3.0 * y * y - y + 2.0).collect();
        let d = derivative(&g.nodes, &v);
        for (y, dj) in g.nodes.iter().zip(&d).take(20).skip(1) {
            assert!((dj - (6.0 * y - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn affine_terminal_is_preserved() {
        let g = SpaceGrid::new(Coordinate::LogPrice, -1.0, 1.0, 41);
        let terminal: Vec<f64> = g.nodes.iter().map(|y| 2.0 * y - 0.5).collect();
        let levels = solve_backward(&g.nodes, 0.0, 1.0, 50, true, terminal.clone(), |_, j| {
            (0.02 * g.nodes[j] * g.nodes[j], 0.0)
        });
        for lv in &levels {
            for (a, b) in lv.iter().zip(&terminal) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn advection_shifts_linear_function() {
        // v_t + v_y = 0, v(1, y) = y  =>  v(t, y) = y + 1 - t.
        let g = SpaceGrid::new(Coordinate::Raw, -2.0, 2.0, 81);
        let terminal = g.nodes.clone();
        let levels = solve_backward(&g.nodes, 0.0, 1.0, 40, true, terminal, |_, j| {
            (0.02 * g.nodes[j] * g.nodes[j], 1.0)
        });
        for (j, y) in g.nodes.iter().enumerate() {
            assert!((levels[0][j] - (y + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_clamps() {
        let g = SpaceGrid::new(Coordinate::Raw, 0.0, 1.0, 11);
        assert_eq!(g.locate(-5.0), (0, 0.0));
        assert_eq!(g.locate(5.0), (9, 1.0));
        let (k, w) = g.locate(0.25);
        assert_eq!(k, 2);
        assert!((w - 0.5).abs() < 1e-12);
    }
}
