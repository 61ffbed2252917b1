use rayon::prelude::*;
use serde::Serialize;

use super::european::{check_terminal, check_volatility, diffusion, log_grid};
use super::pde::{solve_backward, PdeSolution, SolutionMeta};
use super::{Claim, PdeParams};
use crate::error::{Error, Result};

/// Largest number of observation dates handled.
pub const MAX_DATES: usize = 3;

/// Solutions on `[t_start, t_end]`, one per node of the tensor grid over the prices
/// already observed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub t_start: f64,
    pub t_end: f64,
    /// Frozen price nodes, one list per earlier date.
    pub frozen: Vec<Vec<f64>>,
    /// Row-major over `frozen` (last coordinate fastest).
    pub solutions: Vec<PdeSolution>,
}

/// Bracketing cell and (unclamped) linear weight of `y` among increasing `nodes`.
fn bracket(nodes: &[f64], y: f64) -> (usize, f64) {
    let k = nodes.partition_point(|&n| n <= y).clamp(1, nodes.len() - 1) - 1;
    (k, (y - nodes[k]) / (nodes[k + 1] - nodes[k]))
}

impl Stage {
    /// Multilinear combination, in the frozen prices, of `f` applied to the node
    /// solutions. Extrapolates linearly outside the frozen grids.
    fn combine(&self, frozen: &[f64], f: impl Fn(&PdeSolution) -> f64) -> f64 {
        let d = self.frozen.len();
        if d == 0 {
            return f(&self.solutions[0]);
        }
        let cells: Vec<(usize, f64)> = self
            .frozen
            .iter()
            .zip(frozen)
            .map(|(nodes, &y)| bracket(nodes, y))
            .collect();
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut idx = 0;
            let mut w = 1.0;
            for (dim, &(k, wk)) in cells.iter().enumerate() {
                let upper = (corner >> (d - 1 - dim)) & 1 == 1;
                idx = idx * self.frozen[dim].len() + k + usize::from(upper);
                w *= if upper { wk } else { 1.0 - wk };
            }
            total += w * f(&self.solutions[idx]);
        }
        total
    }

    pub fn value_at(&self, t: f64, y: f64, frozen: &[f64]) -> f64 {
        self.combine(frozen, |s| s.value_at(t, y))
    }

    pub fn delta_at(&self, t: f64, y: f64, frozen: &[f64]) -> f64 {
        self.combine(frozen, |s| s.delta_at(t, y))
    }
}

/// Backward recursion over the observation dates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiDateSolution {
    dates: Vec<f64>,
    spot: f64,
    stages: Vec<Stage>,
    notes: Vec<String>,
}

impl MultiDateSolution {
    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    /// Stage `i` covers `(t_{i-1}, t_i]` with `t_0 = 0`.
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Index of the stage in force at `t`; `t = t_i` belongs to stage `i + 1`.
    pub fn stage_index(&self, t: f64) -> usize {
        self.dates
            .iter()
            .position(|&d| t < d)
            .unwrap_or(self.dates.len() - 1)
    }

    pub fn x0(&self) -> f64 {
        self.stages[0].value_at(0.0, self.spot, &[])
    }

    /// Holding at time `t` with price `y` and the prices observed on earlier dates.
    pub fn delta_at(&self, t: f64, y: f64, observed: &[f64]) -> f64 {
        let i = self.stage_index(t);
        self.stages[i].delta_at(t, y, &observed[..i])
    }

    pub fn contains(&self, y: f64) -> bool {
        self.stages[0].solutions[0].contains(y)
    }
}

fn frozen_grid(params: &PdeParams, date: f64) -> Vec<f64> {
    let half = params.frozen_width * params.volatility.upper() * date.sqrt();
    let n = params.frozen_nodes;
    (0..n)
        .map(|k| params.spot * (-half + 2.0 * half * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// All points of the tensor grid, row-major.
fn tensor_points(grids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for g in grids {
        out = out
            .into_iter()
            .flat_map(|p| {
                g.iter().map(move |&y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

/// Solves the multi-date hedging problem by backward recursion with
/// `v^i(t_i, y_1..y_{i-1}, y) = v^{i+1}(t_i, y_1..y_{i-1}, y, y)`.
///
/// Each stage is a family of one-dimensional PDEs indexed by a tensor grid over
/// the frozen earlier prices; the diagonal is read off by linear interpolation in
/// the last frozen price. Requires `r = 0`.
pub fn solve_multidate(claim: &Claim, params: &PdeParams) -> Result<MultiDateSolution> {
    let Claim::MultiDate { psi, dates, label } = claim else {
        return Err(Error::InvalidParameter(format!(
            "expected a multi-date claim, got {}",
            claim.label()
        )));
    };
    claim.validate()?;
    params.validate()?;
    if params.rate != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "multi-date hedging is solved for r = 0, got {}",
            params.rate
        )));
    }
    let grid = log_grid(params, 1.0);
    params.check_steps(&grid)?;
    let nodes = &grid.nodes;
    check_volatility(params, nodes, 0.0, 1.0, params.time_steps)?;
    let coeff = diffusion(&params.volatility, 0.0, nodes);
    let n = dates.len();
    let frozen_all: Vec<Vec<f64>> = dates[..n - 1]
        .iter()
        .map(|&d| frozen_grid(params, d))
        .collect();
    let meta = |stage: usize| SolutionMeta {
        claim: format!("{label} stage {stage}"),
        params: params.describe(),
        rate: 0.0,
        spot: params.spot,
        notes: Vec::new(),
    };

    let mut stages: Vec<Stage> = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let t_start = if i == 0 { 0.0 } else { dates[i - 1] };
        let t_end = dates[i];
        let steps = ((params.time_steps as f64 * (t_end - t_start)).ceil() as usize).max(2);
        let frozen = frozen_all[..i].to_vec();
        let points = tensor_points(&frozen);
        let next = stages.last();
        let solutions = points
            .par_iter()
            .enumerate()
            .map(|(p_idx, point)| {
                let terminal: Vec<f64> = match next {
                    None => nodes
                        .iter()
                        .map(|&y| {
                            let mut args = point.clone();
                            args.push(y);
                            psi(&args)
                        })
                        .collect(),
                    Some(next) => {
                        let last = &next.frozen[i];
                        let m = last.len();
                        (0..nodes.len())
                            .map(|j| {
                                let (k, w) = bracket(last, nodes[j]);
                                let at = |kk: usize| next.solutions[p_idx * m + kk].values(0)[j];
                                (1.0 - w) * at(k) + w * at(k + 1)
                            })
                            .collect()
                    }
                };
                check_terminal(&terminal, nodes)?;
                let levels = solve_backward(
                    nodes,
                    t_start,
                    t_end,
                    steps,
                    params.rannacher,
                    terminal,
                    &coeff,
                );
                Ok(PdeSolution::new(
                    grid.clone(),
                    t_start,
                    t_end,
                    levels,
                    meta(i + 1),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        stages.push(Stage {
            t_start,
            t_end,
            frozen,
            solutions,
        });
    }
    stages.reverse();
    Ok(MultiDateSolution {
        dates: dates.clone(),
        spot: params.spot,
        stages,
        notes: vec![format!(
            "{} frozen nodes per earlier date, linear in price, extrapolated linearly outside +-{} sigma sqrt(t_i)",
            params.frozen_nodes, params.frozen_width
        )],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedging::{forward_start_call, Volatility};

    fn params() -> PdeParams {
        let mut p = PdeParams::new(Volatility::Constant(0.2), 1.0).with_nodes(301, 300);
        p.frozen_nodes = 16;
        p
    }

    #[test]
    fn bracket_extrapolates() {
        let nodes = [1.0, 2.0, 4.0];
        assert_eq!(bracket(&nodes, 3.0), (1, 0.5));
        assert_eq!(bracket(&nodes, 0.0), (0, -1.0));
        assert_eq!(bracket(&nodes, 6.0), (1, 2.0));
        assert_eq!(bracket(&nodes, 4.0), (1, 1.0));
    }

    #[test]
    fn linear_claims_are_exact() {
        let p = params();
        let first = solve_multidate(&Claim::multidate("y1", vec![0.5, 1.0], |y| y[0]), &p).unwrap();
        assert!((first.x0() - 1.0).abs() < 1e-12);
        assert!((first.delta_at(0.2, 1.1, &[]) - 1.0).abs() < 1e-9);
        assert!(first.delta_at(0.7, 1.1, &[0.9]).abs() < 1e-9);
        let last = solve_multidate(&Claim::multidate("y2", vec![0.5, 1.0], |y| y[1]), &p).unwrap();
        assert!((last.x0() - 1.0).abs() < 1e-12);
        assert!((last.delta_at(0.7, 1.1, &[0.9]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn three_dates_linear_claim() {
        let mut p = params().with_nodes(101, 100);
        p.frozen_nodes = 6;
        let c = Claim::multidate("y2", vec![0.25, 0.5, 1.0], |y| y[1]);
        let s = solve_multidate(&c, &p).unwrap();
        assert_eq!(s.stages()[2].solutions.len(), 36);
        assert!((s.x0() - 1.0).abs() < 1e-12);
        assert!(s.delta_at(0.75, 1.0, &[1.0, 1.2]).abs() < 1e-9);
        assert!((s.delta_at(0.3, 1.0, &[1.0]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_start_call_close_to_closed_form() {
        let mut p = params().with_nodes(401, 400);
        p.frozen_nodes = 64;
        let s = solve_multidate(&Claim::forward_start_call(0.5), &p).unwrap();
        let exact = forward_start_call(0.2, 1.0, 0.5);
        assert!((s.x0() / exact - 1.0).abs() < 5e-3, "{} vs {exact}", s.x0());
    }

    #[test]
    fn rejects_rate_and_too_many_dates() {
        let p = params().with_rate(0.01);
        assert!(solve_multidate(&Claim::forward_start_call(0.5), &p).is_err());
        let c = Claim::multidate("4", vec![0.2, 0.4, 0.6, 1.0], |y| y[3]);
        assert!(matches!(
            solve_multidate(&c, &params()),
            Err(Error::Capacity(_))
        ));
    }
}
