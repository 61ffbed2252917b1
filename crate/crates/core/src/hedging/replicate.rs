use rayon::prelude::*;
use serde::Serialize;

use super::asian::xi_path;
use super::{Claim, HedgeSolution};
use crate::error::{Error, Result};
use crate::paths::{PathEnsemble, SamplePath};
use crate::regularize::{forward_integral, RegParams};
use crate::stats;

/// Largest share of paths allowed to leave the PDE domain.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

/// Statistics of `X_1 - payoff` over the retained paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub mean_signed: f64,
    pub rms: f64,
    pub max_abs: f64,
    /// `rms / |X_0|`.
    pub relative_rms: f64,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64], x0: f64) -> Self {
        let rms = stats::rms(errors);
        Self {
            mean_signed: stats::mean(errors),
            rms,
            max_abs: stats::max_abs(errors),
            relative_rms: rms / x0.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgeReport {
    pub claim: String,
    pub model: String,
    pub seed: u64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub rate: f64,
    /// Replication price.
    pub x0: f64,
    pub terminal_wealth: Vec<f64>,
    pub payoff: Vec<f64>,
    /// Paths that left the PDE domain before `t = 1`; excluded from `stats`.
    pub flagged: Vec<bool>,
    pub excluded: usize,
    pub stats: ErrorStats,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    claim: &'a str,
    model: &'a str,
    seed: u64,
    n_steps: usize,
    n_paths: usize,
    rate: f64,
    x0: f64,
    excluded: usize,
    stats: ErrorStats,
    notes: &'a [String],
}

impl HedgeReport {
    /// `X_1 - payoff` per path, flagged paths included.
    pub fn errors(&self) -> Vec<f64> {
        self.terminal_wealth
            .iter()
            .zip(&self.payoff)
            .map(|(x, p)| x - p)
            .collect()
    }

    /// Errors of the retained paths.
    pub fn retained_errors(&self) -> Vec<f64> {
        self.errors()
            .into_iter()
            .zip(&self.flagged)
            .filter(|(_, f)| !**f)
            .map(|(e, _)| e)
            .collect()
    }

    /// Summary without the per-path columns.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::to_value(Summary {
            claim: &self.claim,
            model: &self.model,
            seed: self.seed,
            n_steps: self.n_steps,
            n_paths: self.n_paths,
            rate: self.rate,
            x0: self.x0,
            excluded: self.excluded,
            stats: self.stats,
            notes: &self.notes,
        })
        .expect("summary serializes")
    }

    /// Per-path columns `path,terminal_wealth,payoff,error,flagged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,terminal_wealth,payoff,error,flagged\n");
        for (i, ((x, p), f)) in self
            .terminal_wealth
            .iter()
            .zip(&self.payoff)
            .zip(&self.flagged)
            .enumerate()
        {
            out.push_str(&format!("{i},{x:e},{p:e},{:e},{f}\n", x - p));
        }
        out
    }
}

struct PathOutcome {
    wealth: f64,
    payoff: f64,
    flagged: bool,
}

fn wealth(
    x0: f64,
    hedge: Vec<f64>,
    discounted: &SamplePath,
    params: RegParams,
    growth: f64,
) -> Result<f64> {
    let h = SamplePath::new(discounted.grid(), hedge)?;
    Ok((x0 + forward_integral(&h, discounted, params)?.last()) * growth)
}

/// Delta-hedges `claim` along every price path and reports `X_1 - payoff`.
///
/// Wealth is accumulated in discounted prices `S~ = S e^{-rt}` with holdings fixed
/// at the left node of each step (no rebalancing at `t = 1`), then re-inflated by
/// `e^r`. Paths whose state leaves the PDE domain are flagged and excluded.
pub fn replicate(
    claim: &Claim,
    solution: &HedgeSolution,
    prices: &PathEnsemble,
    params: RegParams,
) -> Result<HedgeReport> {
    claim.validate()?;
    let grid = prices.grid();
    params.validate(grid)?;
    if prices.is_empty() {
        return Err(Error::InvalidParameter("empty price ensemble".into()));
    }
    if let Some(p) = prices
        .paths()
        .iter()
        .find(|p| p.values().iter().any(|&v| !(v > 0.0)))
    {
        return Err(Error::InvalidParameter(format!(
            "prices must be strictly positive, found {}",
            p.values().iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let n = grid.n_steps();
    let times = grid.times();
    let step = grid.step();
    let x0 = solution.x0();
    let (rate, notes) = match solution {
        HedgeSolution::European(s) => (s.meta.rate, s.meta.notes.clone()),
        HedgeSolution::MultiDate(s) => (0.0, s.notes().to_vec()),
        HedgeSolution::Asian(s) => (s.pde().meta.rate, s.pde().meta.notes.clone()),
    };
    let growth = rate.exp();
    let date_idx: Vec<usize> = match claim {
        Claim::MultiDate { dates, .. } => dates
            .iter()
            .map(|&d| grid.index_of(d))
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };

    let outcome = |path: &SamplePath| -> Result<PathOutcome> {
        let s = path.values();
        let discounted = path.map_with_time(|t, v| v * (-rate * t).exp())?;
        let sd = discounted.values();
        let mut hedge = vec![0.0; n + 1];
        let mut flagged = false;
        let payoff = match (claim, solution) {
            (Claim::European { psi, .. }, HedgeSolution::European(sol)) => {
                for i in 0..n {
                    flagged |= !sol.contains(sd[i]);
                    hedge[i] = sol.delta_at(times[i], sd[i]);
                }
                psi(s[n])
            }
            (Claim::MultiDate { psi, .. }, HedgeSolution::MultiDate(sol)) => {
                let observed: Vec<f64> = date_idx.iter().map(|&k| s[k]).collect();
                let last_stage = observed.len() - 1;
                for i in 0..n {
                    flagged |= !sol.contains(sd[i]);
                    let stage = date_idx.iter().filter(|&&k| k <= i).count().min(last_stage);
                    hedge[i] = sol.stages()[stage].delta_at(times[i], sd[i], &observed[..stage]);
                }
                psi(&observed)
            }
            (Claim::Asian { psi, strike, .. }, HedgeSolution::Asian(sol)) => {
                let xi = xi_path(s, step, *strike);
                for i in 0..n {
                    flagged |= !sol.pde().contains(xi[i]);
                    hedge[i] = sol.hedge(times[i], xi[i]);
                }
                psi(xi[n]) * s[n]
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "solution does not match claim {}",
                    claim.label()
                )))
            }
        };
        hedge[n] = hedge[n - 1];
        Ok(PathOutcome {
            wealth: wealth(x0, hedge, &discounted, params, growth)?,
            payoff,
            flagged,
        })
    };

    let outcomes = prices
        .paths()
        .par_iter()
        .map(outcome)
        .collect::<Result<Vec<_>>>()?;
    let excluded = outcomes.iter().filter(|o| o.flagged).count();
    let n_paths = outcomes.len();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * n_paths as f64 {
        return Err(Error::Domain(format!(
            "{excluded} of {n_paths} paths left the PDE domain"
        )));
    }
    let retained: Vec<f64> = outcomes
        .iter()
        .filter(|o| !o.flagged)
        .map(|o| o.wealth - o.payoff)
        .collect();
    Ok(HedgeReport {
        claim: claim.label().to_string(),
        model: prices.generator_id().to_string(),
        seed: prices.seed(),
        n_steps: n,
        n_paths,
        rate,
        x0,
        stats: ErrorStats::from_errors(&retained, x0),
        terminal_wealth: outcomes.iter().map(|o| o.wealth).collect(),
        payoff: outcomes.iter().map(|o| o.payoff).collect(),
        flagged: outcomes.iter().map(|o| o.flagged).collect(),
        excluded,
        notes,
    })
}
