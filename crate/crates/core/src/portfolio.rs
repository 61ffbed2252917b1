//! Self-financing wealth, the log-price transform and log-utility scans over
//! constant proportions.

use rayon::prelude::*;
use serde::Serialize;

use crate::amartingale::{test_amartingale, MartingaleTestResult, StrategyFamily};
use crate::error::{Error, Result};
use crate::paths::{gen_price, PathEnsemble, PriceModel, SamplePath, TimeGrid};
use crate::regularize::{forward_integral, quadratic_variation, stieltjes, RegParams};
use crate::stats;

/// `X = x0 + int h d^- S`.
pub fn wealth_from_shares(
    x0: f64,
    h: &SamplePath,
    s: &SamplePath,
    params: RegParams,
) -> Result<SamplePath> {
    h.ensure_same_grid(s)?;
    forward_integral(h, s, params)?.map(|v| x0 + v)
}

fn check_positive(s: &SamplePath) -> Result<()> {
    if let Some(v) = s.values().iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "prices must be strictly positive, found {v}"
        )));
    }
    Ok(())
}

/// `A = log S - log S_0 + 1/2 int S^{-2} d[S]`.
pub fn log_price_transform(s: &SamplePath, params: RegParams) -> Result<SamplePath> {
    check_positive(s)?;
    let qv = quadratic_variation(s, params)?;
    let weight = s.map(|v| 0.5 / (v * v))?;
    let correction = stieltjes(&weight, &qv)?;
    let log0 = s.first().ln();
    let values = s
        .values()
        .iter()
        .zip(correction.values())
        .map(|(v, c)| v.ln() - log0 + c)
        .collect();
    SamplePath::new(s.grid(), values)
}

/// Proportion of wealth held in the risky asset.
#[derive(Debug, Clone, PartialEq)]
pub enum ProportionProcess {
    Constant(f64),
    /// One path per ensemble member.
    Tabulated(Vec<SamplePath>),
}

impl ProportionProcess {
    /// The proportion path used for ensemble member `index`.
    pub fn path(&self, index: usize, grid: TimeGrid) -> Result<SamplePath> {
        match self {
            ProportionProcess::Constant(theta) => SamplePath::constant(grid, *theta),
            ProportionProcess::Tabulated(paths) => {
                let p = paths.get(index).ok_or_else(|| {
                    Error::InvalidParameter(format!("no proportion path for member {index}"))
                })?;
                if p.grid() != grid {
                    return Err(Error::GridMismatch(format!(
                        "proportion path has {} steps, expected {}",
                        p.grid().n_steps(),
                        grid.n_steps()
                    )));
                }
                Ok(p.clone())
            }
        }
    }
}

/// `X = x0 exp(int theta d^- A + int (1 - theta) dV - 1/2 int theta^2 d[A])`.
pub fn wealth_from_proportions(
    x0: f64,
    theta: &SamplePath,
    a: &SamplePath,
    v: &SamplePath,
    params: RegParams,
) -> Result<SamplePath> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "x0 must be positive, got {x0}"
        )));
    }
    theta.ensure_same_grid(a)?;
    theta.ensure_same_grid(v)?;
    let risky = forward_integral(theta, a, params)?;
    let riskless = stieltjes(&theta.map(|t| 1.0 - t)?, v)?;
    let qv = quadratic_variation(a, params)?;
    let penalty = stieltjes(&theta.map(|t| 0.5 * t * t)?, &qv)?;
    let values = (0..theta.grid().len())
        .map(|i| x0 * (risky.value(i) + riskless.value(i) - penalty.value(i)).exp())
        .collect();
    SamplePath::new(theta.grid(), values)
}

/// Model and sampling for the utility experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSetup {
    pub model: PriceModel,
    pub rate: f64,
    pub grid: TimeGrid,
    pub seed: u64,
    pub n_paths: usize,
}

impl ScanSetup {
    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !self.rate.is_finite() {
            return Err(Error::InvalidParameter("rate must be finite".into()));
        }
        if self.n_paths < 2 {
            return Err(Error::InvalidParameter("need at least two paths".into()));
        }
        Ok(())
    }

    fn log_prices(&self, params: RegParams) -> Result<(PathEnsemble, SamplePath)> {
        let prices = gen_price(self.model, self.grid, self.seed, self.n_paths)?;
        let a = prices.try_map(format!("log_price({})", prices.generator_id()), |s| {
            log_price_transform(s, params)
        })?;
        let r = self.rate;
        let v = SamplePath::from_fn(self.grid, |t| r * t)?;
        Ok((a, v))
    }
}

/// Maximizer of `E[A_1 - V_1] theta - E[[A]_1] theta^2 / 2`, the expected log wealth
/// for constant `theta`.
pub fn analytic_log_optimal(model: &PriceModel, rate: f64) -> f64 {
    let sigma = model.sigma();
    let mu = model.mu();
    let qv = model.log_qv_at_one();
    // E[A_1] = mu + ([log S]_1 - sigma^2) / 2 because A adds back half of [log S].
    let mean_a = mu + 0.5 * (qv - sigma * sigma);
    (mean_a - rate) / qv
}

/// Estimates of `E[log X_1^theta]` over a grid of constant proportions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityScanResult {
    pub model: String,
    pub rate: f64,
    pub n_paths: usize,
    pub thetas: Vec<f64>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub argmax: usize,
    pub argmax_theta: f64,
    /// Argmax on the first or last grid point.
    pub inconclusive: bool,
    pub analytic: f64,
    pub notes: Vec<String>,
}

impl UtilityScanResult {
    pub fn gap(&self) -> f64 {
        self.argmax_theta - self.analytic
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,estimate,stderr\n");
        for i in 0..self.thetas.len() {
            out.push_str(&format!(
                "{},{:e},{:e}\n",
                self.thetas[i], self.estimates[i], self.std_errors[i]
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "rate": self.rate,
            "n_paths": self.n_paths,
            "argmax": self.argmax,
            "argmax_theta": self.argmax_theta,
            "inconclusive": self.inconclusive,
            "analytic": self.analytic,
            "gap": self.gap(),
            "notes": self.notes,
        })
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Scans constant proportions on one common ensemble.
pub fn log_utility_scan(
    setup: &ScanSetup,
    theta_grid: &[f64],
    params: RegParams,
) -> Result<UtilityScanResult> {
    setup.validate()?;
    if theta_grid.is_empty() {
        return Err(Error::InvalidParameter("empty theta grid".into()));
    }
    if theta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "theta grid must be strictly increasing".into(),
        ));
    }
    let (a, v) = setup.log_prices(params)?;
    let rows = theta_grid
        .par_iter()
        .map(|&theta| {
            let th = SamplePath::constant(setup.grid, theta)?;
            let logs = a
                .paths()
                .iter()
                .map(|ap| {
                    Ok(wealth_from_proportions(1.0, &th, ap, &v, params)?
                        .last()
                        .ln())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((stats::mean(&logs), stats::std_err(&logs)))
        })
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<f64> = rows.iter().map(|r| r.0).collect();
    if let Some(e) = estimates.iter().find(|e| !e.is_finite()) {
        return Err(Error::Degenerate(format!(
            "non-finite utility estimate {e}"
        )));
    }
    let best = argmax(&estimates).expect("non-empty grid");
    let inconclusive = theta_grid.len() < 3 || best == 0 || best == theta_grid.len() - 1;
    let mut notes = vec![
        "utility is log x; other utilities and the associated measure change are not covered"
            .to_string(),
    ];
    if inconclusive {
        notes.push("argmax on the boundary of the theta grid; widen the grid".into());
    }
    Ok(UtilityScanResult {
        model: setup.model.id(),
        rate: setup.rate,
        n_paths: setup.n_paths,
        thetas: theta_grid.to_vec(),
        std_errors: rows.iter().map(|r| r.1).collect(),
        estimates,
        argmax: best,
        argmax_theta: theta_grid[best],
        inconclusive,
        analytic: analytic_log_optimal(&setup.model, setup.rate),
        notes,
    })
}

/// Tests whether `M = A - V - pi [A]` is an A-martingale for `family`.
pub fn verify_optimality_amartingale(
    setup: &ScanSetup,
    pi: f64,
    family: &StrategyFamily,
    checkpoints: &[f64],
    params: RegParams,
    z_crit: f64,
) -> Result<MartingaleTestResult> {
    setup.validate()?;
    if setup.model.sigma() <= 0.0 {
        return Err(Error::InvalidParameter(
            "optimality test needs sigma > 0".into(),
        ));
    }
    let (a, v) = setup.log_prices(params)?;
    let m = a.try_map(format!("A - V - {pi}[A]"), |ap| {
        let qv = quadratic_variation(ap, params)?;
        let values = (0..ap.grid().len())
            .map(|i| ap.value(i) - v.value(i) - pi * qv.value(i))
            .collect();
        SamplePath::new(ap.grid(), values)
    })?;
    test_amartingale(&m, family, checkpoints, params, z_crit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::gen_brownian;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n).unwrap()
    }

    fn gbm_path(n: usize, seed: u64) -> SamplePath {
        let m = PriceModel::Gbm {
            sigma: 0.2,
            mu: 0.1,
            s0: 1.0,
        };
        gen_price(m, grid(n), seed, 1).unwrap().paths()[0].clone()
    }

    #[test]
    fn buy_and_hold_and_interval_holding() {
        let s = gbm_path(64, 1);
        let g = s.grid();
        let one = SamplePath::constant(g, 1.0).unwrap();
        let x = wealth_from_shares(2.0, &one, &s, RegParams::default()).unwrap();
        assert!((x.last() - (2.0 + s.last() - s.first())).abs() < 1e-14);
        let zero = SamplePath::constant(g, 0.0).unwrap();
        let x = wealth_from_shares(2.0, &zero, &s, RegParams::default()).unwrap();
        assert!(x.values().iter().all(|&v| v == 2.0));
        // eta on (t0, t1] = (1/4, 1/2].
        let h =
            SamplePath::from_fn(g, |t| if (0.25..0.5).contains(&t) { 3.0 } else { 0.0 }).unwrap();
        let x = wealth_from_shares(1.0, &h, &s, RegParams::default()).unwrap();
        let expected = 1.0 + 3.0 * (s.value(32) - s.value(16));
        assert!((x.value(32) - expected).abs() < 1e-14);
    }

    #[test]
    fn log_price_of_constant_is_zero() {
        let s = SamplePath::constant(grid(16), 1.3).unwrap();
        let a = log_price_transform(&s, RegParams::default()).unwrap();
        assert!(a.values().iter().all(|&v| v == 0.0));
        let bad = SamplePath::new(grid(2), vec![1.0, -1.0, 1.0]).unwrap();
        assert!(log_price_transform(&bad, RegParams::default()).is_err());
    }

    #[test]
    fn zero_proportion_grows_at_rate() {
        let g = grid(32);
        let s = gbm_path(32, 2);
        let a = log_price_transform(&s, RegParams::default()).unwrap();
        let v = SamplePath::from_fn(g, |t| 0.03 * t).unwrap();
        let th = SamplePath::constant(g, 0.0).unwrap();
        let x = wealth_from_proportions(1.5, &th, &a, &v, RegParams::default()).unwrap();
        for (i, t) in g.times().iter().enumerate() {
            assert!((x.value(i) - 1.5 * (0.03 * t).exp()).abs() < 1e-14);
        }
        assert!(wealth_from_proportions(0.0, &th, &a, &v, RegParams::default()).is_err());
    }

    #[test]
    fn full_proportion_tracks_price_ratio() {
        let errs: Vec<f64> = [64, 1024, 16384]
            .iter()
            .map(|&n| {
                let s = gbm_path(n, 3);
                let g = s.grid();
                let a = log_price_transform(&s, RegParams::default()).unwrap();
                let v = SamplePath::constant(g, 0.0).unwrap();
                let th = SamplePath::constant(g, 1.0).unwrap();
                let x = wealth_from_proportions(1.0, &th, &a, &v, RegParams::default()).unwrap();
                (0..g.len())
                    .map(|i| (x.value(i) - s.value(i) / s.first()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn argmax_first_wins_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn scan_rejects_bad_grids() {
        let setup = ScanSetup {
            model: PriceModel::Gbm {
                sigma: 0.2,
                mu: 0.1,
                s0: 1.0,
            },
            rate: 0.02,
            grid: grid(16),
            seed: 1,
            n_paths: 10,
        };
        assert!(log_utility_scan(&setup, &[], RegParams::default()).is_err());
        assert!(log_utility_scan(&setup, &[1.0, 0.5], RegParams::default()).is_err());
    }

    #[test]
    fn analytic_reference_values() {
        let gbm = PriceModel::Gbm {
            sigma: 0.2,
            mu: 0.1,
            s0: 1.0,
        };
        assert!((analytic_log_optimal(&gbm, 0.02) - 2.0).abs() < 1e-12);
        let weak = PriceModel::WeakGbm {
            sigma: 0.2,
            s0: 1.0,
            mu: 0.1,
        };
        let sq2 = std::f64::consts::SQRT_2;
        let expected = (0.08 - 0.04 * (sq2 - 1.0) / 2.0) / (0.04 * (2.0 - sq2));
        assert!((analytic_log_optimal(&weak, 0.02) - expected).abs() < 1e-12);
    }

    #[test]
    fn tabulated_proportions_checked() {
        let g = grid(8);
        let w = gen_brownian(g, 1, 2).unwrap();
        let p = ProportionProcess::Tabulated(w.paths().to_vec());
        assert!(p.path(1, g).is_ok());
        assert!(p.path(2, g).is_err());
        assert!(p.path(0, grid(4)).is_err());
        assert_eq!(
            ProportionProcess::Constant(0.5).path(0, g).unwrap().last(),
            0.5
        );
    }
}
