//! Hedging PDEs and delta-hedge replication along simulated price paths.
//!
//! The European and multi-date hedges depend on the price path only through its
//! quadratic variation `d[S] = sigma^2 S^2 dt`, so the same PDE hedge replicates
//! on semimartingale and non-semimartingale paths alike.

mod asian;
mod closed_form;
mod european;
mod multidate;
mod pde;
mod replicate;
mod tridiag;

use std::fmt;
use std::sync::Arc;

pub use asian::{solve_asian, AsianSolution};
pub use closed_form::{bs_closed_form, forward_start_call, BsQuote};
pub use european::solve_european;
pub use multidate::{solve_multidate, MultiDateSolution, Stage, MAX_DATES};
pub use pde::{Coordinate, PdeSolution, SolutionMeta, SpaceGrid};
pub use replicate::{replicate, ErrorStats, HedgeReport, MAX_EXCLUDED_FRACTION};

use crate::error::{Error, Result};

pub type Payoff = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type MultiPayoff = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A contingent claim paid at `t = 1`.
#[derive(Clone)]
pub enum Claim {
    /// `psi(S_1)`.
    European { label: String, psi: Payoff },
    /// `psi(S_{t_1}, ..., S_{t_n})` with `t_n = 1`.
    MultiDate {
        label: String,
        dates: Vec<f64>,
        psi: MultiPayoff,
    },
    /// `psi(Z_1 / S_1) S_1` with `Z_t = int_0^t S ds - K`.
    Asian {
        label: String,
        psi: Payoff,
        strike: f64,
    },
}

impl fmt::Debug for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::MultiDate { label, dates, .. } => f
                .debug_struct("MultiDate")
                .field("label", label)
                .field("dates", dates)
                .finish(),
            Claim::Asian { label, strike, .. } => f
                .debug_struct("Asian")
                .field("label", label)
                .field("strike", strike)
                .finish(),
            Claim::European { label, .. } => {
                f.debug_struct("European").field("label", label).finish()
            }
        }
    }
}

impl Claim {
    pub fn european(
        label: impl Into<String>,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Claim::European {
            label: label.into(),
            psi: Arc::new(psi),
        }
    }

    pub fn call(strike: f64) -> Self {
        Self::european(format!("call(K={strike})"), move |y| (y - strike).max(0.0))
    }

    pub fn multidate(
        label: impl Into<String>,
        dates: Vec<f64>,
        psi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Claim::MultiDate {
            label: label.into(),
            dates,
            psi: Arc::new(psi),
        }
    }

    /// `(S_1 - S_{t1})_+`.
    pub fn forward_start_call(t1: f64) -> Self {
        Self::multidate(format!("forward_start_call(t1={t1})"), vec![t1, 1.0], |y| {
            (y[1] - y[0]).max(0.0)
        })
    }

    pub fn asian(
        label: impl Into<String>,
        strike: f64,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Claim::Asian {
            label: label.into(),
            psi: Arc::new(psi),
            strike,
        }
    }

    /// `(int_0^1 S dt - K)_+`, i.e. `psi(y) = y_+`.
    pub fn asian_call(strike: f64) -> Self {
        Self::asian(format!("asian_call(K={strike})"), strike, |y| y.max(0.0))
    }

    pub fn label(&self) -> &str {
        match self {
            Claim::European { label, .. }
            | Claim::MultiDate { label, .. }
            | Claim::Asian { label, .. } => label,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Claim::European { .. } => Ok(()),
            Claim::Asian { strike, .. } => {
                if *strike > 0.0 && strike.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "Asian strike must be positive, got {strike}"
                    )))
                }
            }
            Claim::MultiDate { dates, .. } => {
                if dates.is_empty() {
                    return Err(Error::InvalidParameter("no exercise dates".into()));
                }
                if dates.len() > MAX_DATES {
                    return Err(Error::Capacity(format!(
                        "{} dates, at most {MAX_DATES} supported",
                        dates.len()
                    )));
                }
                let mut prev = 0.0;
                for &d in dates {
                    if !(d > prev && d <= 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "dates must increase strictly within (0, 1], got {dates:?}"
                        )));
                    }
                    prev = d;
                }
                if dates[dates.len() - 1] != 1.0 {
                    return Err(Error::InvalidParameter("last date must be 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Empirical growth degree of `psi` along `y = 2^k`, `k = 10..20`
    /// (along the diagonal for multi-date claims). Diagnostic only.
    pub fn probe_growth(&self) -> f64 {
        let eval = |y: f64| match self {
            Claim::European { psi, .. } | Claim::Asian { psi, .. } => psi(y),
            Claim::MultiDate { psi, dates, .. } => psi(&vec![y; dates.len()]),
        };
        let lo = eval(1024.0).abs().max(1.0);
        let hi = eval(1_048_576.0).abs().max(1.0);
        (hi.ln() - lo.ln()) / (1024.0f64).ln()
    }
}

/// Volatility entering the hedging PDE.
#[derive(Clone)]
pub enum Volatility {
    Constant(f64),
    /// `sigma(t, price)` with declared bounds `0 < lower <= sigma <= upper`.
    Local {
        label: String,
        sigma: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        lower: f64,
        upper: f64,
    },
}

impl fmt::Debug for Volatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl Volatility {
    pub fn local(
        label: impl Into<String>,
        lower: f64,
        upper: f64,
        sigma: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Volatility::Local {
            label: label.into(),
            sigma: Arc::new(sigma),
            lower,
            upper,
        }
    }

    pub fn at(&self, t: f64, price: f64) -> f64 {
        match self {
            Volatility::Constant(s) => *s,
            Volatility::Local { sigma, .. } => sigma(t, price),
        }
    }

    /// Upper bound, used to size the truncated domain.
    pub fn upper(&self) -> f64 {
        match self {
            Volatility::Constant(s) => *s,
            Volatility::Local { upper, .. } => *upper,
        }
    }

    pub fn lower(&self) -> f64 {
        match self {
            Volatility::Constant(s) => *s,
            Volatility::Local { lower, .. } => *lower,
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Volatility::Constant(s) => Some(*s),
            Volatility::Local { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Volatility::Constant(s) => format!("constant({s})"),
            Volatility::Local {
                label,
                lower,
                upper,
                ..
            } => format!("local({label}, [{lower}, {upper}])"),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.lower(), self.upper());
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "volatility bounds must satisfy 0 < c1 <= c2 < inf, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Checks `lower <= sigma <= upper` at the given sample points.
    fn check_on(&self, points: impl Iterator<Item = (f64, f64)>) -> Result<()> {
        if let Volatility::Local {
            sigma,
            lower,
            upper,
            label,
        } = self
        {
            for (t, p) in points {
                let s = sigma(t, p);
                if !(s >= *lower && s <= *upper) {
                    return Err(Error::InvalidParameter(format!(
                        "volatility {label} is {s} at (t={t}, price={p}), outside [{lower}, {upper}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Settings for the Asian domain pilot simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pilot {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub quantile: f64,
}

impl Default for Pilot {
    fn default() -> Self {
        Self {
            paths: 2000,
            steps: 256,
            seed: 0x9117,
            quantile: 0.999,
        }
    }
}

/// Discretization and model inputs for the hedging PDEs.
#[derive(Debug, Clone)]
pub struct PdeParams {
    pub volatility: Volatility,
    pub rate: f64,
    pub spot: f64,
    pub space_nodes: usize,
    /// Time steps over `[0, 1]`; multi-date stages get a proportional share.
    pub time_steps: usize,
    /// Half-width of the log-price domain in units of `sigma sqrt(T)`.
    pub width: f64,
    pub rannacher: bool,
    /// Nodes per frozen coordinate of multi-date claims.
    pub frozen_nodes: usize,
    /// Half-width of the frozen grids in units of `sigma sqrt(t_i)`.
    pub frozen_width: f64,
    /// Distance below `xi_0` of the Asian domain in units of `sigma`.
    pub asian_lower_width: f64,
    /// Asian nodes are uniform in `asinh(y / asian_cluster)`.
    pub asian_cluster: f64,
    /// Explicit Asian domain; must cover `[xi_0, xi_max]`.
    pub asian_domain: Option<(f64, f64)>,
    pub pilot: Pilot,
}

impl PdeParams {
    pub fn new(volatility: Volatility, spot: f64) -> Self {
        Self {
            volatility,
            rate: 0.0,
            spot,
            space_nodes: 1201,
            time_steps: 1000,
            width: 6.0,
            rannacher: true,
            frozen_nodes: 64,
            frozen_width: 5.0,
            asian_lower_width: 4.0,
            asian_cluster: 0.1,
            asian_domain: None,
            pilot: Pilot::default(),
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn with_nodes(mut self, space_nodes: usize, time_steps: usize) -> Self {
        self.space_nodes = space_nodes;
        self.time_steps = time_steps;
        self
    }

    pub fn describe(&self) -> String {
        format!(
            "sigma={}, r={}, spot={}, space_nodes={}, time_steps={}, width={}, rannacher={}",
            self.volatility.describe(),
            self.rate,
            self.spot,
            self.space_nodes,
            self.time_steps,
            self.width,
            self.rannacher
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.volatility.validate()?;
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rate must be >= 0, got {}",
                self.rate
            )));
        }
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spot must be positive, got {}",
                self.spot
            )));
        }
        if self.space_nodes < 5 || self.time_steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "need >= 5 space nodes and >= 2 time steps, got {} and {}",
                self.space_nodes, self.time_steps
            )));
        }
        if !(self.width > 0.0
            && self.frozen_width > 0.0
            && self.asian_lower_width > 0.0
            && self.asian_cluster > 0.0)
        {
            return Err(Error::InvalidParameter(
                "domain widths must be positive".into(),
            ));
        }
        if self.frozen_nodes < 2 {
            return Err(Error::InvalidParameter("need >= 2 frozen nodes".into()));
        }
        Ok(())
    }

    /// Rejects a time step larger than the space step of `grid`.
    fn check_steps(&self, grid: &SpaceGrid) -> Result<()> {
        let dt = 1.0 / self.time_steps as f64;
        if dt > grid.dz {
            return Err(Error::InvalidParameter(format!(
                "time step {dt} exceeds space step {}; raise time_steps",
                grid.dz
            )));
        }
        Ok(())
    }
}

/// Solved hedging problem, ready for replication.
#[derive(Debug, Clone)]
pub enum HedgeSolution {
    European(PdeSolution),
    MultiDate(MultiDateSolution),
    Asian(AsianSolution),
}

impl HedgeSolution {
    /// Replication price at `t = 0` for the spot the problem was solved at.
    pub fn x0(&self) -> f64 {
        match self {
            HedgeSolution::European(s) => s.value_at(0.0, s.meta.spot),
            HedgeSolution::MultiDate(s) => s.x0(),
            HedgeSolution::Asian(s) => s.x0(),
        }
    }

    pub fn notes(&self) -> Vec<String> {
        match self {
            HedgeSolution::European(s) => s.meta.notes.clone(),
            HedgeSolution::MultiDate(s) => s.notes().to_vec(),
            HedgeSolution::Asian(s) => s.pde().meta.notes.clone(),
        }
    }
}

/// Solves the PDE matching the claim type.
pub fn solve(claim: &Claim, params: &PdeParams) -> Result<HedgeSolution> {
    match claim {
        Claim::European { .. } => solve_european(claim, params).map(HedgeSolution::European),
        Claim::MultiDate { .. } => solve_multidate(claim, params).map(HedgeSolution::MultiDate),
        Claim::Asian { .. } => solve_asian(claim, params).map(HedgeSolution::Asian),
    }
}
