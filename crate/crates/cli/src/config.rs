//! Experiment configuration: JSON text, one typed parameter block per subcommand,
//! every default filled in.

use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use fwdcalc::amartingale::StrategyFamily;
use fwdcalc::calculus::{InsideFactorStrategy, SmoothField};
use fwdcalc::paths::{gen_brownian, gen_fbm, gen_price, gen_weak_bm1};
use fwdcalc::{PathEnsemble, PriceModel, TimeGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Qv,
    Itocheck,
    Amtest,
    Hedge,
    Utility,
    Funcheck,
    Fullsupport,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Simulate,
        Command::Qv,
        Command::Itocheck,
        Command::Amtest,
        Command::Hedge,
        Command::Utility,
        Command::Funcheck,
        Command::Fullsupport,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Qv => "qv",
            Command::Itocheck => "itocheck",
            Command::Amtest => "amtest",
            Command::Hedge => "hedge",
            Command::Utility => "utility",
            Command::Funcheck => "funcheck",
            Command::Fullsupport => "fullsupport",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Path generators selectable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Brownian,
    Fbm { hurst: f64 },
    WeakBm1,
    Price { model: PriceModel },
}

impl Generator {
    pub fn label(&self) -> String {
        match self {
            Generator::Brownian => "brownian".into(),
            Generator::Fbm { hurst } => format!("fbm(H={hurst})"),
            Generator::WeakBm1 => "weak_bm1".into(),
            Generator::Price { model } => model.id(),
        }
    }

    pub fn generate(
        &self,
        grid: TimeGrid,
        seed: u64,
        n_paths: usize,
    ) -> fwdcalc::Result<PathEnsemble> {
        match *self {
            Generator::Brownian => gen_brownian(grid, seed, n_paths),
            Generator::Fbm { hurst } => gen_fbm(grid, hurst, seed, n_paths),
            Generator::WeakBm1 => gen_weak_bm1(grid, seed, n_paths),
            Generator::Price { model } => gen_price(model, grid, seed, n_paths),
        }
    }
}

pub fn gbm() -> PriceModel {
    PriceModel::Gbm {
        sigma: 0.2,
        mu: 0.05,
        s0: 1.0,
    }
}

pub fn mixed_gbm() -> PriceModel {
    PriceModel::MixedGbm {
        sigma: 0.2,
        mu: 0.05,
        s0: 1.0,
        eta: 0.5,
        hurst: 0.75,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    /// `{1, x, cos x}`.
    SmoothThree,
    /// `{1, x, sin x}`.
    OneXSine,
    /// `{x}`.
    Identity,
}

impl FamilySpec {
    pub fn build(&self) -> StrategyFamily {
        match self {
            FamilySpec::SmoothThree => StrategyFamily::smooth_three(),
            FamilySpec::OneXSine => StrategyFamily::one_x_sine(),
            FamilySpec::Identity => {
                StrategyFamily::from_fields("{x}", vec![SmoothField::half_square()])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategySpec {
    Unit,
    Linear,
    AboveRunningMin,
}

impl StrategySpec {
    pub fn build(&self) -> InsideFactorStrategy {
        match self {
            StrategySpec::Unit => InsideFactorStrategy::unit(),
            StrategySpec::Linear => InsideFactorStrategy::linear(),
            StrategySpec::AboveRunningMin => InsideFactorStrategy::above_running_min(),
        }
    }
}

fn quarters() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

fn refinements() -> Vec<usize> {
    vec![256, 1024, 4096]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawParams {
    pub n_steps: usize,
    pub n_paths: usize,
    pub times: Vec<f64>,
    pub alpha: f64,
}

impl Default for LawParams {
    fn default() -> Self {
        Self {
            n_steps: 64,
            n_paths: 10_000,
            times: quarters(),
            alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub n_steps: usize,
    pub n_paths: usize,
    pub generators: Vec<Generator>,
    /// Marginal law of the weak Brownian motion against `N(0, t)`.
    pub law: LawParams,
    /// Also dump every ensemble as CSV.
    pub write_paths: bool,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            n_steps: 1024,
            n_paths: 100,
            generators: vec![
                Generator::Brownian,
                Generator::Fbm { hurst: 0.75 },
                Generator::WeakBm1,
                Generator::Price { model: gbm() },
                Generator::Price { model: mixed_gbm() },
                Generator::Price {
                    model: PriceModel::WeakGbm {
                        sigma: 0.2,
                        s0: 1.0,
                        mu: 0.05,
                    },
                },
            ],
            law: LawParams::default(),
            write_paths: false,
        }
    }
}

/// Expected `[X]_1`: either `expected +- tolerance` or at most `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvTarget {
    pub generator: Generator,
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceParams {
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub n_paths: usize,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self {
            n_list: refinements(),
            m_list: vec![1, 2, 4],
            n_paths: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QvParams {
    pub n_steps: usize,
    pub n_paths: usize,
    pub targets: Vec<QvTarget>,
    /// Study of `[W]_1` against `1` under refinement.
    pub convergence: ConvergenceParams,
}

impl Default for QvParams {
    fn default() -> Self {
        Self {
            n_steps: 4096,
            n_paths: 200,
            targets: vec![
                QvTarget {
                    generator: Generator::Brownian,
                    expected: Some(1.0),
                    tolerance: Some(0.05),
                    max: None,
                },
                QvTarget {
                    generator: Generator::Fbm { hurst: 0.75 },
                    expected: None,
                    tolerance: None,
                    max: Some(0.03),
                },
                QvTarget {
                    generator: Generator::WeakBm1,
                    expected: Some(2.0 - std::f64::consts::SQRT_2),
                    tolerance: Some(0.05),
                    max: None,
                },
            ],
            convergence: ConvergenceParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItoParams {
    pub n_list: Vec<usize>,
    pub n_paths: usize,
    /// Hurst index of the driver for the `sin x` check.
    pub hurst: f64,
}

impl Default for ItoParams {
    fn default() -> Self {
        Self {
            n_list: refinements(),
            n_paths: 20,
            hurst: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmtestParams {
    pub n_steps: usize,
    pub n_paths: usize,
    /// Consecutive seeds starting at the run seed.
    pub n_seeds: usize,
    pub family: FamilySpec,
    pub checkpoints: Vec<f64>,
    pub z_crit: f64,
    pub min_pass_fraction: f64,
    /// Strategy family applied to the uncompensated process.
    pub uncompensated_family: FamilySpec,
    /// Checkpoints after this time must reject for the uncompensated process.
    pub uncompensated_reject_after: f64,
}

impl Default for AmtestParams {
    fn default() -> Self {
        Self {
            n_steps: 256,
            n_paths: 10_000,
            n_seeds: 20,
            family: FamilySpec::SmoothThree,
            checkpoints: quarters(),
            z_crit: 3.0,
            min_pass_fraction: 0.95,
            uncompensated_family: FamilySpec::Identity,
            uncompensated_reject_after: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSpec {
    pub sigma: f64,
    pub rate: f64,
    pub spot: f64,
    pub space_nodes: usize,
    pub time_steps: usize,
    pub width: f64,
    pub rannacher: bool,
    pub frozen_nodes: usize,
    pub frozen_width: f64,
}

impl Default for PdeSpec {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            rate: 0.0,
            spot: 1.0,
            space_nodes: 1201,
            time_steps: 1000,
            width: 6.0,
            rannacher: true,
            frozen_nodes: 64,
            frozen_width: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HedgeCase {
    /// PDE price of a call against the closed form.
    CallPrice {
        strike: f64,
        relative_tolerance: f64,
    },
    /// Call replication along each model's paths over a refinement list.
    Robustness {
        strike: f64,
        models: Vec<PriceModel>,
        n_list: Vec<usize>,
        n_paths: usize,
        max_relative_rms: f64,
        max_rms_ratio: f64,
    },
    /// Asian claim `psi(y) = y`: exact solution and first-order replication error.
    AsianLinear {
        model: PriceModel,
        n_list: Vec<usize>,
        n_paths: usize,
        value_tolerance: f64,
        max_constant_ratio: f64,
    },
    /// Claims paying one observed price; replicated to rounding.
    MultiDateLinear {
        model: PriceModel,
        dates: Vec<f64>,
        n_steps: usize,
        n_paths: usize,
        tolerance: f64,
    },
    /// Forward-start call price against the closed form.
    ForwardStart { t1: f64, relative_tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HedgeParams {
    pub pde: PdeSpec,
    pub cases: Vec<HedgeCase>,
}

impl Default for HedgeParams {
    fn default() -> Self {
        Self {
            pde: PdeSpec::default(),
            cases: vec![
                HedgeCase::CallPrice {
                    strike: 1.0,
                    relative_tolerance: 1e-3,
                },
                HedgeCase::Robustness {
                    strike: 1.0,
                    models: vec![gbm(), mixed_gbm()],
                    n_list: refinements(),
                    n_paths: 500,
                    max_relative_rms: 0.02,
                    max_rms_ratio: 2.0,
                },
                HedgeCase::AsianLinear {
                    model: gbm(),
                    n_list: refinements(),
                    n_paths: 500,
                    value_tolerance: 1e-6,
                    max_constant_ratio: 1.5,
                },
                HedgeCase::MultiDateLinear {
                    model: gbm(),
                    dates: vec![0.5, 1.0],
                    n_steps: 256,
                    n_paths: 500,
                    tolerance: 1e-9,
                },
                HedgeCase::ForwardStart {
                    t1: 0.5,
                    relative_tolerance: 5e-3,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimalityParams {
    pub pi_pass: f64,
    pub pi_fail: f64,
    pub family: FamilySpec,
    pub checkpoints: Vec<f64>,
    pub z_crit: f64,
}

impl Default for OptimalityParams {
    fn default() -> Self {
        Self {
            pi_pass: 2.0,
            pi_fail: 3.0,
            family: FamilySpec::SmoothThree,
            checkpoints: quarters(),
            z_crit: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityParams {
    pub model: PriceModel,
    pub rate: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_step: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    /// Allowed distance of the argmax from the analytic optimum.
    pub argmax_tolerance: f64,
    pub optimality: OptimalityParams,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            model: PriceModel::Gbm {
                sigma: 0.2,
                mu: 0.1,
                s0: 1.0,
            },
            rate: 0.02,
            theta_min: 0.0,
            theta_max: 4.0,
            theta_step: 0.25,
            n_steps: 256,
            n_paths: 10_000,
            argmax_tolerance: 0.25,
            optimality: OptimalityParams::default(),
        }
    }
}

impl UtilityParams {
    pub fn theta_grid(&self) -> Result<Vec<f64>, ConfigError> {
        if !(self.theta_step > 0.0) || !(self.theta_max >= self.theta_min) {
            return Err(invalid(
                "theta grid needs theta_step > 0 and theta_max >= theta_min",
            ));
        }
        let count =
            ((self.theta_max - self.theta_min) / self.theta_step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| self.theta_min + k as f64 * self.theta_step)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuncheckParams {
    pub model: PriceModel,
    pub n_list: Vec<usize>,
    pub n_paths: usize,
    pub strategies: Vec<StrategySpec>,
}

impl Default for FuncheckParams {
    fn default() -> Self {
        Self {
            model: gbm(),
            n_list: refinements(),
            n_paths: 200,
            strategies: vec![StrategySpec::Linear, StrategySpec::AboveRunningMin],
        }
    }
}

/// Centre of the tube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TubeCentre {
    Zero,
    Linear { slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FullSupportParams {
    pub n_steps: usize,
    pub n_paths: usize,
    pub centre: TubeCentre,
    pub eps_list: Vec<f64>,
    /// Radius at which the fraction must be strictly positive.
    pub positive_at: f64,
}

impl Default for FullSupportParams {
    fn default() -> Self {
        Self {
            n_steps: 128,
            n_paths: 100_000,
            centre: TubeCentre::Zero,
            eps_list: vec![0.25, 0.5, 1.0],
            positive_at: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Simulate(SimulateParams),
    Qv(QvParams),
    Itocheck(ItoParams),
    Amtest(AmtestParams),
    Hedge(HedgeParams),
    Utility(UtilityParams),
    Funcheck(FuncheckParams),
    Fullsupport(FullSupportParams),
}

impl Params {
    pub fn default_for(command: Command) -> Self {
        match command {
            Command::Simulate => Params::Simulate(Default::default()),
            Command::Qv => Params::Qv(Default::default()),
            Command::Itocheck => Params::Itocheck(Default::default()),
            Command::Amtest => Params::Amtest(Default::default()),
            Command::Hedge => Params::Hedge(Default::default()),
            Command::Utility => Params::Utility(Default::default()),
            Command::Funcheck => Params::Funcheck(Default::default()),
            Command::Fullsupport => Params::Fullsupport(Default::default()),
        }
    }

    fn parse(command: Command, value: serde_json::Value) -> Result<Self, ConfigError> {
        fn typed<T: DeserializeOwned>(v: serde_json::Value) -> Result<T, ConfigError> {
            serde_json::from_value(v).map_err(|e| invalid(format!("params: {e}")))
        }
        Ok(match command {
            Command::Simulate => Params::Simulate(typed(value)?),
            Command::Qv => Params::Qv(typed(value)?),
            Command::Itocheck => Params::Itocheck(typed(value)?),
            Command::Amtest => Params::Amtest(typed(value)?),
            Command::Hedge => Params::Hedge(typed(value)?),
            Command::Utility => Params::Utility(typed(value)?),
            Command::Funcheck => Params::Funcheck(typed(value)?),
            Command::Fullsupport => Params::Fullsupport(typed(value)?),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    command: Option<Command>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    params: Option<serde_json::Value>,
}

/// A fully resolved experiment. Serializes to the echo embedded in every report;
/// the output directory is not part of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            seed: DEFAULT_SEED,
            out: None,
            params: Params::default_for(command),
        }
    }

    /// Parses config text. A command given on the command line must agree with the
    /// one in the file, if any.
    pub fn from_json(text: &str, command: Option<Command>) -> Result<Self, ConfigError> {
        if text.trim().is_empty() {
            return Err(invalid("empty config"));
        }
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| invalid(format!("malformed config: {e}")))?;
        let command = match (command, raw.command) {
            (Some(a), Some(b)) if a != b => {
                return Err(invalid(format!("config is for `{b}`, not `{a}`")))
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(invalid("config names no command")),
        };
        let params = match raw.params {
            Some(v) => Params::parse(command, v)?,
            None => Params::default_for(command),
        };
        Ok(Self {
            command,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            out: raw.out,
            params,
        })
    }

    /// Canonical JSON of the resolved config.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
