use serde::Serialize;

use super::european::check_terminal;
use super::pde::{solve_backward, Coordinate, PdeSolution, SolutionMeta, SpaceGrid};
use super::{Claim, PdeParams};
use crate::error::{Error, Result};
use crate::paths::{gen_price, PriceModel, TimeGrid};

/// Solved Asian problem in the state `xi = Z / S`, `Z_t = int_0^t S ds - K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsianSolution {
    pde: PdeSolution,
    strike: f64,
    spot: f64,
    xi0: f64,
    xi_max: f64,
}

impl AsianSolution {
    pub fn pde(&self) -> &PdeSolution {
        &self.pde
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    /// `xi_0 = -K / S_0`.
    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    /// Upper end of the pilot range of `xi`.
    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    /// `X_0 = v(0, xi_0) S_0`.
    pub fn x0(&self) -> f64 {
        self.pde.value_at(0.0, self.xi0) * self.spot
    }

    /// `h = v - xi d_y v` at `(t, xi)`.
    pub fn hedge(&self, t: f64, xi: f64) -> f64 {
        self.pde.value_at(t, xi) - xi * self.pde.delta_at(t, xi)
    }
}

/// Running `Z_t / S_t` along a price path, with `int S` by the trapezoid rule.
pub(crate) fn xi_path(prices: &[f64], step: f64, strike: f64) -> Vec<f64> {
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(prices.len());
    out.push(-strike / prices[0]);
    for i in 1..prices.len() {
        integral += 0.5 * step * (prices[i - 1] + prices[i]);
        out.push((integral - strike) / prices[i]);
    }
    out
}

fn pilot_xi_max(params: &PdeParams, sigma: f64, strike: f64) -> Result<f64> {
    let p = params.pilot;
    let model = PriceModel::Gbm {
        sigma,
        mu: params.rate,
        s0: params.spot,
    };
    let grid = TimeGrid::new(p.steps)?;
    let ens = gen_price(model, grid, p.seed, p.paths)?;
    let mut maxima: Vec<f64> = ens
        .paths()
        .iter()
        .map(|path| {
            xi_path(path.values(), grid.step(), strike)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    maxima.sort_by(f64::total_cmp);
    let idx = ((p.quantile * maxima.len() as f64).ceil() as usize).clamp(1, maxima.len()) - 1;
    Ok(maxima[idx])
}

/// Solves `v_t + sigma^2 y^2 v_yy / 2 + (1 - r y) v_y = 0`, `v(1, y) = psi(y)` on a
/// raw-coordinate domain containing `xi_0 = -K / S_0`.
///
/// The diffusion vanishes at `y = 0`; there the advection is upwinded, and the
/// nodes are clustered around 0 to keep the upwind band narrow.
pub fn solve_asian(claim: &Claim, params: &PdeParams) -> Result<AsianSolution> {
    let Claim::Asian { psi, strike, label } = claim else {
        return Err(Error::InvalidParameter(format!(
            "expected an Asian claim, got {}",
            claim.label()
        )));
    };
    claim.validate()?;
    params.validate()?;
    let sigma = params.volatility.constant().ok_or_else(|| {
        Error::InvalidParameter("the Asian solver needs a constant volatility".into())
    })?;
    let strike = *strike;
    let xi0 = -strike / params.spot;
    let xi_max = pilot_xi_max(params, sigma, strike)?.max(xi0);
    let (lower, upper) = match params.asian_domain {
        Some((lo, hi)) => {
            if !(lo <= xi0 && hi >= xi_max && lo < hi) {
                return Err(Error::Domain(format!(
                    "domain [{lo}, {hi}] does not cover [xi_0, xi_max] = [{xi0}, {xi_max}]"
                )));
            }
            (lo, hi)
        }
        None => (xi0 - params.asian_lower_width * sigma, xi_max + sigma),
    };
    let coordinate = Coordinate::Sinh {
        scale: params.asian_cluster,
    };
    let grid = SpaceGrid::new(
        coordinate,
        coordinate.to_grid(lower),
        coordinate.to_grid(upper),
        params.space_nodes,
    );
    params.check_steps(&grid)?;
    let nodes = &grid.nodes;
    let terminal: Vec<f64> = nodes.iter().map(|&y| psi(y)).collect();
    check_terminal(&terminal, nodes)?;
    let r = params.rate;
    let diffusion: Vec<f64> = nodes.iter().map(|y| 0.5 * sigma * sigma * y * y).collect();
    let levels = solve_backward(
        nodes,
        0.0,
        1.0,
        params.time_steps,
        params.rannacher,
        terminal,
        |_, j| (diffusion[j], 1.0 - r * nodes[j]),
    );
    let mut pde = PdeSolution::new(
        grid,
        0.0,
        1.0,
        levels,
        SolutionMeta {
            claim: label.clone(),
            params: params.describe(),
            rate: r,
            spot: params.spot,
            notes: Vec::new(),
        },
    );
    let alt = strike / params.spot;
    let alt_note = if pde.contains(alt) {
        format!("{}", pde.value_at(0.0, alt) * params.spot)
    } else {
        "outside the solved domain".into()
    };
    pde.meta.notes = vec![
        format!(
            "initial value X0 = v(0, Z0/S0) S0 with Z0 = -K, so xi0 = {xi0}; \
             the reading v(0, K/S0) S0 would give {alt_note}"
        ),
        format!("domain [{lower}, {upper}] from a pilot quantile xi_max = {xi_max}"),
    ];
    Ok(AsianSolution {
        pde,
        strike,
        spot: params.spot,
        xi0,
        xi_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedging::Volatility;

    fn params() -> PdeParams {
        PdeParams::new(Volatility::Constant(0.2), 1.0).with_nodes(401, 400)
    }

    #[test]
    fn linear_claim_matches_exact_solution() {
        let s = solve_asian(&Claim::asian("y", 1.0, |y| y), &params()).unwrap();
        let pde = s.pde();
        let mut worst = 0.0_f64;
        for k in 0..pde.n_levels() {
            let t = pde.time(k);
            for (y, v) in pde.nodes().iter().zip(pde.values(k)) {
                worst = worst.max((v - (y + 1.0 - t)).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
        assert!((s.x0() - 0.0).abs() < 1e-10);
        assert!((s.hedge(0.3, -0.5) - 0.7).abs() < 1e-9);
    }

    #[test]
    fn zero_claim_stays_zero() {
        let s = solve_asian(&Claim::asian("0", 1.0, |_| 0.0), &params()).unwrap();
        assert!(s.pde().values(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn narrow_domain_rejected() {
        let mut p = params();
        p.asian_domain = Some((-0.5, 1.0));
        assert!(matches!(
            solve_asian(&Claim::asian_call(1.0), &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn xi_path_trapezoid() {
        let xi = xi_path(&[1.0, 2.0, 2.0], 0.5, 1.0);
        assert_eq!(xi, vec![-1.0, (0.75 - 1.0) / 2.0, (1.75 - 1.0) / 2.0]);
    }

    #[test]
    fn records_initial_value_convention() {
        let s = solve_asian(&Claim::asian_call(1.0), &params()).unwrap();
        assert!(s.pde().meta.notes[0].contains("Z0 = -K"));
        assert!(s.x0() > 0.0);
    }
}
