use super::pde::{solve_backward, Coordinate, PdeSolution, SolutionMeta, SpaceGrid};
use super::{Claim, PdeParams, Volatility};
use crate::error::{Error, Result};

/// Log-uniform nodes over `log spot +- width * sigma_max * sqrt(horizon)`.
pub(crate) fn log_grid(params: &PdeParams, horizon: f64) -> SpaceGrid {
    let half = params.width * params.volatility.upper() * horizon.sqrt();
    let c = params.spot.ln();
    SpaceGrid::new(Coordinate::LogPrice, c - half, c + half, params.space_nodes)
}

pub(crate) fn check_terminal(values: &[f64], nodes: &[f64]) -> Result<()> {
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "terminal value at y={} is not finite",
            nodes[j]
        )));
    }
    Ok(())
}

/// Diffusion coefficient `sigma~^2 y^2 / 2` with `sigma~(t, y) = sigma(t, y e^{rt})`.
pub(crate) fn diffusion<'a>(
    vol: &'a Volatility,
    rate: f64,
    nodes: &'a [f64],
) -> impl Fn(f64, usize) -> (f64, f64) + Sync + 'a {
    let constant: Option<Vec<f64>> = vol
        .constant()
        .map(|s| nodes.iter().map(|y| 0.5 * s * s * y * y).collect());
    move |t, j| match &constant {
        Some(a) => (a[j], 0.0),
        None => {
            let y = nodes[j];
            let s = vol.at(t, y * (rate * t).exp());
            (0.5 * s * s * y * y, 0.0)
        }
    }
}

/// Checks the volatility bounds at every node of every time level in `[t0, t1]`.
pub(crate) fn check_volatility(
    params: &PdeParams,
    nodes: &[f64],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<()> {
    let r = params.rate;
    params.volatility.check_on((0..=steps).flat_map(|k| {
        let t = t0 + (t1 - t0) * k as f64 / steps as f64;
        nodes.iter().map(move |y| (t, y * (r * t).exp()))
    }))
}

/// Solves `v_t + sigma~^2 y^2 v_yy / 2 = 0`, `v(1, y) = psi(y e^r) e^{-r}` in the
/// discounted price `y`, backward from `t = 1`.
pub fn solve_european(claim: &Claim, params: &PdeParams) -> Result<PdeSolution> {
    let Claim::European { psi, label } = claim else {
        return Err(Error::InvalidParameter(format!(
            "expected a European claim, got {}",
            claim.label()
        )));
    };
    params.validate()?;
    let grid = log_grid(params, 1.0);
    params.check_steps(&grid)?;
    let nodes = &grid.nodes;
    let r = params.rate;
    check_volatility(params, nodes, 0.0, 1.0, params.time_steps)?;
    let growth = r.exp();
    let terminal: Vec<f64> = nodes.iter().map(|y| psi(y * growth) / growth).collect();
    check_terminal(&terminal, nodes)?;
    let levels = solve_backward(
        nodes,
        0.0,
        1.0,
        params.time_steps,
        params.rannacher,
        terminal,
        diffusion(&params.volatility, r, nodes),
    );
    let meta = SolutionMeta {
        claim: label.clone(),
        params: params.describe(),
        rate: r,
        spot: params.spot,
        notes: vec![
            "solved on a truncated log-price domain; zero second derivative at both ends".into(),
        ],
    };
    Ok(PdeSolution::new(grid, 0.0, 1.0, levels, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedging::bs_closed_form;

    fn params(sigma: f64) -> PdeParams {
        PdeParams::new(Volatility::Constant(sigma), 1.0).with_nodes(401, 400)
    }

    #[test]
    fn identity_claim_is_preserved() {
        let s = solve_european(&Claim::european("y", |y| y), &params(0.2)).unwrap();
        for k in [0, 10, 400] {
            for (y, v) in s.nodes().iter().zip(s.values(k)) {
                assert!((v - y).abs() < 1e-12 * y.max(1.0));
            }
            for d in s.deltas(k) {
                assert!((d - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_claim_is_preserved() {
        let s = solve_european(&Claim::european("c", |_| 2.5), &params(0.3)).unwrap();
        assert!(s.values(0).iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn call_close_to_closed_form() {
        let s = solve_european(&Claim::call(1.0), &params(0.2)).unwrap();
        let exact = bs_closed_form(0.2, 0.0, 1.0, 1.0, 1.0).price;
        assert!((s.value_at(0.0, 1.0) / exact - 1.0).abs() < 2e-3);
    }

    #[test]
    fn rate_discounts_terminal_condition() {
        let p = params(0.2).with_rate(0.05);
        let s = solve_european(&Claim::call(1.0), &p).unwrap();
        let exact = bs_closed_form(0.2, 0.05, 1.0, 1.0, 1.0).price;
        assert!((s.value_at(0.0, 1.0) / exact - 1.0).abs() < 2e-3);
    }

    #[test]
    fn degenerate_volatility_rejected() {
        let bad = PdeParams::new(Volatility::Constant(0.0), 1.0);
        assert!(solve_european(&Claim::call(1.0), &bad).is_err());
        let escapes = PdeParams::new(
            Volatility::local("escapes", 0.1, 0.3, |_, p| if p > 1.5 { 0.05 } else { 0.2 }),
            1.0,
        )
        .with_nodes(101, 100);
        assert!(solve_european(&Claim::call(1.0), &escapes).is_err());
    }

    #[test]
    fn non_finite_terminal_rejected() {
        let c = Claim::european("log", |y| (y - 1.0).ln());
        assert!(solve_european(&c, &params(0.2)).is_err());
    }

    #[test]
    fn coarse_time_grid_rejected() {
        let p = params(0.2).with_nodes(401, 10);
        assert!(solve_european(&Claim::call(1.0), &p).is_err());
    }
}
