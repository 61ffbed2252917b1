//! Pathwise calculus checks built on the regularization estimators: Itô formula,
//! integration by parts, chain rule, the wealth functional `V_phi` for
//! strategies with inside factors, and the empirical full-support check.

mod field;
mod wealth;

pub use field::{SmoothField, VectorField, PROBE_SPACING, PROBE_TOLERANCE};
pub use wealth::{
    compare_functional, full_support_fraction, pathwise_wealth_functional, strategy_path,
    Antiderivative, FactorKind, FunctionalGapSummary, History, InsideFactorStrategy,
    QUADRATURE_TOLERANCE,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::SamplePath;
use crate::regularize::{covariation, forward_integral, quadratic_variation, stieltjes, RegParams};

/// Terms of the discrete Itô formula for `Psi(t, X_t)` with `V = t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItoDecomposition {
    /// `Psi(t, X_t) - Psi(0, X_0)`.
    pub lhs: SamplePath,
    /// `int d_t Psi(s, X_s) ds`.
    pub integral_dv_terms: SamplePath,
    /// `int d_x Psi(s, X_s) d^- X_s`.
    pub forward_term: SamplePath,
    /// `1/2 int d_xx Psi(s, X_s) d[X]_s`.
    pub qv_term: SamplePath,
    pub residual: SamplePath,
    pub sup_residual: f64,
}

fn pointwise(a: &SamplePath, f: impl Fn(usize, f64) -> f64) -> SamplePath {
    let values = a
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| f(i, v))
        .collect();
    SamplePath::from_raw(a.grid(), values)
}

fn combine(paths: &[(&SamplePath, f64)]) -> SamplePath {
    let first = paths[0].0;
    let values = (0..first.grid().len())
        .map(|i| paths.iter().map(|(p, c)| c * p.value(i)).sum())
        .collect();
    SamplePath::from_raw(first.grid(), values)
}

fn with_sup(residual: SamplePath) -> (SamplePath, f64) {
    let sup = residual.sup_norm();
    (residual, sup)
}

/// Decomposes `Psi(t, X_t)` by the Itô formula for finite quadratic variation paths and
/// reports the pathwise residual.
pub fn ito_decompose(
    field: &SmoothField,
    x: &SamplePath,
    params: RegParams,
) -> Result<ItoDecomposition> {
    field.cross_check()?;
    let grid = x.grid();
    params.validate(grid)?;
    let x0 = x.first();
    let psi0 = field.value(0.0, x0);
    let lhs = x.map_with_time(|t, v| field.value(t, v) - psi0)?;
    let d_t = x.map_with_time(|t, v| field.d_t(t, v))?;
    let d_x = x.map_with_time(|t, v| field.d_x(t, v))?;
    let d_xx = x.map_with_time(|t, v| 0.5 * field.d_xx(t, v))?;
    let time = SamplePath::from_fn(grid, |t| t)?;
    let integral_dv_terms = stieltjes(&d_t, &time)?;
    let forward_term = forward_integral(&d_x, x, params)?;
    let qv = quadratic_variation(x, params)?;
    let qv_term = stieltjes(&d_xx, &qv)?;
    let residual = pointwise(&lhs, |i, l| {
        l - integral_dv_terms.value(i) - forward_term.value(i) - qv_term.value(i)
    });
    let (residual, sup_residual) = with_sup(residual);
    Ok(ItoDecomposition {
        lhs,
        integral_dv_terms,
        forward_term,
        qv_term,
        residual,
        sup_residual,
    })
}

/// Residual of `XY - X_0 Y_0 = int X dY + int Y d^- X` for `Y` of bounded variation.
pub fn integration_by_parts(
    x: &SamplePath,
    y_bv: &SamplePath,
    params: RegParams,
) -> Result<(SamplePath, f64)> {
    x.ensure_same_grid(y_bv)?;
    let xy0 = x.first() * y_bv.first();
    let stieltjes_part = stieltjes(x, y_bv)?;
    let forward_part = forward_integral(y_bv, x, params)?;
    let residual = pointwise(x, |i, xv| {
        xv * y_bv.value(i) - xy0 - stieltjes_part.value(i) - forward_part.value(i)
    });
    Ok(with_sup(residual))
}

/// Residual of the chain rule
/// `int Z d^- psi(X) = sum_i int Z d_i psi(X) d^- X^i + 1/2 sum_{ij} int Z d_ij psi(X) d[X^i, X^j]`.
pub fn chain_rule_check(
    z: &SamplePath,
    psi: &VectorField,
    xs: &[SamplePath],
    params: RegParams,
) -> Result<(SamplePath, f64)> {
    let d = psi.dim();
    if xs.len() != d {
        return Err(Error::InvalidParameter(format!(
            "field has dimension {d}, got {} paths",
            xs.len()
        )));
    }
    for x in xs {
        z.ensure_same_grid(x)?;
    }
    let grid = z.grid();
    params.validate(grid)?;
    let len = grid.len();
    let mut point = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut psi_x = Vec::with_capacity(len);
    let mut grads = vec![Vec::with_capacity(len); d];
    let mut hessians = vec![Vec::with_capacity(len); d * d];
    for i in 0..len {
        for (k, x) in xs.iter().enumerate() {
            point[k] = x.value(i);
        }
        psi_x.push(psi.value(&point));
        psi.gradient(&point, &mut grad);
        psi.hessian(&point, &mut hess);
        for k in 0..d {
            grads[k].push(z.value(i) * grad[k]);
        }
        for k in 0..d * d {
            hessians[k].push(0.5 * z.value(i) * hess[k]);
        }
    }
    let lhs = forward_integral(z, &SamplePath::new(grid, psi_x)?, params)?;
    let mut terms = Vec::new();
    for (k, g) in grads.into_iter().enumerate() {
        terms.push(forward_integral(
            &SamplePath::new(grid, g)?,
            &xs[k],
            params,
        )?);
    }
    for (idx, h) in hessians.into_iter().enumerate() {
        let (a, b) = (idx / d, idx % d);
        let cov = covariation(&xs[a], &xs[b], params)?;
        terms.push(stieltjes(&SamplePath::new(grid, h)?, &cov)?);
    }
    let mut parts: Vec<(&SamplePath, f64)> = vec![(&lhs, 1.0)];
    parts.extend(terms.iter().map(|t| (t, -1.0)));
    Ok(with_sup(combine(&parts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{gen_brownian, TimeGrid};

    fn brownian(n: usize, seed: u64) -> SamplePath {
        gen_brownian(TimeGrid::new(n).unwrap(), seed, 1)
            .unwrap()
            .paths()[0]
            .clone()
    }

    #[test]
    fn ito_identity_field_is_exact() {
        let w = brownian(256, 3);
        let d = ito_decompose(&SmoothField::identity(), &w, RegParams::default()).unwrap();
        assert!(d.sup_residual < 1e-13);
    }

    #[test]
    fn ito_square_is_exact() {
        let w = brownian(512, 4);
        let d = ito_decompose(&SmoothField::square(), &w, RegParams::default()).unwrap();
        assert!(d.sup_residual < 1e-12, "{}", d.sup_residual);
    }

    #[test]
    fn ito_rejects_inconsistent_field() {
        let bad = SmoothField::new("bad", |_, x| x * x, |_, _| 0.0, |_, x| x, |_, _| 2.0);
        assert!(ito_decompose(&bad, &brownian(16, 1), RegParams::default()).is_err());
    }

    #[test]
    fn ibp_constant_and_linear() {
        let g = TimeGrid::new(128).unwrap();
        let w = brownian(128, 9);
        let c = SamplePath::constant(g, 2.5).unwrap();
        let (_, sup) = integration_by_parts(&w, &c, RegParams::default()).unwrap();
        assert!(sup < 1e-13);
        let t = SamplePath::from_fn(g, |t| t).unwrap();
        let (_, sup) = integration_by_parts(&t, &t, RegParams::default()).unwrap();
        assert!(sup <= g.step() + 1e-15);
    }

    #[test]
    fn chain_rule_trivial_cases() {
        let g = TimeGrid::new(64).unwrap();
        let w = brownian(64, 5);
        let z = w.map(|v| v.cos()).unwrap();
        let id = VectorField::from_scalar(&SmoothField::identity());
        let (_, sup) =
            chain_rule_check(&z, &id, std::slice::from_ref(&w), RegParams::default()).unwrap();
        assert!(sup < 1e-14);
        let zero = SamplePath::constant(g, 0.0).unwrap();
        let sq = VectorField::from_scalar(&SmoothField::exp());
        let (_, sup) = chain_rule_check(&zero, &sq, &[w], RegParams::default()).unwrap();
        assert_eq!(sup, 0.0);
    }

    #[test]
    fn chain_rule_quadratic_two_dimensional_is_exact() {
        // psi(x, y) = x y is quadratic, so the discrete chain rule holds exactly.
        let g = TimeGrid::new(200).unwrap();
        let a = brownian(200, 1);
        let b = brownian(200, 2);
        let psi = VectorField::new(
            2,
            |x| x[0] * x[1],
            |x, g| {
                g[0] = x[1];
                g[1] = x[0];
            },
            |_, h| h.copy_from_slice(&[0.0, 1.0, 1.0, 0.0]),
        );
        let z = SamplePath::constant(g, 1.0).unwrap();
        let (_, sup) = chain_rule_check(&z, &psi, &[a, b], RegParams::default()).unwrap();
        assert!(sup < 1e-13, "{sup}");
    }

    #[test]
    fn chain_rule_dimension_mismatch() {
        let w = brownian(16, 1);
        let id = VectorField::from_scalar(&SmoothField::identity());
        assert!(chain_rule_check(&w, &id, &[w.clone(), w.clone()], RegParams::default()).is_err());
    }
}
