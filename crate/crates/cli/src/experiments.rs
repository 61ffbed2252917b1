//! One function per subcommand. Each builds its tables and checks from the core
//! crate; nothing here depends on the number of worker threads.

use std::fmt::Write as _;

use fwdcalc::amartingale::{compensate_weak_bm, test_amartingale, StepDensity};
use fwdcalc::calculus::{
    compare_functional, full_support_fraction, integration_by_parts, ito_decompose, History,
    SmoothField,
};
use fwdcalc::hedging::{
    bs_closed_form, forward_start_call, replicate, solve, Claim, HedgeSolution, PdeParams,
    Volatility,
};
use fwdcalc::paths::{gen_brownian, gen_fbm, gen_price, gen_weak_bm1, io as path_io};
use fwdcalc::portfolio::{log_utility_scan, verify_optimality_amartingale, ScanSetup};
use fwdcalc::regularize::{convergence_study, forward_integral, quadratic_variation};
use fwdcalc::{stats, PriceModel, RegParams, SamplePath, TimeGrid};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{
    AmtestParams, ConfigError, FullSupportParams, FuncheckParams, HedgeCase, HedgeParams,
    ItoParams, PdeSpec, QvParams, SimulateParams, TubeCentre, UtilityParams,
};
use crate::report::{Check, Outcome};
use crate::RunError;

/// Accumulated rounding allowed for a running sum of `n` terms of size `scale`.
pub fn rounding_bound(n: usize, scale: f64) -> f64 {
    4.0 * n as f64 * f64::EPSILON * scale.max(1.0)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn sorted_unique(xs: &[usize]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(ConfigError(msg.into()))
}

pub fn simulate(p: &SimulateParams, seed: u64) -> Result<Outcome, RunError> {
    let grid = TimeGrid::new(p.n_steps)?;
    let params = RegParams::default();
    let mut out = Outcome::default();
    let mut nodes: Vec<usize> = (0..=16).map(|k| k * p.n_steps / 16).collect();
    nodes.dedup();
    let mut identity_csv = String::from("generator,max_residual,bound\n");
    let mut qv_columns = Vec::new();
    let mut summaries = Vec::new();
    for g in &p.generators {
        let label = g.label();
        let e = g.generate(grid, seed, p.n_paths)?;
        let per_path = e
            .paths()
            .par_iter()
            .map(|x| {
                let fi = forward_integral(x, x, params)?;
                let qv = quadratic_variation(x, params)?;
                let x0 = x.first();
                let mut worst = 0.0_f64;
                let mut scale = 1.0_f64;
                for i in 0..grid.len() {
                    let xi = x.value(i);
                    let r = fi.value(i) + 0.5 * qv.value(i) - 0.5 * (xi * xi - x0 * x0);
                    worst = worst.max(r.abs());
                    scale = scale.max(xi * xi);
                }
                let at_nodes: Vec<f64> = nodes.iter().map(|&i| qv.value(i)).collect();
                Ok((worst, scale, at_nodes))
            })
            .collect::<fwdcalc::Result<Vec<_>>>()?;
        let worst = per_path.iter().fold(0.0_f64, |m, r| m.max(r.0));
        let scale = per_path.iter().fold(1.0_f64, |m, r| m.max(r.1));
        let bound = rounding_bound(p.n_steps, scale);
        out.check(Check::at_most(format!("identity {label}"), worst, bound));
        let _ = writeln!(identity_csv, "{label},{worst:e},{bound:e}");
        let mean_qv: Vec<f64> = (0..nodes.len())
            .map(|k| per_path.iter().map(|r| r.2[k]).sum::<f64>() / per_path.len() as f64)
            .collect();
        summaries.push(json!({
            "generator": label,
            "max_identity_residual": worst,
            "mean_qv_at_1": mean_qv[mean_qv.len() - 1],
        }));
        qv_columns.push((label.clone(), mean_qv));
        if p.write_paths {
            out.table(
                format!("paths_{}", summaries.len() - 1),
                path_io::to_csv(&e),
            );
        }
    }
    let mut qv_csv = String::from("t");
    for (label, _) in &qv_columns {
        let _ = write!(qv_csv, ",\"{label}\"");
    }
    qv_csv.push('\n');
    for (k, &i) in nodes.iter().enumerate() {
        let _ = write!(qv_csv, "{}", grid.time(i));
        for (_, col) in &qv_columns {
            let _ = write!(qv_csv, ",{:e}", col[k]);
        }
        qv_csv.push('\n');
    }
    out.set("generators", summaries);
    out.table("identity", identity_csv);
    out.table("qv", qv_csv);

    let law = &p.law;
    let lgrid = TimeGrid::new(law.n_steps)?;
    let w = gen_weak_bm1(lgrid, seed, law.n_paths)?;
    let mut law_csv = String::from("t,ks_statistic,p_value\n");
    let mut law_rows = Vec::new();
    for &t in &law.times {
        let i = lgrid.index_of(t)?;
        let column = w.column(i);
        let sd = t.sqrt();
        let d = stats::ks_statistic(&column, |x| stats::normal_cdf(x / sd));
        let pv = stats::ks_p_value(d, column.len());
        out.check(Check::at_least(
            format!("weak_bm1 law t={t} p-value"),
            pv,
            law.alpha,
        ));
        let _ = writeln!(law_csv, "{t},{d:e},{pv:e}");
        law_rows.push(json!({"t": t, "ks": d, "p_value": pv}));
    }
    out.set("weak_bm1_law", law_rows);
    out.table("law", law_csv);
    Ok(out)
}

pub fn qv(p: &QvParams, seed: u64) -> Result<Outcome, RunError> {
    let grid = TimeGrid::new(p.n_steps)?;
    let params = RegParams::default();
    let mut out = Outcome::default();
    let mut csv = String::from("generator,mean_qv,std_qv,n_paths\n");
    let mut rows = Vec::new();
    for target in &p.targets {
        let label = target.generator.label();
        let e = target.generator.generate(grid, seed, p.n_paths)?;
        let finals = e
            .paths()
            .par_iter()
            .map(|x| Ok(quadratic_variation(x, params)?.last()))
            .collect::<fwdcalc::Result<Vec<f64>>>()?;
        let mean = stats::mean(&finals);
        let std = stats::std_dev(&finals);
        match (target.expected, target.tolerance, target.max) {
            (Some(e), Some(tol), _) => {
                out.check(Check::within(format!("mean [X]_1 {label}"), mean, e, tol))
            }
            (_, _, Some(max)) => {
                out.check(Check::at_most(format!("mean [X]_1 {label}"), mean, max))
            }
            _ => {}
        }
        let _ = writeln!(csv, "\"{label}\",{mean:e},{std:e},{}", finals.len());
        rows.push(json!({"generator": label, "mean_qv_at_1": mean, "std": std}));
    }
    out.set("targets", rows);
    out.table("targets", csv);

    let c = &p.convergence;
    let table = convergence_study(
        |g| gen_brownian(g, seed, c.n_paths),
        quadratic_variation,
        |_| 1.0,
        &c.m_list,
        &c.n_list,
    )?;
    out.set("convergence", &table);
    out.table("convergence", table.to_csv());
    Ok(out)
}

pub fn itocheck(p: &ItoParams, seed: u64) -> Result<Outcome, RunError> {
    let params = RegParams::default();
    let mut out = Outcome::default();
    let ns = sorted_unique(&p.n_list);
    let mut csv = String::from("n,check,mean_sup_residual,max_sup_residual\n");
    let mut sine = Vec::new();
    let mut parts = Vec::new();
    let mut rows = Vec::new();
    for &n in &ns {
        let grid = TimeGrid::new(n)?;
        let w = gen_brownian(grid, seed, p.n_paths)?;
        let f = gen_fbm(grid, p.hurst, seed, p.n_paths)?;
        let time = SamplePath::from_fn(grid, |t| t)?;
        let exact = w
            .paths()
            .par_iter()
            .map(|x| {
                let id = ito_decompose(&SmoothField::identity(), x, params)?.sup_residual;
                let sq = ito_decompose(&SmoothField::square(), x, params)?.sup_residual;
                let ibp = integration_by_parts(x, &time, params)?.1;
                Ok((id, sq, ibp, x.sup_norm()))
            })
            .collect::<fwdcalc::Result<Vec<_>>>()?;
        let sine_res = f
            .paths()
            .par_iter()
            .map(|x| Ok(ito_decompose(&SmoothField::sine(), x, params)?.sup_residual))
            .collect::<fwdcalc::Result<Vec<f64>>>()?;
        let scale = exact.iter().fold(1.0_f64, |m, r| m.max(r.3 * r.3));
        let id_max = exact.iter().fold(0.0_f64, |m, r| m.max(r.0));
        let sq_max = exact.iter().fold(0.0_f64, |m, r| m.max(r.1));
        out.check(Check::at_most(
            format!("psi=x on W, n={n}"),
            id_max,
            rounding_bound(n, scale),
        ));
        out.check(Check::at_most(
            format!("psi=x^2 on W, n={n}"),
            sq_max,
            rounding_bound(n, scale),
        ));
        let ibp: Vec<f64> = exact.iter().map(|r| r.2).collect();
        let entries = [
            ("psi=x on W", vec![id_max], id_max),
            ("psi=x^2 on W", vec![sq_max], sq_max),
            (
                "psi=sin x on fBm",
                sine_res.clone(),
                stats::max_abs(&sine_res),
            ),
            ("parts X=W Y=t", ibp.clone(), stats::max_abs(&ibp)),
        ];
        for (name, v, max) in &entries {
            let _ = writeln!(csv, "{n},{name},{:e},{max:e}", stats::mean(v));
        }
        sine.push(stats::mean(&sine_res));
        parts.push(stats::mean(&ibp));
        rows.push(json!({
            "n": n,
            "identity_max": id_max,
            "square_max": sq_max,
            "sine_fbm_mean": stats::mean(&sine_res),
            "parts_mean": stats::mean(&ibp),
        }));
    }
    out.check(Check::holds(
        "psi=sin x on fBm residual decreases",
        strictly_decreasing(&sine),
        "strictly decreasing in n",
    ));
    out.check(Check::holds(
        "integration by parts residual decreases",
        strictly_decreasing(&parts),
        "strictly decreasing in n",
    ));
    out.set("refinements", rows);
    out.table("residuals", csv);
    Ok(out)
}

pub fn amtest(p: &AmtestParams, seed: u64) -> Result<Outcome, RunError> {
    if p.n_seeds == 0 {
        return Err(config_err("n_seeds must be positive"));
    }
    let grid = TimeGrid::new(p.n_steps)?;
    let params = RegParams::default();
    let family = p.family.build();
    let density = StepDensity::weak_bm1(grid)?;
    let mut out = Outcome::default();
    let mut seeds_csv = String::from("seed,max_abs_z,pass\n");
    let mut passes = 0usize;
    let mut first_x = None;
    let mut first_table = String::new();
    let mut per_seed = Vec::new();
    for k in 0..p.n_seeds {
        let s = seed.wrapping_add(k as u64);
        let x = gen_weak_bm1(grid, s, p.n_paths)?;
        let m = compensate_weak_bm(&x, &density)?;
        let r = test_amartingale(&m, &family, &p.checkpoints, params, p.z_crit)?;
        passes += usize::from(r.pass);
        let _ = writeln!(seeds_csv, "{s},{:e},{}", r.max_abs_z(), r.pass);
        per_seed.push(json!({"seed": s, "max_abs_z": r.max_abs_z(), "pass": r.pass}));
        if k == 0 {
            first_table = r.to_csv();
            first_x = Some(x);
        }
    }
    let fraction = passes as f64 / p.n_seeds as f64;
    out.check(Check::at_least(
        "compensated pass fraction",
        fraction,
        p.min_pass_fraction,
    ));

    let x = first_x.expect("at least one seed");
    let unc = test_amartingale(
        &x,
        &p.uncompensated_family.build(),
        &p.checkpoints,
        params,
        p.z_crit,
    )?;
    let late: Vec<f64> = unc
        .rows
        .iter()
        .filter(|r| r.checkpoint > p.uncompensated_reject_after)
        .map(|r| r.z.abs())
        .collect();
    if late.is_empty() {
        return Err(config_err("no checkpoint after uncompensated_reject_after"));
    }
    let min_late = late.iter().cloned().fold(f64::INFINITY, f64::min);
    out.check(Check::above(
        format!(
            "uncompensated min |z| after t={}",
            p.uncompensated_reject_after
        ),
        min_late,
        p.z_crit,
    ));
    out.set("seeds", per_seed);
    out.set("pass_fraction", fraction);
    out.set("uncompensated", &unc);
    out.table("seeds", seeds_csv);
    out.table("compensated", first_table);
    out.table("uncompensated", unc.to_csv());
    Ok(out)
}

fn pde_params(spec: &PdeSpec) -> PdeParams {
    let mut p = PdeParams::new(Volatility::Constant(spec.sigma), spec.spot)
        .with_rate(spec.rate)
        .with_nodes(spec.space_nodes, spec.time_steps);
    p.width = spec.width;
    p.rannacher = spec.rannacher;
    p.frozen_nodes = spec.frozen_nodes;
    p.frozen_width = spec.frozen_width;
    p
}

fn model_matches(model: &PriceModel, spec: &PdeSpec) -> Result<(), RunError> {
    if model.sigma() != spec.sigma || model.s0() != spec.spot {
        return Err(config_err(format!(
            "model {} must share sigma and spot with the PDE ({}, {})",
            model.id(),
            spec.sigma,
            spec.spot
        )));
    }
    Ok(())
}

fn model_tag(model: &PriceModel) -> &'static str {
    match model {
        PriceModel::Gbm { .. } => "gbm",
        PriceModel::MixedGbm { .. } => "mixed_gbm",
        PriceModel::WeakGbm { .. } => "weak_gbm",
    }
}

pub fn hedge(p: &HedgeParams, seed: u64) -> Result<Outcome, RunError> {
    let pp = pde_params(&p.pde);
    let spec = &p.pde;
    let params = RegParams::default();
    let mut out = Outcome::default();
    let mut cases = Vec::new();
    for (ci, case) in p.cases.iter().enumerate() {
        match case {
            HedgeCase::CallPrice {
                strike,
                relative_tolerance,
            } => {
                let sol = solve(&Claim::call(*strike), &pp)?;
                let exact = bs_closed_form(spec.sigma, spec.rate, spec.spot, *strike, 1.0).price;
                let rel = sol.x0() / exact - 1.0;
                out.check(Check::at_most(
                    format!("call price relative error K={strike}"),
                    rel.abs(),
                    *relative_tolerance,
                ));
                cases.push(json!({"case": "call_price", "pde": sol.x0(), "closed_form": exact, "relative_error": rel}));
            }
            HedgeCase::Robustness {
                strike,
                models,
                n_list,
                n_paths,
                max_relative_rms,
                max_rms_ratio,
            } => {
                let claim = Claim::call(*strike);
                let sol = solve(&claim, &pp)?;
                let ns = sorted_unique(n_list);
                let mut csv =
                    String::from("model,n,x0,rms,relative_rms,mean_signed,max_abs,excluded\n");
                let mut rms_by_model = Vec::new();
                let mut reports = Vec::new();
                for (mi, model) in models.iter().enumerate() {
                    model_matches(model, spec)?;
                    let mut rel = Vec::new();
                    for &n in &ns {
                        let prices = gen_price(*model, TimeGrid::new(n)?, seed, *n_paths)?;
                        let r = replicate(&claim, &sol, &prices, params)?;
                        let s = r.stats;
                        let _ = writeln!(
                            csv,
                            "\"{}\",{n},{:e},{:e},{:e},{:e},{:e},{}",
                            r.model,
                            r.x0,
                            s.rms,
                            s.relative_rms,
                            s.mean_signed,
                            s.max_abs,
                            r.excluded
                        );
                        rel.push(s.relative_rms);
                        if n == ns[ns.len() - 1] {
                            out.table(
                                format!("case{ci}_{}_{}_paths", mi, model_tag(model)),
                                r.to_csv(),
                            );
                        }
                        reports.push(r.summary());
                    }
                    let tag = model.id();
                    out.check(Check::at_most(
                        format!("relative RMS {tag} n={}", ns[ns.len() - 1]),
                        rel[rel.len() - 1],
                        *max_relative_rms,
                    ));
                    out.check(Check::holds(
                        format!("RMS decreases in n {tag}"),
                        strictly_decreasing(&rel),
                        "strictly decreasing in n",
                    ));
                    rms_by_model.push(rel);
                }
                if rms_by_model.len() > 1 {
                    for (k, &n) in ns.iter().enumerate() {
                        let col: Vec<f64> = rms_by_model.iter().map(|r| r[k]).collect();
                        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                        out.check(Check::at_most(
                            format!("RMS ratio across models n={n}"),
                            hi / lo,
                            *max_rms_ratio,
                        ));
                    }
                }
                out.table(format!("case{ci}_robustness"), csv);
                cases.push(json!({"case": "robustness", "x0": sol.x0(), "reports": reports}));
            }
            HedgeCase::AsianLinear {
                model,
                n_list,
                n_paths,
                value_tolerance,
                max_constant_ratio,
            } => {
                model_matches(model, spec)?;
                let claim = Claim::asian("y", spec.spot, |y| y);
                let HedgeSolution::Asian(sol) = solve(&claim, &pp)? else {
                    unreachable!("asian claim yields an asian solution")
                };
                let pde = sol.pde();
                let mut sup = 0.0_f64;
                for k in 0..pde.n_levels() {
                    let t = pde.time(k);
                    for (y, v) in pde.nodes().iter().zip(pde.values(k)) {
                        sup = sup.max((v - (y + 1.0 - t)).abs());
                    }
                }
                out.check(Check::at_most(
                    "asian v - (y + 1 - t) sup-norm",
                    sup,
                    *value_tolerance,
                ));
                let solution = HedgeSolution::Asian(sol);
                let notes = solution.notes();
                let ns = sorted_unique(n_list);
                let mut constants = Vec::new();
                let mut csv = String::from("n,step,max_abs_error,constant\n");
                for &n in &ns {
                    let grid = TimeGrid::new(n)?;
                    let prices = gen_price(*model, grid, seed, *n_paths)?;
                    let r = replicate(&claim, &solution, &prices, params)?;
                    let c = r.stats.max_abs / grid.step();
                    let _ = writeln!(csv, "{n},{:e},{:e},{c:e}", grid.step(), r.stats.max_abs);
                    constants.push(c);
                }
                let hi = constants.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
                out.check(Check::at_most(
                    "asian error constant max/min across n",
                    hi / lo,
                    *max_constant_ratio,
                ));
                out.table(format!("case{ci}_asian"), csv);
                cases.push(json!({"case": "asian_linear", "value_sup_error": sup, "constants": constants, "notes": notes}));
            }
            HedgeCase::MultiDateLinear {
                model,
                dates,
                n_steps,
                n_paths,
                tolerance,
            } => {
                model_matches(model, spec)?;
                let prices = gen_price(*model, TimeGrid::new(*n_steps)?, seed, *n_paths)?;
                let mut worst = Vec::new();
                for idx in 0..dates.len() {
                    let claim =
                        Claim::multidate(format!("y{}", idx + 1), dates.clone(), move |y| y[idx]);
                    let sol = solve(&claim, &pp)?;
                    let r = replicate(&claim, &sol, &prices, params)?;
                    out.check(Check::at_most(
                        format!("multi-date psi=y{} max error", idx + 1),
                        r.stats.max_abs,
                        *tolerance,
                    ));
                    worst.push(r.stats.max_abs);
                }
                cases
                    .push(json!({"case": "multidate_linear", "dates": dates, "max_errors": worst}));
            }
            HedgeCase::ForwardStart {
                t1,
                relative_tolerance,
            } => {
                let sol = solve(&Claim::forward_start_call(*t1), &pp)?;
                let exact = forward_start_call(spec.sigma, spec.spot, *t1);
                let rel = sol.x0() / exact - 1.0;
                out.check(Check::at_most(
                    format!("forward-start price relative error t1={t1}"),
                    rel.abs(),
                    *relative_tolerance,
                ));
                cases.push(json!({"case": "forward_start", "pde": sol.x0(), "closed_form": exact, "relative_error": rel}));
            }
        }
    }
    out.set("cases", cases);
    Ok(out)
}

pub fn utility(p: &UtilityParams, seed: u64) -> Result<Outcome, RunError> {
    let thetas = p.theta_grid()?;
    let setup = ScanSetup {
        model: p.model,
        rate: p.rate,
        grid: TimeGrid::new(p.n_steps)?,
        seed,
        n_paths: p.n_paths,
    };
    let params = RegParams::default();
    let mut out = Outcome::default();
    let scan = log_utility_scan(&setup, &thetas, params)?;
    out.check(Check::within(
        "argmax theta",
        scan.argmax_theta,
        scan.analytic,
        p.argmax_tolerance,
    ));
    out.check(Check::holds(
        "argmax interior",
        !scan.inconclusive,
        "argmax not on the grid boundary",
    ));
    let o = &p.optimality;
    let family = o.family.build();
    let at_pass = verify_optimality_amartingale(
        &setup,
        o.pi_pass,
        &family,
        &o.checkpoints,
        params,
        o.z_crit,
    )?;
    let at_fail = verify_optimality_amartingale(
        &setup,
        o.pi_fail,
        &family,
        &o.checkpoints,
        params,
        o.z_crit,
    )?;
    out.check(Check::at_most(
        format!("A-martingale max |z| at pi={}", o.pi_pass),
        at_pass.max_abs_z(),
        o.z_crit,
    ));
    out.check(Check::above(
        format!("A-martingale max |z| at pi={}", o.pi_fail),
        at_fail.max_abs_z(),
        o.z_crit,
    ));
    out.set("scan", scan.summary());
    out.set("optimality_pass", &at_pass);
    out.set("optimality_fail", &at_fail);
    out.table("scan", scan.to_csv());
    out.table("pi_pass", at_pass.to_csv());
    out.table("pi_fail", at_fail.to_csv());
    Ok(out)
}

pub fn funcheck(p: &FuncheckParams, seed: u64) -> Result<Outcome, RunError> {
    if let PriceModel::WeakGbm { .. } = p.model {
        return Err(config_err(
            "funcheck needs d[S] = sigma^2 S^2 dt; use gbm or mixed_gbm",
        ));
    }
    let sigma = p.model.sigma();
    let vol = move |_: f64, _: &History| sigma;
    let params = RegParams::default();
    let ns = sorted_unique(&p.n_list);
    let strategies: Vec<_> = p.strategies.iter().map(|s| s.build()).collect();
    let mut gaps = vec![Vec::new(); strategies.len()];
    let mut csv = String::from("strategy,n,mean_gap,max_gap\n");
    for &n in &ns {
        let e = gen_price(p.model, TimeGrid::new(n)?, seed, p.n_paths)?;
        for (k, s) in strategies.iter().enumerate() {
            let g = compare_functional(s, &e, &vol, params)?;
            let _ = writeln!(
                csv,
                "\"{}\",{n},{:e},{:e}",
                s.label(),
                g.mean_gap,
                g.max_gap
            );
            gaps[k].push(g);
        }
    }
    let mut out = Outcome::default();
    for (s, g) in strategies.iter().zip(&gaps) {
        let means: Vec<f64> = g.iter().map(|x| x.mean_gap).collect();
        out.check(Check::holds(
            format!("mean gap decreases phi={}", s.label()),
            strictly_decreasing(&means),
            "strictly decreasing in n",
        ));
    }
    let rows: Vec<_> = strategies
        .iter()
        .zip(&gaps)
        .map(|(s, g)| json!({"strategy": s.label(), "gaps": g}))
        .collect();
    out.set("strategies", rows);
    out.table("gaps", csv);
    Ok(out)
}

pub fn fullsupport(p: &FullSupportParams, seed: u64) -> Result<Outcome, RunError> {
    let grid = TimeGrid::new(p.n_steps)?;
    let e = gen_brownian(grid, seed, p.n_paths)?;
    let centre = match p.centre {
        TubeCentre::Zero => SamplePath::constant(grid, 0.0)?,
        TubeCentre::Linear { slope } => SamplePath::from_fn(grid, |t| slope * t)?,
    };
    let mut eps = p.eps_list.clone();
    eps.sort_by(f64::total_cmp);
    let fractions = eps
        .iter()
        .map(|&r| full_support_fraction(&e, &centre, r))
        .collect::<fwdcalc::Result<Vec<f64>>>()?;
    let at = full_support_fraction(&e, &centre, p.positive_at)?;
    let mut out = Outcome::default();
    out.check(Check::above(
        format!("tube fraction eps={}", p.positive_at),
        at,
        0.0,
    ));
    out.check(Check::holds(
        "tube fraction monotone in eps",
        fractions.windows(2).all(|w| w[0] <= w[1]),
        "non-decreasing in eps",
    ));
    let mut csv = String::from("eps,fraction\n");
    for (r, f) in eps.iter().zip(&fractions) {
        let _ = writeln!(csv, "{r},{f:e}");
    }
    out.set("eps", &eps);
    out.set("fractions", &fractions);
    out.table("fractions", csv);
    Ok(out)
}
