//! Reference values computed here independently of the library and compared with it.

use fwdcalc::hedging::{
    bs_closed_form, forward_start_call, solve, Claim, HedgeSolution, PdeParams, Volatility,
};
use fwdcalc::paths::{gen_price, gen_weak_bm1};
use fwdcalc::portfolio::{
    analytic_log_optimal, log_price_transform, log_utility_scan, wealth_from_proportions, ScanSetup,
};
use fwdcalc::regularize::quadratic_variation;
use fwdcalc::{stats, PriceModel, RegParams, SamplePath, TimeGrid};

/// Composite Simpson rule with `2k` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let n = 2 * k;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Standard normal distribution function as `1/2 + int_0^x pdf`.
fn phi(x: f64) -> f64 {
    let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 + simpson(pdf, 0.0, x, 2000)
}

/// At-the-money call with unit spot and strike, zero rate.
fn atm_call(sigma: f64, maturity: f64) -> f64 {
    let sd = sigma * maturity.sqrt();
    2.0 * phi(0.5 * sd) - 1.0
}

fn gbm(mu: f64) -> PriceModel {
    PriceModel::Gbm {
        sigma: 0.2,
        mu,
        s0: 1.0,
    }
}

#[test]
fn atm_call_reference_value() {
    let reference = atm_call(0.2, 1.0);
    assert!((reference - 0.0797).abs() < 5e-5, "{reference}");
    let lib = bs_closed_form(0.2, 0.0, 1.0, 1.0, 1.0).price;
    assert!((lib - reference).abs() < 1e-12, "{lib} vs {reference}");
}

#[test]
fn pde_call_within_a_tenth_of_a_percent() {
    let reference = atm_call(0.2, 1.0);
    let params = PdeParams::new(Volatility::Constant(0.2), 1.0);
    let x0 = solve(&Claim::call(1.0), &params).unwrap().x0();
    assert!((x0 / reference - 1.0).abs() < 1e-3, "{x0} vs {reference}");
}

#[test]
fn forward_start_reference_value() {
    let reference = atm_call(0.2, 0.5);
    assert!((forward_start_call(0.2, 1.0, 0.5) - reference).abs() < 1e-12);
    let params = PdeParams::new(Volatility::Constant(0.2), 1.0);
    let x0 = solve(&Claim::forward_start_call(0.5), &params)
        .unwrap()
        .x0();
    assert!((x0 / reference - 1.0).abs() < 5e-3, "{x0} vs {reference}");
}

#[test]
fn asian_call_matches_monte_carlo() {
    let params = PdeParams::new(Volatility::Constant(0.2), 1.0);
    let x0 = solve(&Claim::asian_call(1.0), &params).unwrap().x0();
    // 10^5 paths in ten independent batches.
    let grid = TimeGrid::new(256).unwrap();
    let h = grid.step();
    let mut payoffs = Vec::with_capacity(100_000);
    for batch in 0..10 {
        let e = gen_price(gbm(0.0), grid, 7 + batch, 10_000).unwrap();
        for p in e.paths() {
            let v = p.values();
            let integral: f64 = v.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
            payoffs.push((integral - 1.0).max(0.0));
        }
    }
    let mc = stats::mean(&payoffs);
    let se = stats::std_err(&payoffs);
    assert!((x0 - mc).abs() <= 3.0 * se, "pde {x0} mc {mc} se {se}");
}

#[test]
fn asian_identity_claim_is_exact() {
    let params = PdeParams::new(Volatility::Constant(0.2), 1.0);
    let HedgeSolution::Asian(sol) = solve(&Claim::asian("y", 1.0, |y| y), &params).unwrap() else {
        panic!("expected an asian solution")
    };
    let pde = sol.pde();
    for k in 0..pde.n_levels() {
        let t = pde.time(k);
        for (y, v) in pde.nodes().iter().zip(pde.values(k)) {
            assert!((v - (y + 1.0 - t)).abs() < 1e-6);
        }
    }
}

#[test]
fn gbm_terminal_mean() {
    let e = gen_price(gbm(0.1), TimeGrid::new(64).unwrap(), 11, 10_000).unwrap();
    let m = stats::mean(&e.column(64));
    let target = 0.1_f64.exp();
    assert!(m > 0.97 * target && m < 1.03 * target, "{m}");
}

#[test]
fn mixed_gbm_log_qv_near_sigma_squared() {
    let model = PriceModel::MixedGbm {
        sigma: 0.2,
        mu: 0.1,
        s0: 1.0,
        eta: 0.5,
        hurst: 0.75,
    };
    let e = gen_price(model, TimeGrid::new(4096).unwrap(), 5, 200).unwrap();
    let qv: Vec<f64> = e
        .paths()
        .iter()
        .map(|p| {
            quadratic_variation(&p.map(f64::ln).unwrap(), RegParams::default())
                .unwrap()
                .last()
        })
        .collect();
    let m = stats::mean(&qv);
    assert!((0.9 * 0.04..=1.1 * 0.04).contains(&m), "{m}");
}

#[test]
fn weak_bm_terminal_variance() {
    let e = gen_weak_bm1(TimeGrid::new(64).unwrap(), 3, 10_000).unwrap();
    let v = stats::variance(&e.column(64));
    assert!((0.94..=1.06).contains(&v), "{v}");
}

#[test]
fn log_price_transform_regression() {
    let grid = TimeGrid::new(256).unwrap();
    let e = gen_price(gbm(0.1), grid, 13, 10_000).unwrap();
    let mut a1 = Vec::new();
    let mut w1 = Vec::new();
    let mut qv = Vec::new();
    for p in e.paths() {
        let a = log_price_transform(p, RegParams::default()).unwrap();
        a1.push(a.last());
        // Recover W_1 from the closed form of S_1.
        w1.push((p.last().ln() - (0.1 - 0.02)) / 0.2);
        qv.push(
            quadratic_variation(&a, RegParams::default())
                .unwrap()
                .last(),
        );
    }
    let (intercept, slope) = stats::linear_fit(&w1, &a1);
    assert!((0.19..=0.21).contains(&slope), "{slope}");
    assert!((0.09..=0.11).contains(&intercept), "{intercept}");
    let q = stats::mean(&qv);
    assert!((q - 0.04).abs() <= 0.05 * 0.04, "{q}");
}

#[test]
fn constant_proportion_log_wealth_mean() {
    let grid = TimeGrid::new(256).unwrap();
    let e = gen_price(gbm(0.1), grid, 17, 10_000).unwrap();
    let v = SamplePath::from_fn(grid, |t| 0.02 * t).unwrap();
    for theta in [0.5, 1.5, 3.0] {
        let th = SamplePath::constant(grid, theta).unwrap();
        let logs: Vec<f64> = e
            .paths()
            .iter()
            .map(|p| {
                let a = log_price_transform(p, RegParams::default()).unwrap();
                wealth_from_proportions(1.0, &th, &a, &v, RegParams::default())
                    .unwrap()
                    .last()
                    .ln()
            })
            .collect();
        let expected = theta * (0.1 - 0.02) + 0.02 - 0.5 * theta * theta * 0.04;
        let (m, se) = (stats::mean(&logs), stats::std_err(&logs));
        assert!(
            (m - expected).abs() <= 3.0 * se,
            "theta {theta}: {m} vs {expected} (se {se})"
        );
    }
}

#[test]
fn weak_gbm_optimum_differs_from_merton() {
    let model = PriceModel::WeakGbm {
        sigma: 0.2,
        s0: 1.0,
        mu: 0.1,
    };
    let analytic = analytic_log_optimal(&model, 0.02);
    let sq2 = std::f64::consts::SQRT_2;
    let by_hand = (0.1 - 0.02 - 0.04 * (sq2 - 1.0) / 2.0) / (0.04 * (2.0 - sq2));
    assert!((analytic - by_hand).abs() < 1e-12);
    assert!((analytic - 2.0).abs() > 1.0);
    let setup = ScanSetup {
        model,
        rate: 0.02,
        grid: TimeGrid::new(256).unwrap(),
        seed: 19,
        n_paths: 10_000,
    };
    let thetas: Vec<f64> = (0..=24).map(|k| 0.25 * k as f64).collect();
    let scan = log_utility_scan(&setup, &thetas, RegParams::default()).unwrap();
    assert!(!scan.inconclusive);
    assert!(
        (scan.argmax_theta - analytic).abs() <= 0.25,
        "{} vs {analytic}",
        scan.argmax_theta
    );
}

#[test]
fn no_excess_return_puts_optimum_at_zero() {
    let setup = ScanSetup {
        model: gbm(0.02),
        rate: 0.02,
        grid: TimeGrid::new(128).unwrap(),
        seed: 23,
        n_paths: 10_000,
    };
    let thetas: Vec<f64> = (0..=16).map(|k| 0.25 * k as f64).collect();
    let scan = log_utility_scan(&setup, &thetas, RegParams::default()).unwrap();
    assert!(scan.argmax_theta <= 0.25, "{}", scan.argmax_theta);
    assert_eq!(scan.analytic, 0.0);
}
