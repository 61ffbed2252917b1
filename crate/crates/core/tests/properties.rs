use fwdcalc::hedging::{solve, Claim, HedgeSolution, PdeParams, Volatility};
use fwdcalc::paths::{gen_brownian, gen_price};
use fwdcalc::portfolio::{
    argmax, log_price_transform, log_utility_scan, wealth_from_proportions, ScanSetup,
};
use fwdcalc::regularize::{covariation, forward_integral, quadratic_variation};
use fwdcalc::{stats, PriceModel, RegParams, SamplePath, TimeGrid};
use proptest::prelude::*;

fn path_strategy() -> impl Strategy<Value = SamplePath> {
    (2usize..40).prop_flat_map(|n| {
        prop::collection::vec(-10.0..10.0f64, n + 1)
            .prop_map(move |v| SamplePath::new(TimeGrid::new(n).unwrap(), v).unwrap())
    })
}

fn pair_strategy() -> impl Strategy<Value = (SamplePath, SamplePath)> {
    (2usize..40).prop_flat_map(|n| {
        let g = TimeGrid::new(n).unwrap();
        (
            prop::collection::vec(-10.0..10.0f64, n + 1),
            prop::collection::vec(-10.0..10.0f64, n + 1),
        )
            .prop_map(move |(a, b)| {
                (
                    SamplePath::new(g, a).unwrap(),
                    SamplePath::new(g, b).unwrap(),
                )
            })
    })
}

fn small_pde() -> PdeParams {
    PdeParams::new(Volatility::Constant(0.2), 1.0).with_nodes(201, 100)
}

fn european_values(claim: &Claim, params: &PdeParams) -> Vec<Vec<f64>> {
    match solve(claim, params).unwrap() {
        HedgeSolution::European(s) => (0..s.n_levels()).map(|k| s.values(k).to_vec()).collect(),
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_integral_plus_half_qv_is_half_square(x in path_strategy()) {
        let p = RegParams::default();
        let fi = forward_integral(&x, &x, p).unwrap();
        let qv = quadratic_variation(&x, p).unwrap();
        let x0 = x.first();
        let n = x.grid().n_steps() as f64;
        for i in 0..x.grid().len() {
            let xi = x.value(i);
            let r = fi.value(i) + 0.5 * qv.value(i) - 0.5 * (xi * xi - x0 * x0);
            prop_assert!(r.abs() <= 8.0 * n * f64::EPSILON * 100.0);
        }
    }

    #[test]
    fn covariation_is_symmetric_bitwise((x, y) in pair_strategy(), m in 1usize..4) {
        let p = RegParams::new(m.min(x.grid().n_steps()));
        prop_assert_eq!(covariation(&x, &y, p).unwrap(), covariation(&y, &x, p).unwrap());
    }

    #[test]
    fn forward_integral_is_bilinear((y1, y2) in pair_strategy(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let p = RegParams::default();
        let x = y1.map(|v| v.sin()).unwrap();
        let y = SamplePath::new(y1.grid(), y1.values().iter().zip(y2.values()).map(|(u, v)| a * u + b * v).collect()).unwrap();
        let lhs = forward_integral(&y, &x, p).unwrap();
        let i1 = forward_integral(&y1, &x, p).unwrap();
        let i2 = forward_integral(&y2, &x, p).unwrap();
        for i in 0..x.grid().len() {
            let rhs = a * i1.value(i) + b * i2.value(i);
            prop_assert!((lhs.value(i) - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn localization_is_exact(x in path_strategy(), cut in 0usize..40) {
        let g = x.grid();
        let k = cut.min(g.n_steps());
        let y = x.map(|v| v.cos()).unwrap();
        let stopped = SamplePath::new(g, y.values().iter().enumerate().map(|(i, &v)| if i < k { v } else { 0.0 }).collect()).unwrap();
        let full = forward_integral(&y, &x, RegParams::default()).unwrap();
        let loc = forward_integral(&stopped, &x, RegParams::default()).unwrap();
        prop_assert_eq!(loc.value(k), full.value(k));
    }

    #[test]
    fn proportion_wealth_is_positive(theta in -10.0..10.0f64, seed in 0u64..1000) {
        let grid = TimeGrid::new(64).unwrap();
        let m = PriceModel::Gbm { sigma: 0.4, mu: 0.1, s0: 1.0 };
        let s = gen_price(m, grid, seed, 1).unwrap().paths()[0].clone();
        let a = log_price_transform(&s, RegParams::default()).unwrap();
        let v = SamplePath::from_fn(grid, |t| 0.03 * t).unwrap();
        let th = SamplePath::constant(grid, theta).unwrap();
        let x = wealth_from_proportions(2.0, &th, &a, &v, RegParams::default()).unwrap();
        prop_assert!(x.values().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn argmax_survives_positive_affine_rescaling(
        values in prop::collection::vec(-100.0..100.0f64, 1..30),
        c in 0.01..100.0f64,
        d in -50.0..50.0f64,
    ) {
        let scaled: Vec<f64> = values.iter().map(|v| c * v + d).collect();
        prop_assert_eq!(argmax(&values), argmax(&scaled));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pde_comparison_principle(k1 in 0.7..1.3f64, k2 in 0.7..1.3f64, c in 0.0..0.2f64) {
        let p = small_pde();
        let low = european_values(&Claim::call(k1), &p);
        let high = european_values(
            &Claim::european("dominating", move |y| (y - k1).max(0.0) + 0.5 * (y - k2).max(0.0) + c),
            &p,
        );
        for (l, h) in low.iter().zip(&high) {
            for (a, b) in l.iter().zip(h) {
                prop_assert!(*a <= *b + 1e-10);
            }
        }
    }

    #[test]
    fn pde_is_linear_in_the_payoff(k1 in 0.7..1.3f64, k2 in 0.7..1.3f64, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let p = small_pde();
        let v1 = european_values(&Claim::call(k1), &p);
        let v2 = european_values(&Claim::european("put", move |y| (k2 - y).max(0.0)), &p);
        let mix = european_values(
            &Claim::european("mix", move |y| a * (y - k1).max(0.0) + b * (k2 - y).max(0.0)),
            &p,
        );
        for k in 0..mix.len() {
            for j in 0..mix[k].len() {
                let rhs = a * v1[k][j] + b * v2[k][j];
                prop_assert!((mix[k][j] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }

    #[test]
    fn european_solution_ignores_drift_and_perturbation(mu in -0.2..0.3f64, eta in 0.0..1.0f64) {
        let models = [
            PriceModel::Gbm { sigma: 0.2, mu, s0: 1.0 },
            PriceModel::MixedGbm { sigma: 0.2, mu, s0: 1.0, eta, hurst: 0.75 },
        ];
        let solutions: Vec<_> = models
            .iter()
            .map(|m| {
                let p = PdeParams::new(Volatility::Constant(m.sigma()), m.s0()).with_nodes(201, 100);
                european_values(&Claim::call(1.0), &p)
            })
            .collect();
        prop_assert_eq!(&solutions[0], &solutions[1]);
    }

    #[test]
    fn share_and_proportion_wealth_agree(theta in 0.0..2.0f64, seed in 0u64..1000) {
        let errs: Vec<f64> = [256, 4096]
            .iter()
            .map(|&n| {
                let grid = TimeGrid::new(n).unwrap();
                let m = PriceModel::Gbm { sigma: 0.2, mu: 0.05, s0: 1.0 };
                let s = gen_price(m, grid, seed, 1).unwrap().paths()[0].clone();
                let a = log_price_transform(&s, RegParams::default()).unwrap();
                let v = SamplePath::constant(grid, 0.0).unwrap();
                let th = SamplePath::constant(grid, theta).unwrap();
                let x = wealth_from_proportions(1.0, &th, &a, &v, RegParams::default()).unwrap();
                // Shares h = theta X / S, wealth rebuilt step by step.
                let sv = s.values();
                let mut w = 1.0;
                let mut worst = 0.0_f64;
                for i in 0..n {
                    w += theta * w / sv[i] * (sv[i + 1] - sv[i]);
                    worst = worst.max((w - x.value(i + 1)).abs());
                }
                worst
            })
            .collect();
        prop_assert!(errs[1] <= errs[0] + 1e-12, "{:?}", errs);
        prop_assert!(errs[1] <= 0.01 * theta.powi(3) + 1e-12, "{:?}", errs);
        prop_assert!(errs[0] <= 0.05 * theta.powi(3) + 1e-12, "{:?}", errs);
    }
}

#[test]
fn utility_curve_is_concave() {
    let setup = ScanSetup {
        model: PriceModel::Gbm {
            sigma: 0.2,
            mu: 0.1,
            s0: 1.0,
        },
        rate: 0.02,
        grid: TimeGrid::new(128).unwrap(),
        seed: 29,
        n_paths: 5_000,
    };
    let thetas: Vec<f64> = (0..=16).map(|k| 0.25 * k as f64).collect();
    let scan = log_utility_scan(&setup, &thetas, RegParams::default()).unwrap();
    let [_, _, c2] = stats::quadratic_fit(&scan.thetas, &scan.estimates);
    assert!(c2 < 0.0, "{c2}");
    assert!((c2 + 0.02).abs() < 0.004, "{c2}");
}

#[test]
fn ensembles_do_not_depend_on_worker_count() {
    let grid = TimeGrid::new(128).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(7)
        .build()
        .unwrap();
    let a = one.install(|| gen_brownian(grid, 3, 50).unwrap());
    let b = many.install(|| gen_brownian(grid, 3, 50).unwrap());
    assert_eq!(a, b);
}
