use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fwdcalc::hedging::{solve, Claim, PdeParams, Volatility};
use fwdcalc::paths::{gen_brownian, gen_fbm};
use fwdcalc::regularize::{forward_integral, quadratic_variation};
use fwdcalc::{RegParams, TimeGrid};

fn estimators(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimators");
    for n in [1024, 16384] {
        let grid = TimeGrid::new(n).unwrap();
        let w = gen_brownian(grid, 1, 1).unwrap().paths()[0].clone();
        let y = w.map(f64::sin).unwrap();
        for m in [1, 8] {
            let p = RegParams::new(m);
            g.bench_with_input(
                BenchmarkId::new(format!("forward_integral/m{m}"), n),
                &n,
                |b, _| b.iter(|| forward_integral(black_box(&y), black_box(&w), p).unwrap()),
            );
            g.bench_with_input(
                BenchmarkId::new(format!("quadratic_variation/m{m}"), n),
                &n,
                |b, _| b.iter(|| quadratic_variation(black_box(&w), p).unwrap()),
            );
        }
    }
    g.finish();
}

fn generators(c: &mut Criterion) {
    let mut g = c.benchmark_group("generators");
    g.sample_size(10);
    for n in [256, 1024] {
        let grid = TimeGrid::new(n).unwrap();
        g.bench_with_input(BenchmarkId::new("brownian_100", n), &grid, |b, &grid| {
            b.iter(|| gen_brownian(grid, 3, 100).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("fbm_100", n), &grid, |b, &grid| {
            b.iter(|| gen_fbm(grid, 0.75, 3, 100).unwrap())
        });
    }
    g.finish();
}

fn pde(c: &mut Criterion) {
    let mut g = c.benchmark_group("pde");
    g.sample_size(10);
    for (nodes, steps) in [(301, 250), (1201, 1000)] {
        let params = PdeParams::new(Volatility::Constant(0.2), 1.0).with_nodes(nodes, steps);
        g.bench_with_input(BenchmarkId::new("call", nodes), &params, |b, p| {
            b.iter(|| solve(&Claim::call(1.0), p).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("asian_call", nodes), &params, |b, p| {
            b.iter(|| solve(&Claim::asian_call(1.0), p).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, estimators, generators, pde);
criterion_main!(benches);
