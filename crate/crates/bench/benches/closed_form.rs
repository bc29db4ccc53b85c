use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ratetest_core::rate_test::p_value_from_counts;
use ratetest_core::tradeoff::{
    beta_negbinomial, curve_monte_carlo, default_grid, ClosedForm, MonteCarloConfig, NullSwap, Scenario,
};
use std::hint::black_box;

fn p_values(c: &mut Criterion) {
    let mut g = c.benchmark_group("p_value");
    for n in [100u64, 10_000, 1_000_000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| p_value_from_counts(black_box(n / 2 + n / 20), n, 0.5))
        });
    }
    g.finish();
}

fn closed_form_curves(c: &mut Criterion) {
    let grid = default_grid();
    let mut g = c.benchmark_group("closed_form_curve");
    g.sample_size(10);
    for t in [10.0, 100.0, 1000.0] {
        let cf = ClosedForm::new(&Scenario::poisson(1.0, 0.2, t, t), NullSwap::Binomial).unwrap();
        g.bench_with_input(BenchmarkId::new("poisson", t), &cf, |b, cf| b.iter(|| cf.curve(&grid).unwrap()));
    }
    let bc = ClosedForm::new(&Scenario::binom_compound(1.0, 0.5, 10, 0.7, 20.0, 20.0), NullSwap::Binomial).unwrap();
    g.bench_function("binom_compound_t20", |b| b.iter(|| bc.curve(&grid).unwrap()));
    g.bench_function("negbinomial_setup_and_beta_t1000", |b| {
        b.iter(|| beta_negbinomial(2.0, 0.2, 0.05, black_box(1000.0), 1, 1, 0.05).unwrap())
    });
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let grid = default_grid();
    let s = Scenario::poisson(1.0, 0.5, 10.0, 10.0);
    let mut g = c.benchmark_group("monte_carlo_curve");
    g.sample_size(10);
    for workers in [1usize, 0] {
        let mut cfg = MonteCarloConfig::new(100_000, 1);
        cfg.workers = workers;
        g.bench_with_input(BenchmarkId::new("workers", workers), &cfg, |b, cfg| {
            b.iter(|| curve_monte_carlo(&s, &grid, NullSwap::Binomial, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, p_values, closed_form_curves, monte_carlo);
criterion_main!(benches);
