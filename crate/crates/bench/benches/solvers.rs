use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng as _;

use driftsets_core::baselines::{fit_wcp, WcpConfig};
use driftsets_core::drp::{fit_split2, DrpConfig, Variant};
use driftsets_core::influence::{solve_quantile, ScoredUnit};
use driftsets_core::nuisance::{fit_cond_cdf, ConstRatio, DEFAULT_GRID_SIZE};
use driftsets_core::sim::{gen_kang_schafer, ks_covariates};
use driftsets_core::{ScoreSpec, Seed};

fn scored_units(n: usize) -> (Vec<ScoredUnit>, Vec<(Vec<f64>, f64)>) {
    let mut rng = Seed(1).rng();
    let mut units = Vec::with_capacity(n);
    let mut labeled = Vec::new();
    for _ in 0..n {
        let x = vec![rng.random_range(-1.0..1.0)];
        if rng.random::<f64>() < 0.5 {
            let r = (x[0] + rng.random_range(-1.0f64..1.0)).abs();
            labeled.push((x.clone(), r));
            units.push(ScoredUnit::labeled(x, r));
        } else {
            units.push(ScoredUnit::target(x));
        }
    }
    (units, labeled)
}

fn quantile_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_quantile");
    for n in [500, 2000, 8000] {
        let (units, labeled) = scored_units(n);
        let m = fit_cond_cdf(labeled.iter().map(|(x, r)| (x.as_slice(), *r)), DEFAULT_GRID_SIZE).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &units, |b, units| {
            b.iter(|| solve_quantile(black_box(units), &ConstRatio(1.0), &m, 0.1).unwrap())
        });
    }
    group.finish();
}

fn cond_cdf_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_cond_cdf");
    for n in [500, 2000] {
        let (_, labeled) = scored_units(2 * n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &labeled, |b, labeled| {
            b.iter(|| fit_cond_cdf(labeled.iter().map(|(x, r)| (x.as_slice(), *r)), DEFAULT_GRID_SIZE).unwrap())
        });
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let sim = gen_kang_schafer(2000, &mut Seed(2).rng()).unwrap();
    let cfg = DrpConfig::new(0.1, Variant::Split2, ScoreSpec::ridge(1.0));
    c.bench_function("fit_split2/n=2000", |b| b.iter(|| fit_split2(&sim.observed, &cfg, &mut Seed(3).rng()).unwrap()));

    let wcp = fit_wcp(&sim.observed, &WcpConfig::new(0.1, 10.0), &mut Seed(4).rng()).unwrap();
    let mut rng = Seed(5).rng();
    let xs: Vec<Vec<f64>> = (0..1000).map(|_| ks_covariates(&mut rng)).collect();
    c.bench_function("wcp_predict/1000", |b| b.iter(|| xs.iter().map(|x| wcp.predict(x).width()).sum::<f64>()));
}

criterion_group!(benches, quantile_solver, cond_cdf_fit, end_to_end);
criterion_main!(benches);
