use adaptsig_bench::{intersection, skewed_demand};
use adaptsig_core::nsga2::OptimizerParams;
use adaptsig_core::simulator::{simulate, Adaptive, FixedTime, SimOptions};
use adaptsig_core::SelectionPolicy;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_fixed(c: &mut Criterion) {
    let cfg = intersection(5);
    let demand = skewed_demand(5);
    let opts = SimOptions::default();
    c.bench_function("simulate_fixed_3600s", |b| {
        b.iter(|| {
            let mut ctl = FixedTime::new(&[30; 5], &cfg);
            simulate(&cfg, &demand, &mut ctl, 3600, &opts, black_box(1)).unwrap()
        })
    });
}

fn bench_adaptive(c: &mut Criterion) {
    let cfg = intersection(5);
    let demand = skewed_demand(5);
    let opts = SimOptions::default();
    let params = OptimizerParams {
        population_size: 60,
        generations: 100,
        ..Default::default()
    };
    let mut group = c.benchmark_group("simulate_adaptive");
    group.sample_size(10);
    group.bench_function("3600s", |b| {
        b.iter(|| {
            let mut ctl = Adaptive::new(cfg.clone(), params.clone(), SelectionPolicy::Knee, 0);
            simulate(&cfg, &demand, &mut ctl, 3600, &opts, black_box(1)).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_fixed, bench_adaptive);
criterion_main!(benches);
