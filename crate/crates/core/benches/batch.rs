//! Sequential vs parallel execution of the two batch workloads that dominate a run:
//! repeated optimizer runs and feature computation over a function pool.

use aac_core::cmaes::{self, default_config};
use aac_core::ela::{compute_ela, sample_doe};
use aac_core::problems::make_bbob;
use aac_core::{Execution, ObjectiveFunction};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn pool(d: usize) -> Vec<ObjectiveFunction> {
    (1..=24).map(|fid| make_bbob(fid, d, 0).unwrap()).collect()
}

fn cmaes_batch(c: &mut Criterion) {
    let fs = pool(5);
    let cfg = default_config(5);
    let mut g = c.benchmark_group("cmaes_runs_24x2500");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| exec.map(fs.len(), |i| cmaes::run(&fs[i], &cfg, 2500, i as u64).unwrap().final_best()))
        });
    }
    g.finish();
}

fn ela_batch(c: &mut Criterion) {
    let docs: Vec<_> = pool(5).iter().map(|f| sample_doe(f, 50, 1).unwrap()).collect();
    let mut g = c.benchmark_group("ela_24_functions");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| exec.map_slice(&docs, |d| black_box(compute_ela(d).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, cmaes_batch, ela_batch);
criterion_main!(benches);
