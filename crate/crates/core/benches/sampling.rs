//! Sequential vs. parallel execution for the sampling-heavy paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gaugecrypt::analysis::{gauge_experiment, ExperimentConfig, SamplerConfig};
use gaugecrypt::problems::ran1;
use gaugecrypt::samplers::{brute_force_min_with, simulated_annealing_with, AnnealParams};
use gaugecrypt::seed::rng_from_seed;
use gaugecrypt::topology::chimera;
use gaugecrypt::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn annealing(c: &mut Criterion) {
    let p = ran1(&chimera(4).unwrap(), &mut rng_from_seed(1));
    let params = AnnealParams { num_reads: 64, sweeps: 200, ..Default::default() };
    let mut group = c.benchmark_group("simulated_annealing_c4");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulated_annealing_with(&p, &params, None, exec).unwrap())
        });
    }
    group.finish();
}

fn brute_force(c: &mut Criterion) {
    let p = ran1(&chimera(2).unwrap(), &mut rng_from_seed(2));
    let sub = {
        // First 18 qubits of C2 keep the enumeration short.
        let mut q = gaugecrypt::IsingProblem::new(18);
        for (a, b, v) in p.couplings().filter(|&(a, b, _)| a < 18 && b < 18) {
            q.set_j(a, b, v).unwrap();
        }
        q
    };
    let mut group = c.benchmark_group("brute_force_n18");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| brute_force_min_with(&sub, exec).unwrap())
        });
    }
    group.finish();
}

fn experiment(c: &mut Criterion) {
    let p = ran1(&chimera(2).unwrap(), &mut rng_from_seed(3));
    let mut group = c.benchmark_group("gauge_experiment_c2");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = ExperimentConfig {
            num_transforms: 4,
            reads: 200,
            sampler: SamplerConfig::Anneal { sweeps: 100, beta_initial: 0.1, beta_final: 3.0 },
            exec,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| gauge_experiment(&p, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, annealing, brute_force, experiment);
criterion_main!(benches);
