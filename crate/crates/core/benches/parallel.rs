use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use holdclass::bounds::enumerate_classes_with;
use holdclass::census::{census_sweep, CensusSpec};
use holdclass::experiment::{run_experiment, ExperimentConfig, GraphSpec};
use holdclass::graph::generate_ws;
use holdclass::{Estimator, Execution, Method, Model};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn enumeration(c: &mut Criterion) {
    let g = generate_ws(16, 2, 0.3, 1).unwrap();
    let mut group = c.benchmark_group("enumerate_classes_n16");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| enumerate_classes_with(&g, Model::Reversible, 20, exec).unwrap())
        });
    }
    group.finish();
}

fn census(c: &mut Criterion) {
    let spec = CensusSpec {
        n_values: (6..=10).collect(),
        graphs_per_n: 8,
        ..CensusSpec::default()
    };
    let mut group = c.benchmark_group("census_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| census_sweep(&spec, exec).unwrap())
        });
    }
    group.finish();
}

fn experiment(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        model: Model::Contact,
        graph: GraphSpec::Er { n: 30, p: None, connected: true },
        replications: 8,
        lengths: vec![2_000, 20_000],
        theta_low: 0.0,
        theta_high: 3.0,
        estimator: Estimator::Mle,
        methods: Method::ALL.to_vec(),
        seed: 1,
        workers: 0,
    };
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_experiment(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, census, experiment);
criterion_main!(benches);
