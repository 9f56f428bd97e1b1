use criterion::{criterion_group, criterion_main, Criterion};
use dabound_core::par;
use dabound_core::synth::{make_scenario, ScenarioSpec};
use dabound_core::train::{train, TrainConfig};

fn training(c: &mut Criterion) {
    let mode = if par::is_parallel() { "parallel" } else { "sequential" };
    let mut g = c.benchmark_group(format!("training/{mode}"));
    g.sample_size(10);
    let sc = make_scenario(&ScenarioSpec::paper_default(), 4000, 4000, 0).unwrap();
    let cfg = TrainConfig {
        iterations: 200,
        eval_every: 100,
        ..TrainConfig::default()
    };
    g.bench_function("train_200_iterations", |b| b.iter(|| train(&cfg, &sc.source, &sc.target).unwrap()));
    g.finish();
}

criterion_group!(benches, training);
criterion_main!(benches);
