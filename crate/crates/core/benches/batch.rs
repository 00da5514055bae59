use criterion::{criterion_group, criterion_main, Criterion};
use grip_core::graph::{generate_synthetic, SyntheticKind};
use grip_core::greta::{build_model_program, ModelKind, DEFAULT_DIMS, DEFAULT_SAMPLE_SIZES};
use grip_core::harness::{map_collect, map_collect_seq, sample_targets, target_nodeflows};
use grip_core::timing::{time_nodeflows, ArchConfig};

fn batch(c: &mut Criterion) {
    let g = generate_synthetic(SyntheticKind::PowerLaw, 4000, 32, 1).unwrap();
    let plan = build_model_program(ModelKind::Gcn, &DEFAULT_DIMS, &DEFAULT_SAMPLE_SIZES).unwrap();
    let targets = sample_targets(&g, 64, 3);
    let nfss = target_nodeflows(&plan, &g, &targets, 3).unwrap();
    let cfg = ArchConfig::default();
    let time = |nfs: &Vec<_>| time_nodeflows(&plan, nfs, &cfg).unwrap().total_cycles;

    let mut group = c.benchmark_group("latency_batch_64");
    group.sample_size(20);
    group.bench_function("parallel", |b| b.iter(|| map_collect(&nfss, time)));
    group.bench_function("sequential", |b| b.iter(|| map_collect_seq(&nfss, time)));
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
