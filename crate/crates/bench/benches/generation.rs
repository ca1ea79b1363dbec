use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use prmgen_bench::{config, model};
use prmgen_core::dag::{generate_connected_dag, DagPolicy};
use prmgen_core::ground::{forward_sample, ground};
use prmgen_core::io::{emit_sql, parse_prm, serialize_prm};
use prmgen_core::pipeline::generate;
use prmgen_core::rng::seeded;
use prmgen_core::skeleton::{generate_skeleton, CrpConfig};

fn dags(c: &mut Criterion) {
    let mut group = c.benchmark_group("connected_dag");
    for n in [3usize, 6, 10] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut rng = seeded(1);
            b.iter(|| generate_connected_dag(black_box(n), &DagPolicy::default(), &mut rng).unwrap());
        });
    }
    group.finish();
}

fn skeletons(c: &mut Criterion) {
    let prm = model(4, 7);
    let mut group = c.benchmark_group("skeleton");
    for n_total in [1_000usize, 10_000] {
        group.throughput(Throughput::Elements(n_total as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n_total), &n_total, |b, &n_total| {
            let cfg = CrpConfig { alpha: 1.0, n_total };
            let mut rng = seeded(2);
            b.iter(|| generate_skeleton(&prm.schema, &cfg, &mut rng).unwrap());
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let prm = model(4, 7);
    let sk = generate_skeleton(&prm.schema, &CrpConfig { alpha: 1.0, n_total: 10_000 }, &mut seeded(3)).unwrap();
    let gbn = ground(&prm, &sk).unwrap();
    let mut group = c.benchmark_group("sampling");
    group.throughput(Throughput::Elements(gbn.len() as u64));
    group.bench_function("ground", |b| b.iter(|| ground(black_box(&prm), &sk).unwrap()));
    let mut rng = seeded(4);
    group.bench_function("forward_sample", |b| b.iter(|| forward_sample(&gbn, &mut rng)));
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let cfg = config(4, 2500, 42);
    c.bench_function("pipeline/toy", |b| b.iter(|| generate(black_box(&cfg)).unwrap()));
    let g = generate(&cfg).unwrap();
    let xml = serialize_prm(&g.prm);
    c.bench_function("io/serialize_prm", |b| b.iter(|| serialize_prm(black_box(&g.prm))));
    c.bench_function("io/parse_prm", |b| b.iter(|| parse_prm(black_box(&xml)).unwrap()));
    c.bench_function("io/emit_sql", |b| b.iter(|| emit_sql(&g.prm.schema, black_box(&g.dataset))));
}

criterion_group!(benches, dags, skeletons, sampling, pipeline);
criterion_main!(benches);
