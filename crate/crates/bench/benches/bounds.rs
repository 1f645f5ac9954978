use criterion::{criterion_group, criterion_main, Criterion};
use projlstd_bench::ring_bound_inputs;
use projlstd_core::bounds::{n0, total_bound_unchecked, DEFAULT_N0_CAP};
use std::hint::black_box;

fn bound_evaluation(c: &mut Criterion) {
    let inputs = ring_bound_inputs(10_000);
    c.bench_function("total_bound_report", |b| {
        b.iter(|| total_bound_unchecked(black_box(&inputs), 0.05).unwrap())
    });
    c.bench_function("n0_search_to_cap", |b| b.iter(|| n0(black_box(&inputs), DEFAULT_N0_CAP).unwrap()));
}

criterion_group!(benches, bound_evaluation);
criterion_main!(benches);
