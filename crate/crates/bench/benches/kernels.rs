use criterion::{criterion_group, criterion_main};

criterion_group!(kernels, qcompl_bench::benchmarks);
criterion_main!(kernels);
