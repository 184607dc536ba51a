//! Fixtures and benchmark definitions shared by the `kernels` bench target.

use criterion::{BenchmarkId, Criterion};
use qcompl_core::classical::classical_theorem_harness;
use qcompl_core::compatibility::{self_witness, verifier_inclusion_harness, verify_witness};
use qcompl_core::complementarity::classify_relation;
use qcompl_core::instruments::to_elementary;
use qcompl_core::quantum_ops::choi;
use qcompl_core::randgen::{random_instrument, random_pvm, random_rank_profile};
use qcompl_core::{ElementaryProperty, Instrument, SeededGenerator, Tolerances};

pub fn random_pair(d: usize, seed: u64) -> (ElementaryProperty, ElementaryProperty) {
    let mut gen = SeededGenerator::new(seed);
    let ranks = random_rank_profile(d, &mut gen);
    let p = random_pvm(d, &ranks, &mut gen).expect("valid rank profile");
    let ranks = random_rank_profile(d, &mut gen);
    let q = random_pvm(d, &ranks, &mut gen).expect("valid rank profile");
    (p, q)
}

pub fn random_dense_instrument(d: usize, seed: u64) -> Instrument {
    let mut gen = SeededGenerator::new(seed);
    random_instrument(d, d, &[2, 1, 1], &mut gen).expect("isometry fits")
}

pub fn benchmarks(c: &mut Criterion) {
    let tol = Tolerances::default();

    let mut group = c.benchmark_group("choi");
    for d in [2, 4, 8] {
        let ins = random_dense_instrument(d, 1);
        let op = ins.operation("x0").expect("outcome x0");
        group.bench_with_input(BenchmarkId::from_parameter(d), op, |b, op| b.iter(|| choi(op)));
    }
    group.finish();

    let mut group = c.benchmark_group("to_elementary");
    for d in [2, 4, 8] {
        let (p, _) = random_pair(d, 2);
        let ins = p.instrument().clone();
        group.bench_with_input(BenchmarkId::from_parameter(d), &ins, |b, ins| {
            b.iter(|| to_elementary(ins, &tol).expect("elementary"))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("classify_relation");
    for d in [2, 3, 4] {
        let pair = random_pair(d, 3);
        group.bench_with_input(BenchmarkId::from_parameter(d), &pair, |b, (p, q)| {
            b.iter(|| classify_relation(p, q, &tol).expect("same dimension"))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("verify_witness");
    for d in [2, 3, 4] {
        let t = random_dense_instrument(d, 4);
        let w = self_witness(&t).expect("self witness");
        group.bench_with_input(BenchmarkId::from_parameter(d), &(t, w), |b, (t, w)| {
            b.iter(|| verify_witness(t, t, w, &tol).expect("consistent shapes"))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("harness");
    group.sample_size(10);
    group.bench_function("quantum_d2_50", |b| {
        b.iter(|| verifier_inclusion_harness(5, 2, 50, &tol).expect("supported dimension"))
    });
    group.bench_function("classical_n3_50", |b| {
        b.iter(|| classical_theorem_harness(5, 3, 50, &tol).expect("supported size"))
    });
    group.finish();
}
