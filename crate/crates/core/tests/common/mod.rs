#![allow(dead_code)]

use qcompl_core::instruments::from_pvm;
use qcompl_core::linalg::{c, real, CMatrix};
use qcompl_core::randgen::{haar_unitary, random_projectors, random_rank_profile};
use qcompl_core::{ElementaryProperty, Instrument, QuantumOperation, SeededGenerator, Tolerances};

pub fn tol() -> Tolerances {
    Tolerances::default()
}

pub fn random_hermitian(d: usize, gen: &mut SeededGenerator) -> CMatrix {
    let g = gen.gaussian_matrix(d, d);
    (&g + g.adjoint()) * real(0.5)
}

/// Random PVM with a random rank profile; returns the projectors too.
pub fn random_property(d: usize, gen: &mut SeededGenerator) -> (ElementaryProperty, Vec<CMatrix>) {
    let ranks = random_rank_profile(d, gen);
    let projs = random_projectors(d, &ranks, gen).unwrap();
    let p = from_pvm(
        projs.iter().cloned().enumerate().map(|(i, p)| (format!("x{i}"), p)),
        &tol(),
    )
    .unwrap();
    (p, projs)
}

/// The instrument `{Π_x}` with a random global phase on every Kraus matrix,
/// some outcomes written as two proportional Kraus matrices.
pub fn phased_instrument(projs: &[CMatrix], gen: &mut SeededGenerator) -> Instrument {
    Instrument::new(projs.iter().enumerate().map(|(i, p)| {
        let d = p.nrows();
        let ph = gen.phase();
        let kraus = if gen.chance(0.3) {
            let a = gen.uniform() * 0.8 + 0.1;
            vec![p * (ph * real(a.sqrt())), p * (gen.phase() * real((1.0 - a).sqrt()))]
        } else {
            vec![p * ph]
        };
        (format!("x{i}"), QuantumOperation::new(d, d, kraus).unwrap())
    }))
    .unwrap()
}

pub fn random_unitary_op(d: usize, gen: &mut SeededGenerator) -> QuantumOperation {
    QuantumOperation::single(haar_unitary(d, gen).unwrap()).unwrap()
}

pub fn phase(theta: f64) -> qcompl_core::C64 {
    c(theta.cos(), theta.sin())
}
