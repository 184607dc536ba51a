//! Seeded random generators for property suites and harnesses.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{structure, Result};
use crate::instruments::{from_pvm, ElementaryProperty, Instrument};
use crate::linalg::{c, real, trace_re, CMatrix, CVector, Subspace, Tolerances};
use crate::quantum_ops::{DensityState, QuantumOperation};

/// Identifier of the generator stream, echoed in reports.
pub const GENERATOR_ALGORITHM: &str = "chacha8+splitmix64";

/// A seeded stream. Child generators are derived by index, so per-trial
/// streams do not depend on evaluation order.
#[derive(Debug, Clone)]
pub struct SeededGenerator {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        GENERATOR_ALGORITHM
    }

    pub fn child(&self, index: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(1))))
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// Complex standard Gaussian with unit variance split over both parts.
    pub fn complex_gaussian(&mut self) -> crate::linalg::C64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        c(re, im) * real(std::f64::consts::FRAC_1_SQRT_2)
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| self.complex_gaussian())
    }

    pub fn phase(&mut self) -> crate::linalg::C64 {
        let t = self.uniform() * std::f64::consts::TAU;
        c(t.cos(), t.sin())
    }
}

/// Haar-random unitary via QR of a Gaussian matrix with phase correction.
pub fn haar_unitary(d: usize, gen: &mut SeededGenerator) -> Result<CMatrix> {
    if d == 0 {
        return structure("unitary dimension must be positive");
    }
    let g = gen.gaussian_matrix(d, d);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let ph = if n > 0.0 { rjj / real(n) } else { real(1.0) };
        let mut col = u.column_mut(j);
        col *= ph;
    }
    Ok(u)
}

/// First `cols` columns of a Haar unitary of size `rows`.
pub fn haar_isometry(rows: usize, cols: usize, gen: &mut SeededGenerator) -> Result<CMatrix> {
    if cols > rows {
        return structure(format!("no {rows}x{cols} isometry exists"));
    }
    Ok(haar_unitary(rows, gen)?.columns(0, cols).into_owned())
}

/// Random composition of `d` into positive parts.
pub fn random_rank_profile(d: usize, gen: &mut SeededGenerator) -> Vec<usize> {
    let mut ranks = Vec::new();
    let mut left = d;
    while left > 0 {
        let r = gen.range(1, left);
        ranks.push(r);
        left -= r;
    }
    ranks
}

/// Haar-rotated coordinate blocks of the given ranks, labelled `x0, x1, ...`.
pub fn random_pvm(d: usize, ranks: &[usize], gen: &mut SeededGenerator) -> Result<ElementaryProperty> {
    let projectors = random_projectors(d, ranks, gen)?;
    from_pvm(
        projectors
            .into_iter()
            .enumerate()
            .map(|(i, p)| (format!("x{i}"), p)),
        &Tolerances::default(),
    )
}

pub fn random_projectors(d: usize, ranks: &[usize], gen: &mut SeededGenerator) -> Result<Vec<CMatrix>> {
    if ranks.is_empty() || ranks.contains(&0) || ranks.iter().sum::<usize>() != d {
        return structure(format!("ranks {ranks:?} do not partition dimension {d}"));
    }
    let u = haar_unitary(d, gen)?;
    let mut start = 0;
    Ok(ranks
        .iter()
        .map(|&r| {
            let block = u.columns(start, r);
            start += r;
            &block * block.adjoint()
        })
        .collect())
}

/// `G G^dagger / Tr` for a Gaussian `d x rank` matrix `G`.
pub fn random_density(d: usize, rank: usize, gen: &mut SeededGenerator) -> Result<DensityState> {
    if rank == 0 || rank > d {
        return structure(format!("rank {rank} outside 1..={d}"));
    }
    let g = gen.gaussian_matrix(d, rank);
    let m = &g * g.adjoint();
    let tr = trace_re(&m);
    DensityState::new(vec![d], m * real(1.0 / tr), &Tolerances::default())
}

/// Random state whose support lies inside `subspace`, of the given rank.
pub fn random_density_in(subspace: &Subspace, rank: usize, gen: &mut SeededGenerator) -> Result<DensityState> {
    let k = subspace.dim();
    let inner = random_density(k, rank, gen)?;
    let b = subspace.basis();
    let m = b * inner.matrix() * b.adjoint();
    DensityState::new(vec![subspace.ambient_dim()], m, &Tolerances::default())
}

pub fn random_unit_vector(d: usize, gen: &mut SeededGenerator) -> CVector {
    let v = CVector::from_fn(d, |_, _| gen.complex_gaussian());
    let n = v.norm();
    v / real(n)
}

/// Random instrument: the stacked Kraus matrices form a Haar isometry.
/// `kraus_counts[i]` Kraus matrices go to outcome `x{i}`.
pub fn random_instrument(
    dim_in: usize,
    dim_out: usize,
    kraus_counts: &[usize],
    gen: &mut SeededGenerator,
) -> Result<Instrument> {
    let total: usize = kraus_counts.iter().sum();
    if kraus_counts.is_empty() || kraus_counts.contains(&0) {
        return structure("every outcome needs at least one Kraus matrix");
    }
    let v = haar_isometry(total * dim_out, dim_in, gen)?;
    let mut block = 0;
    let mut outcomes = Vec::with_capacity(kraus_counts.len());
    for (i, &n) in kraus_counts.iter().enumerate() {
        let kraus = (0..n)
            .map(|j| v.rows((block + j) * dim_out, dim_out).into_owned())
            .collect();
        block += n;
        outcomes.push((format!("x{i}"), QuantumOperation::new(dim_in, dim_out, kraus)?));
    }
    Instrument::new(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{is_repeatable, validate_instrument};
    use crate::linalg::{frobenius_distance, hermitian_eig, identity, numerical_rank};

    #[test]
    fn haar_examples() {
        let mut g = SeededGenerator::new(1);
        let u1 = haar_unitary(1, &mut g).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-12);

        let a = haar_unitary(4, &mut SeededGenerator::new(9)).unwrap();
        let b = haar_unitary(4, &mut SeededGenerator::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(frobenius_distance(&(a.adjoint() * &a), &identity(4)) <= 1e-10);
        assert!(haar_unitary(0, &mut g).is_err());
    }

    #[test]
    fn children_are_deterministic_and_distinct() {
        let g = SeededGenerator::new(5);
        assert_eq!(g.child(3).seed(), g.child(3).seed());
        assert_ne!(g.child(3).seed(), g.child(4).seed());
        assert_ne!(g.child(0).seed(), SeededGenerator::new(6).child(0).seed());
    }

    #[test]
    fn pvm_examples() {
        let tol = Tolerances::default();
        let mut g = SeededGenerator::new(2);
        let p = random_pvm(2, &[1, 1], &mut g).unwrap();
        assert!(is_repeatable(p.instrument(), &tol).unwrap());

        let p = random_pvm(3, &[3], &mut g).unwrap();
        assert!(frobenius_distance(p.projector("x0").unwrap(), &identity(3)) < 1e-10);

        let p = random_pvm(3, &[2, 1], &mut g).unwrap();
        assert_eq!(p.ranks(), vec![2, 1]);
        let prod = p.projector("x0").unwrap() * p.projector("x1").unwrap();
        assert!(prod.norm() < 1e-10);

        assert!(random_pvm(3, &[1, 1], &mut g).is_err());
    }

    #[test]
    fn density_examples() {
        let mut g = SeededGenerator::new(3);
        let pure = random_density(3, 1, &mut g).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-10);
        let full = random_density(2, 2, &mut g).unwrap();
        let eig = hermitian_eig(full.matrix()).unwrap();
        assert_eq!(numerical_rank(&eig.values, 1e-9), 2);
        let a = random_density(3, 2, &mut SeededGenerator::new(11)).unwrap();
        let b = random_density(3, 2, &mut SeededGenerator::new(11)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!(random_density(2, 3, &mut g).is_err());
        assert!(random_density(2, 0, &mut g).is_err());
    }

    #[test]
    fn random_instruments_are_valid() {
        let tol = Tolerances::default();
        let mut g = SeededGenerator::new(4);
        let ins = random_instrument(3, 2, &[1, 2, 1], &mut g).unwrap();
        assert_eq!(ins.len(), 3);
        assert!(validate_instrument(&ins, &tol).valid);
    }

    #[test]
    fn rank_profiles_sum() {
        let mut g = SeededGenerator::new(8);
        for d in 1..6 {
            let r = random_rank_profile(d, &mut g);
            assert_eq!(r.iter().sum::<usize>(), d);
        }
    }
}
