//! Dense complex-matrix kernel.
//!
//! Thin layer over `nalgebra` that fixes the numerical conventions every
//! decision procedure in the crate relies on: relative rank cuts, descending
//! eigenvalue order, tolerant PSD tests and principal-angle subspace
//! comparison.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{structure, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Numerical thresholds shared by all procedures.
///
/// * `eig_cut`: relative cut below which eigen/singular values count as zero.
/// * `mat_eq`: Frobenius threshold for matrix (and Choi) equality.
/// * `prob_eq`: threshold for probabilities equal to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub eig_cut: f64,
    pub mat_eq: f64,
    pub prob_eq: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig_cut: 1e-9,
            mat_eq: 1e-8,
            prob_eq: 1e-7,
        }
    }
}

impl Tolerances {
    /// Ratio `prob_eq / mat_eq` used by [`Tolerances::from_global`].
    pub const PROB_TO_MAT_RATIO: f64 = 10.0;

    pub fn new(eig_cut: f64, mat_eq: f64, prob_eq: f64) -> Result<Self> {
        let t = Self {
            eig_cut,
            mat_eq,
            prob_eq,
        };
        t.check()?;
        Ok(t)
    }

    /// Single-knob tolerances: `mat_eq = tol`, `prob_eq = 10 * tol`,
    /// `eig_cut` left at its default.
    pub fn from_global(tol: f64) -> Result<Self> {
        Self::new(
            Self::default().eig_cut,
            tol,
            tol * Self::PROB_TO_MAT_RATIO,
        )
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("eig_cut", self.eig_cut),
            ("mat_eq", self.mat_eq),
            ("prob_eq", self.prob_eq),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerances(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.prob_eq >= 0.5 {
            return Err(Error::InvalidTolerances(format!(
                "prob_eq must be below 0.5, got {}",
                self.prob_eq
            )));
        }
        Ok(())
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `|v><v|`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Basis vector `e_i` in dimension `d`.
pub fn basis_vector(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = ONE;
    v
}

/// `|i><i|` in dimension `d`.
pub fn basis_projector(d: usize, i: usize) -> CMatrix {
    outer(&basis_vector(d, i))
}

/// Real part of the trace.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

pub fn is_square(m: &CMatrix) -> bool {
    m.nrows() == m.ncols()
}

/// Hermiticity within `mat_eq`, relative to the matrix scale.
pub fn is_hermitian(m: &CMatrix, tol: &Tolerances) -> bool {
    is_square(m) && (m - m.adjoint()).norm() <= tol.mat_eq * m.norm().max(1.0)
}

fn check_hermitian(m: &CMatrix, tol: &Tolerances) -> Result<()> {
    if !is_square(m) {
        return structure(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        ));
    }
    if !is_finite(m) {
        return structure("matrix has non-finite entries");
    }
    if !is_hermitian(m, tol) {
        return structure("matrix is not Hermitian");
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn pairs(&self) -> impl Iterator<Item = (f64, CVector)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, self.vectors.column(i).into_owned()))
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue, i.e. the spectral norm.
    pub fn spectral_norm(&self) -> f64 {
        self.max().abs().max(self.min().abs())
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| real(v)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with(m, &Tolerances::default())
}

pub fn hermitian_eig_with(m: &CMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    check_hermitian(m, tol)?;
    Ok(hermitian_eig_unchecked(m))
}

/// Symmetrises the input and decomposes it without validation.
pub(crate) fn hermitian_eig_unchecked(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let h = (m + m.adjoint()) * real(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// Singular triplets `(sigma, U, V^dagger)`, sorted descending.
///
/// Computed from the Hermitian eigendecomposition of `[[0, A], [A^dagger, 0]]`,
/// whose eigenvalues are `±sigma_i` with eigenvectors `(u_i, ±v_i) / sqrt(2)`.
/// nalgebra's complex bidiagonal SVD loses accuracy on some rank-deficient
/// inputs; its Hermitian eigensolver does not.
fn svd_sorted(m: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return (vec![], CMatrix::zeros(r, 0), CMatrix::zeros(0, c));
    }
    let mut jw = CMatrix::zeros(r + c, r + c);
    jw.view_mut((0, r), (r, c)).copy_from(m);
    jw.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let eig = hermitian_eig_unchecked(&jw);
    let scale = real(std::f64::consts::SQRT_2);
    let mut u = CMatrix::zeros(r, k);
    let mut v_t = CMatrix::zeros(k, c);
    let mut sv = Vec::with_capacity(k);
    for i in 0..k {
        sv.push(eig.values[i].max(0.0));
        let w = eig.vectors.column(i);
        u.set_column(i, &(w.rows(0, r) * scale));
        v_t.set_row(i, &(w.rows(r, c) * scale).adjoint());
    }
    (sv, u, v_t)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd_sorted(m).0
}

/// Number of values above `cut * max`; zero when the maximum is zero.
pub fn numerical_rank(sorted_desc: &[f64], cut: f64) -> usize {
    match sorted_desc.first() {
        Some(&top) if top > 0.0 => sorted_desc.iter().filter(|&&s| s > cut * top).count(),
        _ => 0,
    }
}

/// Moore-Penrose pseudoinverse with the relative cut `eig_cut * sigma_max`.
pub fn pseudoinverse(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    if !is_finite(m) {
        return structure("matrix has non-finite entries");
    }
    let (sv, u, v_t) = svd_sorted(m);
    let rank = numerical_rank(&sv, tol.eig_cut);
    let mut pinv = CMatrix::zeros(m.ncols(), m.nrows());
    for i in 0..rank {
        let vi = v_t.row(i).adjoint();
        let ui = u.column(i).adjoint();
        pinv += (vi * ui) * real(1.0 / sv[i]);
    }
    Ok(pinv)
}

/// True iff the smallest eigenvalue is at least `-eig_cut * max(1, ||m||_2)`.
pub fn is_psd(m: &CMatrix, tol: &Tolerances) -> Result<bool> {
    let eig = hermitian_eig_with(m, tol)?;
    Ok(psd_from_eig(&eig, tol))
}

pub(crate) fn psd_from_eig(eig: &HermitianEigen, tol: &Tolerances) -> bool {
    eig.min() >= -tol.eig_cut * eig.spectral_norm().max(1.0)
}

/// A subspace of `C^ambient_dim` given by an orthonormal basis (columns).
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: CMatrix,
}

impl Subspace {
    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: CMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: identity(ambient_dim),
        }
    }

    /// Orthonormalises the given columns (rank decided at `eig_cut`).
    pub fn span(columns: &CMatrix, tol: &Tolerances) -> Result<Self> {
        range_subspace(columns, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &CVector) -> f64 {
        (v - &self.basis * (self.basis.adjoint() * v)).norm()
    }

    fn contained_in(&self, other: &Subspace, tol: &Tolerances) -> bool {
        (0..self.dim()).all(|i| other.residual(&self.basis.column(i).into_owned()) <= tol.mat_eq)
    }
}

/// Column space of `m`, dimension equal to the numerical rank at
/// `eig_cut * sigma_max`.
pub fn range_subspace(m: &CMatrix, tol: &Tolerances) -> Result<Subspace> {
    if !is_finite(m) {
        return structure("matrix has non-finite entries");
    }
    let (sv, u, _) = svd_sorted(m);
    let rank = numerical_rank(&sv, tol.eig_cut);
    Ok(Subspace {
        ambient_dim: m.nrows(),
        basis: u.columns(0, rank).into_owned(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceRelation {
    Equal,
    AInsideB,
    BInsideA,
    Overlapping,
    Orthogonal,
}

impl SubspaceRelation {
    /// The relation seen with the arguments swapped.
    pub fn swapped(self) -> Self {
        match self {
            Self::AInsideB => Self::BInsideA,
            Self::BInsideA => Self::AInsideB,
            other => other,
        }
    }
}

/// Compares two subspaces through the projections of each basis onto the
/// other. Containment is tested first, so the empty subspace is inside
/// every subspace.
pub fn subspace_relation(a: &Subspace, b: &Subspace, tol: &Tolerances) -> Result<SubspaceRelation> {
    if a.ambient_dim != b.ambient_dim {
        return structure(format!(
            "ambient dimensions differ: {} vs {}",
            a.ambient_dim, b.ambient_dim
        ));
    }
    let a_in_b = a.contained_in(b, tol);
    let b_in_a = b.contained_in(a, tol);
    Ok(match (a_in_b, b_in_a) {
        (true, true) => SubspaceRelation::Equal,
        (true, false) => SubspaceRelation::AInsideB,
        (false, true) => SubspaceRelation::BInsideA,
        (false, false) => {
            let cross = a.basis.adjoint() * &b.basis;
            if cross.iter().all(|z| z.norm() <= tol.mat_eq) {
                SubspaceRelation::Orthogonal
            } else {
                SubspaceRelation::Overlapping
            }
        }
    })
}

/// Trace over every tensor factor except the first.
pub fn reduce_to_first(m: &CMatrix, dims: &[usize]) -> CMatrix {
    let first = dims.first().copied().unwrap_or(1);
    let rest: usize = dims.iter().skip(1).product();
    let mut out = CMatrix::zeros(first, first);
    for i in 0..first {
        for j in 0..first {
            let mut acc = ZERO;
            for r in 0..rest {
                acc += m[(i * rest + r, j * rest + r)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}
