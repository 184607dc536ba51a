//! Quantum operations in Kraus form and density states.

use crate::error::{structure, Error, Result};
use crate::linalg::{
    frobenius_distance, hermitian_eig_unchecked, identity, is_finite, is_hermitian, kron,
    numerical_rank, psd_from_eig, real, reduce_to_first, trace_re, CMatrix, CVector, Tolerances,
};

/// A completely positive map `rho -> sum_k K rho K^dagger`.
///
/// The zero map is represented by a single zero Kraus matrix.
#[derive(Debug, Clone)]
pub struct QuantumOperation {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

impl QuantumOperation {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return structure("operation dimensions must be positive");
        }
        if kraus.is_empty() {
            return structure("operation needs at least one Kraus matrix");
        }
        for (i, k) in kraus.iter().enumerate() {
            if k.shape() != (dim_out, dim_in) {
                return structure(format!(
                    "Kraus matrix {i} is {}x{}, expected {dim_out}x{dim_in}",
                    k.nrows(),
                    k.ncols()
                ));
            }
            if !is_finite(k) {
                return structure(format!("Kraus matrix {i} has non-finite entries"));
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    /// Single-Kraus operation `rho -> K rho K^dagger`.
    pub fn single(k: CMatrix) -> Result<Self> {
        Self::new(k.ncols(), k.nrows(), vec![k])
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![identity(d)],
        }
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Self {
            dim_in,
            dim_out,
            kraus: vec![CMatrix::zeros(dim_out, dim_in)],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `E = sum_k K^dagger K`, the effect giving `Tr[T(rho)] = Tr[E rho]`.
    pub fn effect(&self) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(self.dim_in, self.dim_in), |acc, k| {
                acc + k.adjoint() * k
            })
    }

    /// Unnormalised image of a matrix on the input space.
    pub fn map(&self, rho: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }

    /// `T ⊗ id_n`, acting on the first factor.
    pub fn tensor_identity(&self, n: usize) -> Self {
        if n == 1 {
            return self.clone();
        }
        let id = identity(n);
        Self {
            dim_in: self.dim_in * n,
            dim_out: self.dim_out * n,
            kraus: self.kraus.iter().map(|k| kron(k, &id)).collect(),
        }
    }

    /// Discards the last factor of an output space `B ⊗ E` with `dim_out = d_b * d_e`.
    pub fn trace_out_last(&self, d_b: usize, d_e: usize) -> Result<Self> {
        if d_b * d_e != self.dim_out {
            return structure(format!(
                "output dimension {} does not factor as {d_b}x{d_e}",
                self.dim_out
            ));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * d_e);
        for k in &self.kraus {
            for e in 0..d_e {
                kraus.push(CMatrix::from_fn(d_b, self.dim_in, |b, a| k[(b * d_e + e, a)]));
            }
        }
        Ok(Self {
            dim_in: self.dim_in,
            dim_out: d_b,
            kraus,
        })
    }

    /// Multiplies every Kraus matrix by a scalar.
    pub fn scaled_kraus(&self, factor: crate::linalg::C64) -> Self {
        Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(|k| k * factor).collect(),
        }
    }
}

/// Choi matrix `sum_ij |i><j| ⊗ T(|i><j|)`, input factor first.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub dim_in: usize,
    pub dim_out: usize,
    pub matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        frobenius_distance(&self.matrix, &other.matrix)
    }

    pub fn rank(&self, tol: &Tolerances) -> usize {
        let eig = hermitian_eig_unchecked(&self.matrix);
        numerical_rank(&eig.values, tol.eig_cut)
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        let n = dim_in * dim_out;
        Self {
            dim_in,
            dim_out,
            matrix: CMatrix::zeros(n, n),
        }
    }

    /// Linear combination helper: `self + other`.
    pub fn add(&self, other: &ChoiMatrix) -> Result<Self> {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return structure("Choi matrices of different shapes");
        }
        Ok(Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrix: &self.matrix + &other.matrix,
        })
    }
}

/// `|K>> = sum_i |i> ⊗ K|i>`.
fn vectorize(k: &CMatrix) -> CVector {
    let (dout, din) = k.shape();
    CVector::from_fn(din * dout, |idx, _| k[(idx % dout, idx / dout)])
}

pub fn choi(op: &QuantumOperation) -> ChoiMatrix {
    let n = op.dim_in * op.dim_out;
    let mut m = CMatrix::zeros(n, n);
    for k in &op.kraus {
        let v = vectorize(k);
        m += &v * v.adjoint();
    }
    ChoiMatrix {
        dim_in: op.dim_in,
        dim_out: op.dim_out,
        matrix: m,
    }
}

/// Choi-matrix Frobenius distance; infinite for maps of different shape.
pub fn map_distance(a: &QuantumOperation, b: &QuantumOperation) -> f64 {
    choi(a).distance(&choi(b))
}

pub fn maps_equal(a: &QuantumOperation, b: &QuantumOperation, tol: &Tolerances) -> bool {
    map_distance(a, b) <= tol.mat_eq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperationReport {
    pub is_cp: bool,
    pub is_tni: bool,
    pub is_tp: bool,
}

pub fn validate(op: &QuantumOperation, tol: &Tolerances) -> OperationReport {
    let c = choi(op);
    let is_cp = psd_from_eig(&hermitian_eig_unchecked(&c.matrix), tol);
    let e = op.effect();
    let slack = identity(op.dim_in) - &e;
    let is_tni = psd_from_eig(&hermitian_eig_unchecked(&slack), tol);
    let is_tp = slack.norm() <= tol.mat_eq;
    OperationReport {
        is_cp,
        is_tni,
        is_tp,
    }
}

/// Choi rank at most one.
pub fn is_atomic(op: &QuantumOperation, tol: &Tolerances) -> bool {
    choi(op).rank(tol) <= 1
}

/// `second ∘ first`: Kraus list of all products.
pub fn compose_seq(second: &QuantumOperation, first: &QuantumOperation) -> Result<QuantumOperation> {
    if first.dim_out != second.dim_in {
        return structure(format!(
            "cannot compose: first outputs dimension {}, second expects {}",
            first.dim_out, second.dim_in
        ));
    }
    let kraus = second
        .kraus
        .iter()
        .flat_map(|k2| first.kraus.iter().map(move |k1| k2 * k1))
        .collect();
    Ok(QuantumOperation {
        dim_in: first.dim_in,
        dim_out: second.dim_out,
        kraus,
    })
}

/// `a ⊗ b`.
pub fn compose_par(a: &QuantumOperation, b: &QuantumOperation) -> QuantumOperation {
    let kraus = a
        .kraus
        .iter()
        .flat_map(|ka| b.kraus.iter().map(move |kb| kron(ka, kb)))
        .collect();
    QuantumOperation {
        dim_in: a.dim_in * b.dim_in,
        dim_out: a.dim_out * b.dim_out,
        kraus,
    }
}

/// Sum of operations (Kraus concatenation).
pub fn coarse_grain_ops(parts: &[QuantumOperation]) -> Result<QuantumOperation> {
    let Some(first) = parts.first() else {
        return structure("coarse-graining needs at least one operation");
    };
    if parts
        .iter()
        .any(|p| (p.dim_in, p.dim_out) != (first.dim_in, first.dim_out))
    {
        return structure("coarse-grained operations must share dimensions");
    }
    Ok(QuantumOperation {
        dim_in: first.dim_in,
        dim_out: first.dim_out,
        kraus: parts.iter().flat_map(|p| p.kraus.iter().cloned()).collect(),
    })
}

/// A density operator, possibly on a composite system (first factor first).
#[derive(Debug, Clone)]
pub struct DensityState {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityState {
    /// Validates structure and, at `tol`, Hermiticity, positivity and unit trace.
    pub fn new(dims: Vec<usize>, matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        let state = Self::from_parts(dims, matrix)?;
        if !is_hermitian(&state.matrix, tol) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let eig = hermitian_eig_unchecked(&state.matrix);
        if !psd_from_eig(&eig, tol) {
            return Err(Error::InvalidState(format!(
                "matrix is not positive semidefinite (min eigenvalue {:e})",
                eig.min()
            )));
        }
        let tr = trace_re(&state.matrix);
        if (tr - 1.0).abs() > tol.prob_eq {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(state)
    }

    /// Structural checks only.
    pub(crate) fn from_parts(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return structure("state dimensions must be a nonempty list of positive counts");
        }
        let total: usize = dims.iter().product();
        if matrix.shape() != (total, total) {
            return structure(format!(
                "state matrix is {}x{}, dims {:?} require {total}x{total}",
                matrix.nrows(),
                matrix.ncols(),
                dims
            ));
        }
        if !is_finite(&matrix) {
            return structure("state matrix has non-finite entries");
        }
        Ok(Self { dims, matrix })
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(dims: Vec<usize>, vector: &CVector) -> Result<Self> {
        let n = vector.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidState("state vector must be nonzero".into()));
        }
        let v = vector / real(n);
        Self::from_parts(dims, &v * v.adjoint())
    }

    pub fn basis(d: usize, i: usize) -> Self {
        Self {
            dims: vec![d],
            matrix: crate::linalg::basis_projector(d, i),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            dims: vec![d],
            matrix: identity(d) * real(1.0 / d as f64),
        }
    }

    /// Normalised projector `P / Tr P`.
    pub fn uniform_on(projector: &CMatrix) -> Result<Self> {
        let tr = trace_re(projector);
        if tr <= 0.0 {
            return Err(Error::InvalidState("projector has zero trace".into()));
        }
        Self::from_parts(vec![projector.nrows()], projector * real(1.0 / tr))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// State of the first factor.
    pub fn reduced_first(&self) -> CMatrix {
        if self.dims.len() == 1 {
            return self.matrix.clone();
        }
        reduce_to_first(&self.matrix, &self.dims)
    }

    pub fn purity(&self) -> f64 {
        trace_re(&(&self.matrix * &self.matrix))
    }
}

/// Extends `op` to act on `state` as a whole, or on its first factor with
/// the identity on the remaining factors.
pub(crate) fn lift_to(op: &QuantumOperation, state: &DensityState) -> Result<(QuantumOperation, Vec<usize>)> {
    if op.dim_in == state.total_dim() {
        return Ok((op.clone(), vec![op.dim_out]));
    }
    if state.dims.len() > 1 && state.dims[0] == op.dim_in {
        let rest: usize = state.dims[1..].iter().product();
        let mut dims = vec![op.dim_out];
        dims.extend_from_slice(&state.dims[1..]);
        return Ok((op.tensor_identity(rest), dims));
    }
    structure(format!(
        "operation input dimension {} does not match state dims {:?}",
        op.dim_in, state.dims
    ))
}

#[derive(Debug, Clone)]
pub struct ApplyOutcome {
    /// Occurrence probability, clamped to `[0, 1]`.
    pub probability: f64,
    /// Renormalised output; `None` when the probability is within `prob_eq` of zero.
    pub state: Option<DensityState>,
    /// Unnormalised output `T(rho)`.
    pub unnormalized: CMatrix,
}

pub fn apply(op: &QuantumOperation, state: &DensityState, tol: &Tolerances) -> Result<ApplyOutcome> {
    let (lifted, dims) = lift_to(op, state)?;
    let out = lifted.map(&state.matrix);
    let raw = trace_re(&out);
    let probability = raw.clamp(0.0, 1.0);
    let state = if probability > tol.prob_eq {
        Some(DensityState {
            dims,
            matrix: &out * real(1.0 / raw),
        })
    } else {
        None
    };
    Ok(ApplyOutcome {
        probability,
        state,
        unnormalized: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_projector, c, CVector, ONE, ZERO};

    fn p(d: usize, i: usize) -> QuantumOperation {
        QuantumOperation::single(basis_projector(d, i)).unwrap()
    }

    fn plus() -> DensityState {
        DensityState::pure(vec![2], &CVector::from_element(2, ONE)).unwrap()
    }

    #[test]
    fn choi_examples() {
        let tol = Tolerances::default();
        let id = choi(&QuantumOperation::identity(2));
        assert_eq!(id.rank(&tol), 1);
        assert!((trace_re(&id.matrix) - 2.0).abs() < 1e-14);

        let c0 = choi(&p(2, 0));
        assert!(frobenius_distance(&c0.matrix, &basis_projector(4, 0)) < 1e-14);

        let deph = coarse_grain_ops(&[p(2, 0), p(2, 1)]).unwrap();
        assert_eq!(choi(&deph).rank(&tol), 2);
    }

    #[test]
    fn validate_examples() {
        let tol = Tolerances::default();
        let r = validate(&QuantumOperation::identity(2), &tol);
        assert!(r.is_cp && r.is_tni && r.is_tp);
        let r = validate(&p(2, 0), &tol);
        assert!(r.is_cp && r.is_tni && !r.is_tp);
        let big = QuantumOperation::single(identity(2) * real(1.5f64.sqrt())).unwrap();
        assert!(!validate(&big, &tol).is_tni);
    }

    #[test]
    fn construction_rejects_mismatched_kraus() {
        let r = QuantumOperation::new(2, 2, vec![identity(2), identity(3)]);
        assert!(matches!(r, Err(Error::Structure(_))));
        assert!(QuantumOperation::new(2, 2, vec![]).is_err());
    }

    #[test]
    fn atomic_examples() {
        let tol = Tolerances::default();
        assert!(is_atomic(&p(2, 0), &tol));
        assert!(!is_atomic(&coarse_grain_ops(&[p(2, 0), p(2, 1)]).unwrap(), &tol));
        assert!(is_atomic(&QuantumOperation::zero(2, 2), &tol));
    }

    #[test]
    fn apply_examples() {
        let tol = Tolerances::default();
        let out = apply(&p(2, 0), &plus(), &tol).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-14);
        assert!(frobenius_distance(out.state.unwrap().matrix(), &basis_projector(2, 0)) < 1e-14);

        let rho = plus();
        let out = apply(&QuantumOperation::identity(2), &rho, &tol).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-14);

        let out = apply(&p(3, 2), &DensityState::maximally_mixed(3), &tol).unwrap();
        assert!((out.probability - 1.0 / 3.0).abs() < 1e-14);
        assert!(frobenius_distance(out.state.unwrap().matrix(), &basis_projector(3, 2)) < 1e-14);

        let out = apply(&p(2, 1), &DensityState::basis(2, 0), &tol).unwrap();
        assert_eq!(out.probability, 0.0);
        assert!(out.state.is_none());

        assert!(apply(&p(3, 0), &plus(), &tol).is_err());
    }

    #[test]
    fn apply_on_first_factor() {
        let tol = Tolerances::default();
        let mut bell = CVector::zeros(4);
        bell[0] = ONE;
        bell[3] = ONE;
        let phi = DensityState::pure(vec![2, 2], &bell).unwrap();
        let out = apply(&p(2, 0), &phi, &tol).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-14);
        assert_eq!(out.state.unwrap().dims(), &[2, 2]);
    }

    #[test]
    fn composition_examples() {
        let tol = Tolerances::default();
        let zero = compose_seq(&p(2, 1), &p(2, 0)).unwrap();
        assert!(maps_equal(&zero, &QuantumOperation::zero(2, 2), &tol));
        let idem = compose_seq(&p(2, 0), &p(2, 0)).unwrap();
        assert!(maps_equal(&idem, &p(2, 0), &tol));
        assert!(compose_seq(&p(3, 0), &p(2, 0)).is_err());

        let par = compose_par(&p(2, 0), &QuantumOperation::identity(2));
        let out = apply(&par, &DensityState::basis(4, 0), &tol).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-14);

        let pp = compose_par(&p(2, 0), &p(2, 0));
        let plusplus = DensityState::pure(vec![2, 2], &CVector::from_element(4, ONE)).unwrap();
        let out = apply(&pp, &plusplus, &tol).unwrap();
        assert!((out.probability - 0.25).abs() < 1e-14);
    }

    #[test]
    fn coarse_grain_examples() {
        let tol = Tolerances::default();
        let single = coarse_grain_ops(&[p(2, 0)]).unwrap();
        assert!(maps_equal(&single, &p(2, 0), &tol));
        let full = coarse_grain_ops(&[p(2, 0), p(2, 1)]).unwrap();
        assert!(validate(&full, &tol).is_tp);
        assert!(coarse_grain_ops(&[p(2, 0), p(3, 0)]).is_err());
        assert!(coarse_grain_ops(&[]).is_err());
    }

    #[test]
    fn trace_out_last_of_product() {
        let tol = Tolerances::default();
        // K = |0> ⊗ |1> <0| : prepares |01> from |0>.
        let mut k = CMatrix::zeros(4, 2);
        k[(1, 0)] = ONE;
        let op = QuantumOperation::single(k).unwrap();
        let reduced = op.trace_out_last(2, 2).unwrap();
        assert!(maps_equal(&reduced, &p(2, 0), &tol));
        assert!(op.trace_out_last(3, 2).is_err());
    }

    #[test]
    fn density_state_validation() {
        let tol = Tolerances::default();
        let bad = CMatrix::from_row_slice(2, 2, &[real(1.0), ZERO, ZERO, real(1.0)]);
        assert!(matches!(
            DensityState::new(vec![2], bad, &tol),
            Err(Error::InvalidState(_))
        ));
        let neg = CMatrix::from_row_slice(2, 2, &[real(1.5), ZERO, ZERO, real(-0.5)]);
        assert!(DensityState::new(vec![2], neg, &tol).is_err());
        let nonherm = CMatrix::from_row_slice(2, 2, &[real(0.5), c(0.0, 0.3), c(0.0, 0.3), real(0.5)]);
        assert!(DensityState::new(vec![2], nonherm, &tol).is_err());
        assert!(DensityState::new(vec![3], identity(2) * real(0.5), &tol).is_err());
    }
}
