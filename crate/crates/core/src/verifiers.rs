//! Verifier states: states on which an outcome occurs with certainty.
//!
//! Ancillas are handled by acting with `op ⊗ id` on composite states and
//! discarding everything with the trace, the unique deterministic effect of
//! quantum theory. The subspace characterisation therefore only depends on
//! the reduced state of the first factor.

use crate::error::{structure, Error, Result};
use crate::instruments::Instrument;
use crate::linalg::{
    frobenius_distance, hermitian_eig_unchecked, range_subspace, subspace_relation, Subspace,
    SubspaceRelation, Tolerances,
};
use crate::quantum_ops::{apply, lift_to, DensityState, QuantumOperation};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifierReport {
    /// Outcome occurring with certainty, if any.
    pub outcome: Option<String>,
    pub probability: f64,
    pub is_verifier: bool,
    pub is_strong: bool,
    pub is_fixed_point: bool,
}

pub fn is_verifier(op: &QuantumOperation, state: &DensityState, tol: &Tolerances) -> Result<bool> {
    Ok(apply(op, state, tol)?.probability >= 1.0 - tol.prob_eq)
}

/// `T(rho) / Tr[T(rho)]`.
pub fn canonical_verifier(
    op: &QuantumOperation,
    seed: &DensityState,
    tol: &Tolerances,
) -> Result<DensityState> {
    let out = apply(op, seed, tol)?;
    out.state.ok_or(Error::DegenerateSeed {
        probability: out.probability,
    })
}

/// `||T(rho) - rho||_F`, with `T` acting on the first factor.
pub fn fixed_point_residual(op: &QuantumOperation, state: &DensityState) -> Result<f64> {
    if op.dim_in() != op.dim_out() {
        return structure(format!(
            "operation maps dimension {} to {}; fixed points need equal dimensions",
            op.dim_in(),
            op.dim_out()
        ));
    }
    let (lifted, _) = lift_to(op, state)?;
    Ok(frobenius_distance(&lifted.map(state.matrix()), state.matrix()))
}

/// The state is left unchanged by the unnormalised operation.
pub fn is_strong_verifier(
    op: &QuantumOperation,
    state: &DensityState,
    tol: &Tolerances,
) -> Result<bool> {
    Ok(fixed_point_residual(op, state)? <= tol.mat_eq)
}

/// Same test as [`is_strong_verifier`], under the fixed-point name.
pub fn is_fixed_point(op: &QuantumOperation, state: &DensityState, tol: &Tolerances) -> Result<bool> {
    is_strong_verifier(op, state, tol)
}

/// Eigenspace of the effect for eigenvalues `>= 1 - prob_eq`; a state is a
/// verifier iff its (reduced) support lies inside it.
pub fn verifier_support(op: &QuantumOperation, tol: &Tolerances) -> Subspace {
    let eig = hermitian_eig_unchecked(&op.effect());
    let k = eig
        .values
        .iter()
        .take_while(|&&v| v >= 1.0 - tol.prob_eq)
        .count();
    let cols = eig.vectors.columns(0, k).into_owned();
    // Eigenvectors are already orthonormal; re-spanning keeps the type's invariant explicit.
    Subspace::span(&cols, tol).unwrap_or_else(|_| Subspace::empty(op.dim_in()))
}

/// Membership through the subspace characterisation.
pub fn is_verifier_by_support(
    op: &QuantumOperation,
    state: &DensityState,
    tol: &Tolerances,
) -> Result<bool> {
    lift_to(op, state)?;
    let support = range_subspace(&state.reduced_first(), tol)?;
    let allowed = verifier_support(op, tol);
    Ok(matches!(
        subspace_relation(&support, &allowed, tol)?,
        SubspaceRelation::Equal | SubspaceRelation::AInsideB
    ))
}

/// Full report for a single labelled operation.
pub fn operation_report(
    label: &str,
    op: &QuantumOperation,
    state: &DensityState,
    tol: &Tolerances,
) -> Result<VerifierReport> {
    let probability = apply(op, state, tol)?.probability;
    let is_verifier = probability >= 1.0 - tol.prob_eq;
    let is_strong = op.dim_in() == op.dim_out() && is_strong_verifier(op, state, tol)?;
    Ok(VerifierReport {
        outcome: is_verifier.then(|| label.to_string()),
        probability,
        is_verifier,
        is_strong,
        is_fixed_point: is_strong,
    })
}

/// Report for an instrument: finds the outcome (if any) that the state verifies.
pub fn instrument_report(
    ins: &Instrument,
    state: &DensityState,
    tol: &Tolerances,
) -> Result<VerifierReport> {
    let mut best: Option<VerifierReport> = None;
    for (label, op) in ins.outcomes() {
        let r = operation_report(label, op, state, tol)?;
        let better = match &best {
            None => true,
            Some(b) => r.probability > b.probability,
        };
        if better {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::Structure("instrument has no outcomes".into()))
}
