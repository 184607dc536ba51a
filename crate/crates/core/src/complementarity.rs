//! Complementarity between elementary properties and its degrees.
//!
//! Two elementary properties are non-complementary exactly when their
//! projector supports coincide under a bijection of outcomes; otherwise a
//! pure verifier of one that the other cannot verify is produced.

use indexmap::IndexMap;

use crate::error::{structure, Error, Result};
use crate::instruments::ElementaryProperty;
use crate::linalg::{
    range_subspace, real, subspace_relation, CVector, Subspace, SubspaceRelation, Tolerances,
};
use crate::quantum_ops::{apply, DensityState, QuantumOperation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeKind {
    NotComplementaryHere,
    Weak,
    Mild,
    Strong,
}

impl DegreeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NotComplementaryHere => "not-complementary-here",
            Self::Weak => "weak",
            Self::Mild => "mild",
            Self::Strong => "strong",
        }
    }
}

impl std::fmt::Display for DegreeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct DegreeVerdict {
    pub kind: DegreeKind,
    pub probabilities: IndexMap<String, f64>,
    pub entropy_bits: f64,
}

/// Which of the two compared properties a witness state verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

#[derive(Debug, Clone)]
pub struct ComplementarityWitness {
    pub verifies: Side,
    pub outcome: String,
    pub vector: CVector,
    pub state: DensityState,
}

#[derive(Debug, Clone)]
pub struct ComplementarityReport {
    pub complementary: bool,
    /// Outcome map first → second with equal supports; present iff not complementary.
    pub bijection: Option<IndexMap<String, String>>,
    pub witness: Option<ComplementarityWitness>,
    /// First property's verifiers measured against the second.
    pub degree_table: IndexMap<String, DegreeVerdict>,
    /// Second property's verifiers measured against the first.
    pub reverse_table: IndexMap<String, DegreeVerdict>,
}

fn supports(p: &ElementaryProperty, tol: &Tolerances) -> Result<Vec<(String, Subspace)>> {
    p.projectors()
        .iter()
        .map(|(l, pi)| Ok((l.clone(), range_subspace(pi, tol)?)))
        .collect()
}

fn check_same_dim(p: &ElementaryProperty, q: &ElementaryProperty) -> Result<()> {
    if p.dim() != q.dim() {
        return structure(format!(
            "properties act on dimensions {} and {}",
            p.dim(),
            q.dim()
        ));
    }
    Ok(())
}

fn find_bijection(
    ps: &[(String, Subspace)],
    qs: &[(String, Subspace)],
    tol: &Tolerances,
) -> Result<Option<IndexMap<String, String>>> {
    if ps.len() != qs.len() {
        return Ok(None);
    }
    let mut used = vec![false; qs.len()];
    let mut map = IndexMap::new();
    for (lp, sp) in ps {
        let mut matched = None;
        for (j, (_, sq)) in qs.iter().enumerate() {
            if !used[j] && subspace_relation(sp, sq, tol)? == SubspaceRelation::Equal {
                matched = Some(j);
                break;
            }
        }
        match matched {
            Some(j) => {
                used[j] = true;
                map.insert(lp.clone(), qs[j].0.clone());
            }
            None => return Ok(None),
        }
    }
    Ok(Some(map))
}

/// Probability that a unit vector passes the best single outcome.
fn best_overlap(v: &CVector, others: &[(String, Subspace)]) -> f64 {
    others
        .iter()
        .map(|(_, s)| (s.basis().adjoint() * v).norm_squared())
        .fold(0.0, f64::max)
}

/// A unit vector in `support` that no outcome of `others` verifies, if one exists.
fn witness_vector(support: &Subspace, others: &[(String, Subspace)], tol: &Tolerances) -> Option<CVector> {
    let fails = |v: &CVector| best_overlap(v, others) < 1.0 - tol.prob_eq;
    let cols: Vec<CVector> = (0..support.dim())
        .map(|i| support.basis().column(i).into_owned())
        .collect();
    if let Some(v) = cols.iter().find(|v| fails(v)) {
        return Some(v.clone());
    }
    // Every basis vector sits in some outcome; two of them in different
    // outcomes give a superposition that none verifies.
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let v = (&cols[i] + &cols[j]) * real(1.0 / 2f64.sqrt());
            if fails(&v) {
                return Some(v);
            }
        }
    }
    None
}

fn find_witness(
    ps: &[(String, Subspace)],
    qs: &[(String, Subspace)],
    side: Side,
    dim: usize,
    tol: &Tolerances,
) -> Result<Option<ComplementarityWitness>> {
    for (label, s) in ps {
        if let Some(v) = witness_vector(s, qs, tol) {
            return Ok(Some(ComplementarityWitness {
                verifies: side,
                outcome: label.clone(),
                state: DensityState::pure(vec![dim], &v)?,
                vector: v,
            }));
        }
    }
    Ok(None)
}

pub fn are_complementary(
    p: &ElementaryProperty,
    q: &ElementaryProperty,
    tol: &Tolerances,
) -> Result<ComplementarityReport> {
    check_same_dim(p, q)?;
    let ps = supports(p, tol)?;
    let qs = supports(q, tol)?;
    let bijection = find_bijection(&ps, &qs, tol)?;
    let witness = if bijection.is_some() {
        None
    } else {
        match find_witness(&ps, &qs, Side::First, p.dim(), tol)? {
            Some(w) => Some(w),
            None => find_witness(&qs, &ps, Side::Second, p.dim(), tol)?,
        }
    };
    Ok(ComplementarityReport {
        complementary: bijection.is_none(),
        bijection,
        witness,
        degree_table: IndexMap::new(),
        reverse_table: IndexMap::new(),
    })
}

/// Shannon entropy, in bits when `base2` is set and nats otherwise.
pub fn outcome_entropy(probabilities: &[f64], base2: bool, tol: &Tolerances) -> Result<f64> {
    if let Some(p) = probabilities
        .iter()
        .find(|p| !p.is_finite() || **p < -tol.prob_eq)
    {
        return Err(Error::InvalidDistribution(format!("negative entry {p}")));
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > tol.prob_eq {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    let log = |x: f64| if base2 { x.log2() } else { x.ln() };
    Ok(-probabilities
        .iter()
        .map(|&p| p.max(0.0))
        .filter(|&p| p > 0.0)
        .map(|p| p * log(p))
        .sum::<f64>())
}

/// Classifies how undetermined `q` is on `verifier` (assumed a verifier of
/// some other property).
pub fn degree_for_verifier(
    verifier: &DensityState,
    q: &ElementaryProperty,
    tol: &Tolerances,
) -> Result<DegreeVerdict> {
    let mut probabilities = IndexMap::new();
    for (label, pi) in q.projectors() {
        let op = QuantumOperation::single(pi.clone())?;
        probabilities.insert(label.clone(), apply(&op, verifier, tol)?.probability);
    }
    let ps: Vec<f64> = probabilities.values().copied().collect();
    let uniform = 1.0 / ps.len() as f64;
    let kind = if ps.iter().any(|&p| p >= 1.0 - tol.prob_eq) {
        DegreeKind::NotComplementaryHere
    } else if ps.iter().all(|&p| (p - uniform).abs() <= tol.prob_eq) {
        DegreeKind::Strong
    } else if ps.iter().all(|&p| p >= tol.prob_eq) {
        DegreeKind::Mild
    } else {
        DegreeKind::Weak
    };
    let entropy_bits = outcome_entropy(&ps, true, tol)?;
    Ok(DegreeVerdict {
        kind,
        probabilities,
        entropy_bits,
    })
}

fn degree_table(
    from: &ElementaryProperty,
    against: &ElementaryProperty,
    tol: &Tolerances,
) -> Result<IndexMap<String, DegreeVerdict>> {
    from.projectors()
        .iter()
        .map(|(label, pi)| {
            let verifier = DensityState::uniform_on(pi)?;
            Ok((label.clone(), degree_for_verifier(&verifier, against, tol)?))
        })
        .collect()
}

/// [`are_complementary`] plus degree tables in both directions, using the
/// maximally mixed state on each projector's range as the verifier.
pub fn classify_relation(
    p: &ElementaryProperty,
    q: &ElementaryProperty,
    tol: &Tolerances,
) -> Result<ComplementarityReport> {
    let mut report = are_complementary(p, q, tol)?;
    report.degree_table = degree_table(p, q, tol)?;
    report.reverse_table = degree_table(q, p, tol)?;
    Ok(report)
}
