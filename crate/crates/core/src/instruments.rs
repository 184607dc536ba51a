//! Outcome-labelled instruments and elementary properties.

use indexmap::{IndexMap, IndexSet};

use crate::error::{structure, Error, Result};
use crate::linalg::{
    frobenius, hermitian_eig_unchecked, identity, is_hermitian, range_subspace, real, trace_re,
    CMatrix, Tolerances,
};
use crate::quantum_ops::{
    choi, coarse_grain_ops, compose_seq, is_atomic, validate, ChoiMatrix, OperationReport,
    QuantumOperation,
};

/// An ordered family of quantum operations labelled by outcome.
///
/// Construction checks structure only; completeness (the sum being a
/// channel) is reported by [`validate_instrument`].
#[derive(Debug, Clone)]
pub struct Instrument {
    dim_in: usize,
    dim_out: usize,
    outcomes: IndexMap<String, QuantumOperation>,
}

impl Instrument {
    pub fn new<L: Into<String>>(
        outcomes: impl IntoIterator<Item = (L, QuantumOperation)>,
    ) -> Result<Self> {
        let mut map = IndexMap::new();
        for (label, op) in outcomes {
            let label = label.into();
            if map.contains_key(&label) {
                return structure(format!("duplicate outcome label `{label}`"));
            }
            map.insert(label, op);
        }
        let Some(first) = map.values().next() else {
            return structure("instrument needs at least one outcome");
        };
        let (dim_in, dim_out) = (first.dim_in(), first.dim_out());
        if let Some((label, _)) = map
            .iter()
            .find(|(_, op)| (op.dim_in(), op.dim_out()) != (dim_in, dim_out))
        {
            return structure(format!(
                "outcome `{label}` has dimensions different from the first outcome"
            ));
        }
        Ok(Self {
            dim_in,
            dim_out,
            outcomes: map,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.keys().map(String::as_str)
    }

    pub fn outcomes(&self) -> &IndexMap<String, QuantumOperation> {
        &self.outcomes
    }

    pub fn operation(&self, label: &str) -> Option<&QuantumOperation> {
        self.outcomes.get(label)
    }

    pub fn operation_or_err(&self, label: &str) -> Result<&QuantumOperation> {
        self.operation(label)
            .ok_or_else(|| Error::Structure(format!("unknown outcome label `{label}`")))
    }

    /// Sum of all outcome effects.
    pub fn total_effect(&self) -> CMatrix {
        self.outcomes
            .values()
            .fold(CMatrix::zeros(self.dim_in, self.dim_in), |acc, op| acc + op.effect())
    }

    /// Same operations under new labels, in the order given.
    pub fn relabelled(&self, labels: &[String]) -> Result<Self> {
        if labels.len() != self.len() {
            return structure("relabelling must give one label per outcome");
        }
        Self::new(labels.iter().cloned().zip(self.outcomes.values().cloned()))
    }
}

#[derive(Debug, Clone)]
pub struct InstrumentReport {
    pub outcomes: IndexMap<String, OperationReport>,
    /// `||sum_x E_x - I||_F`.
    pub completeness_residual: f64,
    pub sums_to_channel: bool,
    pub valid: bool,
}

impl InstrumentReport {
    /// Human-readable list of violations, empty for valid instruments.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (label, r) in &self.outcomes {
            if !r.is_cp {
                out.push(format!("outcome `{label}` is not completely positive"));
            }
            if !r.is_tni {
                out.push(format!("outcome `{label}` increases trace"));
            }
        }
        if !self.sums_to_channel {
            out.push(format!(
                "effects do not sum to the identity (residual {:e})",
                self.completeness_residual
            ));
        }
        out
    }
}

pub fn validate_instrument(ins: &Instrument, tol: &Tolerances) -> InstrumentReport {
    let outcomes: IndexMap<String, OperationReport> = ins
        .outcomes
        .iter()
        .map(|(l, op)| (l.clone(), validate(op, tol)))
        .collect();
    let completeness_residual = frobenius(&(ins.total_effect() - identity(ins.dim_in)));
    let sums_to_channel = completeness_residual <= tol.mat_eq;
    let valid = sums_to_channel && outcomes.values().all(|r| r.is_cp && r.is_tni);
    InstrumentReport {
        outcomes,
        completeness_residual,
        sums_to_channel,
        valid,
    }
}

fn require_endo(ins: &Instrument) -> Result<()> {
    if ins.dim_in != ins.dim_out {
        return structure(format!(
            "instrument maps dimension {} to {}; an endomorphic instrument is required",
            ins.dim_in, ins.dim_out
        ));
    }
    Ok(())
}

/// Largest Choi distance between `T_x ∘ T_x'` and `δ_{xx'} T_x` over all
/// ordered pairs.
pub fn repeatability_residual(ins: &Instrument) -> Result<f64> {
    require_endo(ins)?;
    let chois: Vec<ChoiMatrix> = ins.outcomes.values().map(choi).collect();
    let zero = ChoiMatrix::zero(ins.dim_in, ins.dim_out);
    let mut worst = 0.0f64;
    for (i, tx) in ins.outcomes.values().enumerate() {
        for (j, txp) in ins.outcomes.values().enumerate() {
            let composed = choi(&compose_seq(tx, txp)?);
            let target = if i == j { &chois[i] } else { &zero };
            worst = worst.max(composed.distance(target));
        }
    }
    Ok(worst)
}

/// `T_x ∘ T_x' = δ_{xx'} T_x` for every ordered pair, compared on Choi matrices.
pub fn is_repeatable(ins: &Instrument, tol: &Tolerances) -> Result<bool> {
    Ok(repeatability_residual(ins)? <= tol.mat_eq)
}

/// A repeatable atomic instrument together with its projectors.
#[derive(Debug, Clone)]
pub struct ElementaryProperty {
    base: Instrument,
    projectors: IndexMap<String, CMatrix>,
}

impl ElementaryProperty {
    pub fn instrument(&self) -> &Instrument {
        &self.base
    }

    pub fn projectors(&self) -> &IndexMap<String, CMatrix> {
        &self.projectors
    }

    pub fn projector(&self, label: &str) -> Option<&CMatrix> {
        self.projectors.get(label)
    }

    pub fn dim(&self) -> usize {
        self.base.dim_in
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.projectors.keys().map(String::as_str)
    }

    /// Projector ranks in outcome order.
    pub fn ranks(&self) -> Vec<usize> {
        self.projectors
            .values()
            .map(|p| trace_re(p).round() as usize)
            .collect()
    }
}

/// Unvectorises the dominant Choi eigenvector into a Kraus matrix.
fn dominant_kraus(op: &QuantumOperation) -> CMatrix {
    let c = choi(op);
    let eig = hermitian_eig_unchecked(&c.matrix);
    let (dout, din) = (op.dim_out(), op.dim_in());
    let scale = eig.max().max(0.0).sqrt();
    let v = eig.vectors.column(0);
    CMatrix::from_fn(dout, din, |a, i| v[i * dout + a] * real(scale))
}

fn check_pvm_relations(projectors: &IndexMap<String, CMatrix>, d: usize, tol: &Tolerances) -> Result<(), String> {
    let items: Vec<(&String, &CMatrix)> = projectors.iter().collect();
    for (i, (li, pi)) in items.iter().enumerate() {
        for (lj, pj) in items.iter().skip(i + 1) {
            let overlap = frobenius(&(*pi * *pj));
            if overlap > tol.mat_eq {
                return Err(format!(
                    "projectors `{li}` and `{lj}` are not orthogonal (||PQ|| = {overlap:e})"
                ));
            }
        }
    }
    let sum = projectors
        .values()
        .fold(CMatrix::zeros(d, d), |acc, p| acc + p);
    let residual = frobenius(&(sum - identity(d)));
    if residual > tol.mat_eq {
        return Err(format!(
            "projectors do not sum to the identity (residual {residual:e})"
        ));
    }
    Ok(())
}

/// Recovers the projector form `T_x(rho) = Π_x rho Π_x` of a repeatable
/// atomic instrument, discarding Kraus phases.
pub fn to_elementary(ins: &Instrument, tol: &Tolerances) -> Result<ElementaryProperty> {
    require_endo(ins)?;
    if !is_repeatable(ins, tol)? {
        return Err(Error::NotRepeatable);
    }
    for (label, op) in &ins.outcomes {
        if !is_atomic(op, tol) {
            return Err(Error::NotAtomic {
                label: label.clone(),
                rank: choi(op).rank(tol),
            });
        }
        if frobenius(&op.effect()) <= tol.mat_eq {
            return Err(Error::NoVerifier {
                label: label.clone(),
            });
        }
    }
    let mut projectors = IndexMap::new();
    for (label, op) in &ins.outcomes {
        let k = dominant_kraus(op);
        let pi = range_subspace(&k, tol)?.projector();
        let as_op = QuantumOperation::single(pi.clone())?;
        let dist = choi(&as_op).distance(&choi(op));
        if dist > tol.mat_eq {
            return Err(Error::Extraction(format!(
                "outcome `{label}` differs from its support projector by {dist:e}"
            )));
        }
        projectors.insert(label.clone(), pi);
    }
    check_pvm_relations(&projectors, ins.dim_in, tol).map_err(Error::Extraction)?;
    Ok(ElementaryProperty {
        base: ins.clone(),
        projectors,
    })
}

/// Disjoint blocks of old outcome labels, keyed by new label.
#[derive(Debug, Clone)]
pub struct OutcomePartition {
    blocks: IndexMap<String, Vec<String>>,
}

impl OutcomePartition {
    pub fn new<L: Into<String>, B: IntoIterator<Item = impl Into<String>>>(
        blocks: impl IntoIterator<Item = (L, B)>,
    ) -> Result<Self> {
        let mut map: IndexMap<String, Vec<String>> = IndexMap::new();
        let mut seen = IndexSet::new();
        for (label, block) in blocks {
            let label = label.into();
            let block: Vec<String> = block.into_iter().map(Into::into).collect();
            if block.is_empty() {
                return structure(format!("partition block `{label}` is empty"));
            }
            for old in &block {
                if !seen.insert(old.clone()) {
                    return structure(format!("label `{old}` appears in two partition blocks"));
                }
            }
            if map.insert(label.clone(), block).is_some() {
                return structure(format!("duplicate partition block `{label}`"));
            }
        }
        Ok(Self { blocks: map })
    }

    /// Each old label in its own block under the same name.
    pub fn singletons<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            blocks: labels
                .into_iter()
                .map(|l| (l.to_string(), vec![l.to_string()]))
                .collect(),
        }
    }

    pub fn blocks(&self) -> &IndexMap<String, Vec<String>> {
        &self.blocks
    }

    /// Checks that the blocks cover exactly `labels`.
    pub fn check_covers<'a>(&self, labels: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let expected: IndexSet<&str> = labels.into_iter().collect();
        let got: IndexSet<&str> = self.blocks.values().flatten().map(String::as_str).collect();
        if let Some(missing) = expected.iter().find(|l| !got.contains(*l)) {
            return structure(format!("partition does not cover outcome `{missing}`"));
        }
        if let Some(extra) = got.iter().find(|l| !expected.contains(*l)) {
            return structure(format!("partition mentions unknown outcome `{extra}`"));
        }
        Ok(())
    }
}

pub fn coarse_grain(ins: &Instrument, part: &OutcomePartition) -> Result<Instrument> {
    part.check_covers(ins.labels())?;
    let merged = part
        .blocks
        .iter()
        .map(|(label, block)| {
            let ops: Vec<QuantumOperation> = block
                .iter()
                .map(|l| ins.outcomes[l.as_str()].clone())
                .collect();
            coarse_grain_ops(&ops).map(|op| (label.clone(), op))
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(merged)
}

/// Builds the elementary property `rho -> Π_x rho Π_x` from labelled projectors.
pub fn from_pvm<L: Into<String>>(
    projectors: impl IntoIterator<Item = (L, CMatrix)>,
    tol: &Tolerances,
) -> Result<ElementaryProperty> {
    let mut map = IndexMap::new();
    for (label, p) in projectors {
        let label = label.into();
        if map.contains_key(&label) {
            return structure(format!("duplicate outcome label `{label}`"));
        }
        map.insert(label, p);
    }
    let Some(first) = map.values().next() else {
        return Err(Error::InvalidPvm("no projectors given".into()));
    };
    let d = first.nrows();
    for (label, p) in &map {
        if p.shape() != (d, d) {
            return structure(format!("projector `{label}` is not {d}x{d}"));
        }
        if !is_hermitian(p, tol) {
            return Err(Error::InvalidPvm(format!("`{label}` is not Hermitian")));
        }
        if frobenius(&(p * p - p)) > tol.mat_eq {
            return Err(Error::InvalidPvm(format!("`{label}` is not idempotent")));
        }
        if frobenius(p) <= tol.mat_eq {
            return Err(Error::InvalidPvm(format!(
                "`{label}` is the zero projector and admits no verifier"
            )));
        }
    }
    check_pvm_relations(&map, d, tol).map_err(Error::InvalidPvm)?;
    let base = Instrument::new(
        map.iter()
            .map(|(l, p)| Ok((l.clone(), QuantumOperation::single(p.clone())?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    Ok(ElementaryProperty {
        base,
        projectors: map,
    })
}
