//! Exclusion witnesses and compatibility of elementary properties.
//!
//! `T` does not exclude `G` when some instrument `C: A -> B⊗E` reproduces
//! `T` after discarding `E` and grouping outcomes into blocks `S_x`, and a
//! family of post-processing instruments `P^z: B⊗E -> C` applied after
//! `C_z` reproduces `G`. This module checks supplied witnesses; it does not
//! search for them.

use indexmap::{IndexMap, IndexSet};
use rayon::prelude::*;

use crate::complementarity::are_complementary;
use crate::error::{structure, Result};
use crate::instruments::{validate_instrument, ElementaryProperty, Instrument};
use crate::linalg::{frobenius, subspace_relation, CMatrix, Subspace, SubspaceRelation, Tolerances};
use crate::quantum_ops::{choi, compose_seq, is_atomic, ChoiMatrix, QuantumOperation};
use crate::randgen::{
    haar_isometry, haar_unitary, random_pvm, random_rank_profile, SeededGenerator,
    GENERATOR_ALGORITHM,
};
use crate::verifiers::verifier_support;

#[derive(Debug, Clone)]
pub struct ExclusionWitness {
    c: Instrument,
    dim_b: usize,
    dim_e: usize,
    partition: IndexMap<String, Vec<String>>,
    post: IndexMap<String, Instrument>,
}

impl ExclusionWitness {
    /// Checks the structural invariants: `C` outputs `dim_b * dim_e`, the
    /// partition blocks are disjoint and cover `C`'s outcomes, and there is
    /// one post-processing instrument per `C` outcome, all with input
    /// `dim_b * dim_e`, a common output and a common outcome set.
    pub fn new(
        c: Instrument,
        dims_out: (usize, usize),
        partition: IndexMap<String, Vec<String>>,
        post: IndexMap<String, Instrument>,
    ) -> Result<Self> {
        let (dim_b, dim_e) = dims_out;
        if dim_b == 0 || dim_e == 0 || dim_b * dim_e != c.dim_out() {
            return structure(format!(
                "C outputs dimension {}, declared factors {dim_b}x{dim_e}",
                c.dim_out()
            ));
        }
        let mut seen = IndexSet::new();
        for (x, block) in &partition {
            if block.is_empty() {
                return structure(format!("partition block for `{x}` is empty"));
            }
            for z in block {
                if c.operation(z).is_none() {
                    return structure(format!("partition block `{x}` names unknown C outcome `{z}`"));
                }
                if !seen.insert(z.clone()) {
                    return structure(format!("C outcome `{z}` appears in two partition blocks"));
                }
            }
        }
        if let Some(z) = c.labels().find(|z| !seen.contains(*z)) {
            return structure(format!("partition does not cover C outcome `{z}`"));
        }
        for z in c.labels() {
            if !post.contains_key(z) {
                return structure(format!("no post-processing instrument for C outcome `{z}`"));
            }
        }
        if let Some(z) = post.keys().find(|z| c.operation(z).is_none()) {
            return structure(format!("post-processing given for unknown C outcome `{z}`"));
        }
        let mut post_iter = post.values();
        let first = post_iter.next().expect("C has at least one outcome");
        let labels: IndexSet<&str> = first.labels().collect();
        for (z, p) in &post {
            if p.dim_in() != c.dim_out() {
                return structure(format!(
                    "post-processing `{z}` takes dimension {}, C outputs {}",
                    p.dim_in(),
                    c.dim_out()
                ));
            }
            if p.dim_out() != first.dim_out() {
                return structure("post-processing instruments have different output dimensions");
            }
            let other: IndexSet<&str> = p.labels().collect();
            if other != labels {
                return structure(format!("post-processing `{z}` has a different outcome set"));
            }
        }
        Ok(Self {
            c,
            dim_b,
            dim_e,
            partition,
            post,
        })
    }

    pub fn c(&self) -> &Instrument {
        &self.c
    }

    pub fn dims_out(&self) -> (usize, usize) {
        (self.dim_b, self.dim_e)
    }

    pub fn partition(&self) -> &IndexMap<String, Vec<String>> {
        &self.partition
    }

    pub fn post(&self) -> &IndexMap<String, Instrument> {
        &self.post
    }

    /// Outcome labels of the simulated instrument `G`.
    pub fn target_labels(&self) -> Vec<String> {
        self.post
            .values()
            .next()
            .map(|p| p.labels().map(str::to_string).collect())
            .unwrap_or_default()
    }

    /// Replaces one operation of `C`, keeping everything else.
    pub fn with_c_operation(&self, label: &str, op: QuantumOperation) -> Result<Self> {
        let outcomes = self
            .c
            .outcomes()
            .iter()
            .map(|(l, o)| (l.clone(), if l == label { op.clone() } else { o.clone() }));
        Self::new(
            Instrument::new(outcomes)?,
            (self.dim_b, self.dim_e),
            self.partition.clone(),
            self.post.clone(),
        )
    }

    /// Exchanges the post-processing instruments attached to two `C` outcomes.
    pub fn with_post_swapped(&self, a: &str, b: &str) -> Result<Self> {
        let (Some(pa), Some(pb)) = (self.post.get(a), self.post.get(b)) else {
            return structure("unknown C outcome in swap");
        };
        let mut post = self.post.clone();
        post.insert(a.to_string(), pb.clone());
        post.insert(b.to_string(), pa.clone());
        Ok(Self { post, ..self.clone() })
    }
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    /// Choi distance between `T_x` and `sum_{z in S_x} Tr_E ∘ C_z`.
    pub t_residuals: IndexMap<String, f64>,
    /// Choi distance between `G_y` and `sum_z P^z_y ∘ C_z`.
    pub g_residuals: IndexMap<String, f64>,
    /// `C` or a `P^z` failing instrument validation.
    pub instrument_defects: Vec<String>,
    pub valid: bool,
}

impl WitnessReport {
    pub fn max_residual(&self) -> f64 {
        self.t_residuals
            .values()
            .chain(self.g_residuals.values())
            .copied()
            .fold(0.0, f64::max)
    }
}

fn choi_sum(ops: impl IntoIterator<Item = QuantumOperation>, dim_in: usize, dim_out: usize) -> Result<ChoiMatrix> {
    ops.into_iter()
        .try_fold(ChoiMatrix::zero(dim_in, dim_out), |acc, op| acc.add(&choi(&op)))
}

pub fn verify_witness(
    t: &Instrument,
    g: &Instrument,
    w: &ExclusionWitness,
    tol: &Tolerances,
) -> Result<WitnessReport> {
    if t.dim_in() != w.c.dim_in() || g.dim_in() != w.c.dim_in() {
        return structure("T, G and C must share their input system");
    }
    if t.dim_out() != w.dim_b {
        return structure(format!(
            "T outputs dimension {}, witness declares B = {}",
            t.dim_out(),
            w.dim_b
        ));
    }
    let t_labels: IndexSet<&str> = t.labels().collect();
    let part_labels: IndexSet<&str> = w.partition.keys().map(String::as_str).collect();
    if t_labels != part_labels {
        return structure("partition keys must be exactly the outcomes of T");
    }
    let g_labels: IndexSet<&str> = g.labels().collect();
    let post_labels = w.target_labels();
    let post_labels: IndexSet<&str> = post_labels.iter().map(String::as_str).collect();
    if g_labels != post_labels {
        return structure("post-processing outcome set must equal the outcomes of G");
    }
    if let Some(p) = w.post.values().next() {
        if p.dim_out() != g.dim_out() {
            return structure("post-processing output must match the output of G");
        }
    }

    let mut t_res = IndexMap::new();
    for (x, tx) in t.outcomes() {
        let reduced = w.partition[x.as_str()]
            .iter()
            .map(|z| w.c.outcomes()[z.as_str()].trace_out_last(w.dim_b, w.dim_e))
            .collect::<Result<Vec<_>>>()?;
        let sum = choi_sum(reduced, t.dim_in(), t.dim_out())?;
        t_res.insert(x.clone(), choi(tx).distance(&sum));
    }

    let mut g_res = IndexMap::new();
    for (y, gy) in g.outcomes() {
        let parts = w
            .c
            .outcomes()
            .iter()
            .map(|(z, cz)| compose_seq(&w.post[z.as_str()].outcomes()[y.as_str()], cz))
            .collect::<Result<Vec<_>>>()?;
        let sum = choi_sum(parts, g.dim_in(), g.dim_out())?;
        g_res.insert(y.clone(), choi(gy).distance(&sum));
    }

    let mut instrument_defects = Vec::new();
    if !validate_instrument(&w.c, tol).valid {
        instrument_defects.push("C".to_string());
    }
    for (z, p) in &w.post {
        if !validate_instrument(p, tol).valid {
            instrument_defects.push(format!("P^{z}"));
        }
    }
    let valid = instrument_defects.is_empty()
        && t_res.values().chain(g_res.values()).all(|&r| r <= tol.mat_eq);
    Ok(WitnessReport {
        t_residuals: t_res,
        g_residuals: g_res,
        instrument_defects,
        valid,
    })
}

/// Every instrument fails to exclude itself: `C = T`, trivial `E`,
/// `S_x = {x}`, `P^z_y = δ_{zy} id`.
pub fn self_witness(t: &Instrument) -> Result<ExclusionWitness> {
    let d = t.dim_out();
    let labels: Vec<String> = t.labels().map(str::to_string).collect();
    let partition = labels.iter().map(|x| (x.clone(), vec![x.clone()])).collect();
    let post = labels
        .iter()
        .map(|z| {
            let ins = Instrument::new(labels.iter().map(|y| {
                let op = if y == z {
                    QuantumOperation::identity(d)
                } else {
                    QuantumOperation::zero(d, d)
                };
                (y.clone(), op)
            }))?;
            Ok((z.clone(), ins))
        })
        .collect::<Result<IndexMap<_, _>>>()?;
    ExclusionWitness::new(t.clone(), (d, 1), partition, post)
}

/// Builds `G_y = sum_x cond[x]_y ∘ T_x` together with the witness
/// `C = T`, `S_x = {x}`, `P^x = cond[x]`.
pub fn postprocessing_witness(
    t: &Instrument,
    cond: &IndexMap<String, Instrument>,
) -> Result<(Instrument, ExclusionWitness)> {
    let t_labels: IndexSet<&str> = t.labels().collect();
    let c_labels: IndexSet<&str> = cond.keys().map(String::as_str).collect();
    if t_labels != c_labels {
        return structure("conditional family must have one instrument per outcome of T");
    }
    let first = cond.values().next().expect("T has outcomes");
    let y_labels: Vec<String> = first.labels().map(str::to_string).collect();
    for (x, p) in cond {
        if p.dim_in() != t.dim_out() {
            return structure(format!(
                "conditional `{x}` takes dimension {}, T outputs {}",
                p.dim_in(),
                t.dim_out()
            ));
        }
        if p.dim_out() != first.dim_out() {
            return structure("conditional instruments have different output dimensions");
        }
        let ys: IndexSet<&str> = p.labels().collect();
        if ys != y_labels.iter().map(String::as_str).collect::<IndexSet<&str>>() {
            return structure(format!("conditional `{x}` has a different outcome set"));
        }
    }
    let g = Instrument::new(
        y_labels
            .iter()
            .map(|y| {
                let kraus: Vec<CMatrix> = t
                    .outcomes()
                    .iter()
                    .map(|(x, tx)| compose_seq(&cond[x.as_str()].outcomes()[y.as_str()], tx))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .flat_map(|op| op.kraus().to_vec())
                    .collect();
                Ok((y.clone(), QuantumOperation::new(t.dim_in(), first.dim_out(), kraus)?))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let partition = t
        .labels()
        .map(|x| (x.to_string(), vec![x.to_string()]))
        .collect();
    let w = ExclusionWitness::new(t.clone(), (t.dim_out(), 1), partition, cond.clone())?;
    Ok((g, w))
}

/// Decides weak compatibility of elementary properties: they are compatible
/// exactly when they are not complementary.
pub fn are_compatible_elementary(
    p: &ElementaryProperty,
    q: &ElementaryProperty,
    tol: &Tolerances,
) -> Result<bool> {
    Ok(!are_complementary(p, q, tol)?.complementary)
}

/// Largest commutator norm `||[Π_x, Π'_y]||_F` over all pairs.
pub fn max_commutator(p: &ElementaryProperty, q: &ElementaryProperty) -> Result<f64> {
    if p.dim() != q.dim() {
        return structure(format!("properties act on dimensions {} and {}", p.dim(), q.dim()));
    }
    let mut worst = 0.0f64;
    for a in p.projectors().values() {
        for b in q.projectors().values() {
            worst = worst.max(frobenius(&(a * b - b * a)));
        }
    }
    Ok(worst)
}

pub fn pvm_commute(p: &ElementaryProperty, q: &ElementaryProperty, tol: &Tolerances) -> Result<bool> {
    Ok(max_commutator(p, q)? <= tol.mat_eq)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionCase {
    pub trial: usize,
    pub g_outcome: String,
    /// `T` outcome whose verifier support contains that of `G_y`.
    pub matched_t: Option<String>,
    pub g_support_dim: usize,
    pub included: bool,
}

#[derive(Debug, Clone)]
pub struct HarnessReport {
    pub seed: u64,
    pub generator: &'static str,
    pub trials: usize,
    /// Trials meeting the hypotheses (every `G_y` atomic and nonzero).
    pub accepted: usize,
    pub discarded: usize,
    pub violations: usize,
    pub cases: Vec<InclusionCase>,
}

impl HarnessReport {
    fn from_trials(seed: u64, trials: usize, outcomes: Vec<Option<Vec<InclusionCase>>>) -> Self {
        let accepted = outcomes.iter().filter(|o| o.is_some()).count();
        let cases: Vec<InclusionCase> = outcomes.into_iter().flatten().flatten().collect();
        let violations = cases.iter().filter(|c| !c.included).count();
        Self {
            seed,
            generator: GENERATOR_ALGORITHM,
            trials,
            accepted,
            discarded: trials - accepted,
            violations,
            cases,
        }
    }

    pub(crate) fn assemble(seed: u64, trials: usize, outcomes: Vec<Option<Vec<InclusionCase>>>) -> Self {
        Self::from_trials(seed, trials, outcomes)
    }
}

/// For every outcome of `g`, looks for an outcome of `t` whose verifier
/// support contains that of `g_y`.
pub fn check_verifier_inclusion(
    t: &Instrument,
    g: &Instrument,
    trial: usize,
    tol: &Tolerances,
) -> Result<Vec<InclusionCase>> {
    let t_supports: Vec<(String, Subspace)> = t
        .outcomes()
        .iter()
        .map(|(x, op)| (x.clone(), verifier_support(op, tol)))
        .collect();
    g.outcomes()
        .iter()
        .map(|(y, gy)| {
            let s = verifier_support(gy, tol);
            let mut matched = None;
            for (x, sx) in &t_supports {
                if matches!(
                    subspace_relation(&s, sx, tol)?,
                    SubspaceRelation::Equal | SubspaceRelation::AInsideB
                ) {
                    matched = Some(x.clone());
                    if !s.is_empty() {
                        break;
                    }
                }
            }
            Ok(InclusionCase {
                trial,
                g_outcome: y.clone(),
                included: matched.is_some(),
                matched_t: matched,
                g_support_dim: s.dim(),
            })
        })
        .collect()
}

/// Random conditional family for `t` (an elementary property of dimension
/// `d`). Each conditional owns a disjoint block of `G` outcomes; within its
/// block it is a unitary, a split along a subspace of `range(Π_x)`, or a
/// generic isometric split. Occasionally an outcome is shared between two
/// conditionals, which breaks atomicity of the resulting `G_y`.
fn random_conditionals(
    t: &ElementaryProperty,
    gen: &mut SeededGenerator,
) -> Result<IndexMap<String, Instrument>> {
    let d = t.dim();
    let xs: Vec<String> = t.labels().map(str::to_string).collect();
    let mut blocks: Vec<Vec<(String, CMatrix)>> = Vec::new();
    let mut next = 0usize;
    let fresh = |n: &mut usize| {
        let l = format!("y{n}");
        *n += 1;
        l
    };
    for x in &xs {
        let pi = &t.projectors()[x.as_str()];
        let rank = crate::linalg::trace_re(pi).round() as usize;
        let mut block = Vec::new();
        match gen.range(0, 2) {
            0 => block.push((fresh(&mut next), haar_unitary(d, gen)?)),
            1 if rank >= 2 => {
                // Split range(Π_x) into S and its complement inside the range.
                let range = crate::linalg::range_subspace(pi, &Tolerances::default())?;
                let k = gen.range(1, rank - 1);
                let rot = haar_unitary(rank, gen)?;
                let inner = range.basis() * rot.columns(0, k);
                let p1 = &inner * inner.adjoint();
                let p2 = crate::linalg::identity(d) - &p1;
                block.push((fresh(&mut next), haar_unitary(d, gen)? * p1));
                block.push((fresh(&mut next), haar_unitary(d, gen)? * p2));
            }
            _ => {
                let v = haar_isometry(2 * d, d, gen)?;
                block.push((fresh(&mut next), v.rows(0, d).into_owned()));
                block.push((fresh(&mut next), v.rows(d, d).into_owned()));
            }
        }
        blocks.push(block);
    }
    // Occasional collision: move one outcome of a block onto a label owned by another block.
    if xs.len() >= 2 && gen.chance(0.2) {
        let a = gen.range(0, xs.len() - 1);
        let mut b = gen.range(0, xs.len() - 2);
        if b >= a {
            b += 1;
        }
        let target = blocks[b][0].0.clone();
        let last = blocks[a].len() - 1;
        blocks[a][last].0 = target;
    }
    let mut all_labels: Vec<String> = Vec::new();
    for block in &blocks {
        for (l, _) in block {
            if !all_labels.contains(l) {
                all_labels.push(l.clone());
            }
        }
    }
    xs.iter()
        .zip(&blocks)
        .map(|(x, block)| {
            let outcomes = all_labels.iter().map(|y| {
                let kraus: Vec<CMatrix> = block
                    .iter()
                    .filter(|(l, _)| l == y)
                    .map(|(_, k)| k.clone())
                    .collect();
                let op = if kraus.is_empty() {
                    QuantumOperation::zero(d, d)
                } else {
                    QuantumOperation::new(d, d, kraus)?
                };
                Ok((y.clone(), op))
            });
            let ins = Instrument::new(outcomes.collect::<Result<Vec<_>>>()?)?;
            Ok((x.clone(), ins))
        })
        .collect()
}

fn is_zero_map(op: &QuantumOperation, tol: &Tolerances) -> bool {
    frobenius(&op.effect()) <= tol.mat_eq
}

fn quantum_trial(index: usize, dim: usize, root: &SeededGenerator, tol: &Tolerances) -> Result<Option<Vec<InclusionCase>>> {
    let mut gen = root.child(index as u64);
    let ranks = random_rank_profile(dim, &mut gen);
    let t = random_pvm(dim, &ranks, &mut gen)?;
    let cond = random_conditionals(&t, &mut gen)?;
    let (g, _) = postprocessing_witness(t.instrument(), &cond)?;
    let meets_hypotheses = g
        .outcomes()
        .values()
        .all(|gy| !is_zero_map(gy, tol) && is_atomic(gy, tol));
    if !meets_hypotheses {
        return Ok(None);
    }
    check_verifier_inclusion(t.instrument(), &g, index, tol).map(Some)
}

/// Randomised check that `T` not excluding `G` (via a post-processing
/// witness) implies `verSt(G_y) ⊆ verSt(T_x)` for atomic nonzero `G_y`.
/// Trials run in parallel on the current rayon pool.
pub fn verifier_inclusion_harness(seed: u64, dim: usize, trials: usize, tol: &Tolerances) -> Result<HarnessReport> {
    if dim == 0 || dim > 4 {
        return structure(format!("harness dimension must be in 1..=4, got {dim}"));
    }
    let root = SeededGenerator::new(seed);
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| quantum_trial(i, dim, &root, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(HarnessReport::from_trials(seed, trials, outcomes))
}
