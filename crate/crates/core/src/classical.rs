//! Finite classical theory.
//!
//! States are column probability vectors, operations act by left
//! multiplication with nonnegative matrices, and the deterministic effect is
//! the all-ones covector. An operation is atomic when it has at most one
//! nonzero entry (an extremal ray of the nonnegative cone).

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::compatibility::{HarnessReport, InclusionCase};
use crate::error::{structure, Error, Result};
use crate::linalg::Tolerances;
use crate::randgen::SeededGenerator;

pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// A nonnegative `size_out x size_in` matrix; substochasticity is checked
/// by [`validate_classical`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalOperation {
    matrix: RMatrix,
}

impl ClassicalOperation {
    pub fn new(matrix: RMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return structure("classical operation must have positive sizes");
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return structure("classical operation has non-finite entries");
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return structure("ragged classical matrix");
        }
        Self::new(RMatrix::from_fn(r, c, |i, j| rows[i][j]))
    }

    /// Matrix unit `E_ij` of size `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = RMatrix::zeros(n, n);
        m[(i, j)] = 1.0;
        Self { matrix: m }
    }

    pub fn zero(size_in: usize, size_out: usize) -> Self {
        Self {
            matrix: RMatrix::zeros(size_out, size_in),
        }
    }

    pub fn size_in(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn size_out(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    /// Probability of occurrence on each input point.
    pub fn column_sums(&self) -> RVector {
        RVector::from_iterator(self.size_in(), self.matrix.column_iter().map(|c| c.sum()))
    }

    pub fn nonzero_count(&self, tol: &Tolerances) -> usize {
        self.matrix.iter().filter(|v| v.abs() > tol.prob_eq).count()
    }

    pub fn is_atomic(&self, tol: &Tolerances) -> bool {
        self.nonzero_count(tol) <= 1
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &ClassicalOperation) -> Result<Self> {
        if first.size_out() != self.size_in() {
            return structure("classical composition with mismatched sizes");
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Input points on which the operation occurs with certainty.
    pub fn verifier_points(&self, tol: &Tolerances) -> Vec<usize> {
        self.column_sums()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= 1.0 - tol.prob_eq)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalInstrument {
    size_in: usize,
    size_out: usize,
    outcomes: IndexMap<String, ClassicalOperation>,
}

impl ClassicalInstrument {
    pub fn new<L: Into<String>>(outcomes: impl IntoIterator<Item = (L, ClassicalOperation)>) -> Result<Self> {
        let mut map = IndexMap::new();
        for (l, op) in outcomes {
            let l = l.into();
            if map.contains_key(&l) {
                return structure(format!("duplicate outcome label `{l}`"));
            }
            map.insert(l, op);
        }
        let Some(first) = map.values().next() else {
            return structure("instrument needs at least one outcome");
        };
        let (size_in, size_out) = (first.size_in(), first.size_out());
        if map
            .values()
            .any(|op| (op.size_in(), op.size_out()) != (size_in, size_out))
        {
            return structure("classical outcomes must share sizes");
        }
        Ok(Self {
            size_in,
            size_out,
            outcomes: map,
        })
    }

    /// `{E_00, E_11, ...}` labelled by point index.
    pub fn fine_grained(n: usize) -> Self {
        Self {
            size_in: n,
            size_out: n,
            outcomes: (0..n)
                .map(|i| (i.to_string(), ClassicalOperation::unit(n, i, i)))
                .collect(),
        }
    }

    pub fn size_in(&self) -> usize {
        self.size_in
    }

    pub fn size_out(&self) -> usize {
        self.size_out
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &IndexMap<String, ClassicalOperation> {
        &self.outcomes
    }

    pub fn operation(&self, label: &str) -> Option<&ClassicalOperation> {
        self.outcomes.get(label)
    }

    pub fn total(&self) -> RMatrix {
        self.outcomes
            .values()
            .fold(RMatrix::zeros(self.size_out, self.size_in), |acc, op| acc + op.matrix())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalState {
    probs: RVector,
}

impl ClassicalState {
    pub fn new(probs: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidState("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -tol.prob_eq) {
            return Err(Error::InvalidState("negative or non-finite probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol.prob_eq {
            return Err(Error::InvalidState(format!("probabilities sum to {sum}")));
        }
        Ok(Self {
            probs: RVector::from_vec(probs),
        })
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut probs = RVector::zeros(n);
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &RVector {
        &self.probs
    }

    pub fn support(&self, tol: &Tolerances) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > tol.prob_eq)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalOutcomeReport {
    pub nonnegative: bool,
    pub substochastic: bool,
}

#[derive(Debug, Clone)]
pub struct ClassicalReport {
    pub outcomes: IndexMap<String, ClassicalOutcomeReport>,
    /// Largest deviation of a column sum of the total from one.
    pub stochastic_residual: f64,
    pub stochastic_sum: bool,
    pub valid: bool,
}

impl ClassicalReport {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (l, r) in &self.outcomes {
            if !r.nonnegative {
                out.push(format!("outcome `{l}` has negative entries"));
            }
            if !r.substochastic {
                out.push(format!("outcome `{l}` has a column sum above one"));
            }
        }
        if !self.stochastic_sum {
            out.push(format!(
                "summed matrix is not column-stochastic (residual {:e})",
                self.stochastic_residual
            ));
        }
        out
    }
}

pub fn validate_classical(ins: &ClassicalInstrument, tol: &Tolerances) -> ClassicalReport {
    let outcomes: IndexMap<String, ClassicalOutcomeReport> = ins
        .outcomes
        .iter()
        .map(|(l, op)| {
            let nonnegative = op.matrix.iter().all(|&v| v >= -tol.prob_eq);
            let substochastic = op.column_sums().iter().all(|&s| s <= 1.0 + tol.prob_eq);
            (
                l.clone(),
                ClassicalOutcomeReport {
                    nonnegative,
                    substochastic,
                },
            )
        })
        .collect();
    let total = ins.total();
    let stochastic_residual = total
        .column_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let stochastic_sum = stochastic_residual <= tol.prob_eq;
    let valid = stochastic_sum && outcomes.values().all(|r| r.nonnegative && r.substochastic);
    ClassicalReport {
        outcomes,
        stochastic_residual,
        stochastic_sum,
        valid,
    }
}

/// `M_x M_x' = δ_{xx'} M_x` for every ordered pair.
pub fn classical_is_repeatable(ins: &ClassicalInstrument, tol: &Tolerances) -> bool {
    if ins.size_in != ins.size_out {
        return false;
    }
    ins.outcomes.values().enumerate().all(|(i, a)| {
        ins.outcomes.values().enumerate().all(|(j, b)| {
            let prod = a.matrix() * b.matrix();
            let target = if i == j { a.matrix().clone() } else { RMatrix::zeros(ins.size_out, ins.size_in) };
            (prod - target).abs().max() <= tol.prob_eq
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalElementary {
    pub is_elementary: bool,
    /// `(point, outcome label)` sorted by point: the fine-grained instrument
    /// up to relabelling.
    pub canonical: Option<Vec<(usize, String)>>,
}

/// Valid, repeatable, atomic, and every outcome has a verifier. Such an
/// instrument is necessarily `{E_ii}` up to relabelling.
pub fn classical_is_elementary(ins: &ClassicalInstrument, tol: &Tolerances) -> ClassicalElementary {
    let no = ClassicalElementary {
        is_elementary: false,
        canonical: None,
    };
    if ins.size_in != ins.size_out || !validate_classical(ins, tol).valid {
        return no;
    }
    if !ins.outcomes.values().all(|op| op.is_atomic(tol)) || !classical_is_repeatable(ins, tol) {
        return no;
    }
    let mut canonical = Vec::with_capacity(ins.len());
    for (l, op) in &ins.outcomes {
        match op.verifier_points(tol).as_slice() {
            [i] => canonical.push((*i, l.clone())),
            _ => return no,
        }
    }
    canonical.sort();
    ClassicalElementary {
        is_elementary: true,
        canonical: Some(canonical),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalVerifierChecks {
    pub is_verifier: bool,
    pub is_strong: bool,
}

pub fn classical_verifier_checks(
    op: &ClassicalOperation,
    state: &ClassicalState,
    tol: &Tolerances,
) -> Result<ClassicalVerifierChecks> {
    if state.size() != op.size_in() {
        return structure(format!(
            "state has {} points, operation expects {}",
            state.size(),
            op.size_in()
        ));
    }
    let out = op.matrix() * state.probs();
    let is_verifier = out.sum() >= 1.0 - tol.prob_eq;
    let is_strong = op.size_out() == op.size_in()
        && (out - state.probs()).iter().all(|d| d.abs() <= tol.prob_eq);
    Ok(ClassicalVerifierChecks {
        is_verifier,
        is_strong,
    })
}

fn random_distribution(n: usize, gen: &mut SeededGenerator) -> Vec<f64> {
    if gen.chance(0.5) {
        let mut v = vec![0.0; n];
        v[gen.range(0, n - 1)] = 1.0;
        return v;
    }
    let raw: Vec<f64> = (0..n).map(|_| gen.uniform() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// One trial: `t` = relabelled fine-grained instrument,
/// `C_x(p) = p_x (e_x ⊗ σ_x)` on `n·m` points, deterministic post-processings
/// `P^z` that route each point `(i, e)` to one outcome and one output point.
/// Outcomes of `G` are split into blocks owned by one `x` each, with an
/// occasional collision across blocks.
fn classical_trial(
    index: usize,
    n: usize,
    root: &SeededGenerator,
    tol: &Tolerances,
) -> Result<Option<Vec<InclusionCase>>> {
    let mut gen = root.child(index as u64);
    let mut labels: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    gen.shuffle(&mut labels);
    let t = ClassicalInstrument::new(
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), ClassicalOperation::unit(n, i, i))),
    )?;

    let m = gen.range(1, 3);
    let sigmas: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(m, &mut gen)).collect();
    let c_ops: Vec<ClassicalOperation> = (0..n)
        .map(|x| {
            let mut mat = RMatrix::zeros(n * m, n);
            for e in 0..m {
                mat[(x * m + e, x)] = sigmas[x][e];
            }
            ClassicalOperation::new(mat)
        })
        .collect::<Result<_>>()?;

    // Outcome blocks: x owns 1..=2 fresh labels.
    let mut owned: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut y_count = 0;
    for _ in 0..n {
        let k = gen.range(1, 2);
        owned.push((y_count..y_count + k).collect());
        y_count += k;
    }
    let collide = n >= 2 && gen.chance(0.2);
    let (collide_from, collide_to) = if collide {
        let a = gen.range(0, n - 1);
        let b = (a + gen.range(1, n - 1)) % n;
        (a, owned[b][0])
    } else {
        (usize::MAX, 0)
    };

    // P^z routes every input point (i, e) to one outcome and one output point.
    let mut g = vec![RMatrix::zeros(n, n); y_count];
    for (z, cz) in c_ops.iter().enumerate() {
        let mut post = vec![RMatrix::zeros(n, n * m); y_count];
        for point in 0..n * m {
            let ys = &owned[z];
            let mut y = ys[gen.range(0, ys.len() - 1)];
            if z == collide_from && point % m == 0 {
                y = collide_to;
            }
            let j = gen.range(0, n - 1);
            post[y][(j, point)] = 1.0;
        }
        for (y, p) in post.iter().enumerate() {
            g[y] += p * cz.matrix();
        }
    }
    let g = ClassicalInstrument::new(
        g.into_iter()
            .enumerate()
            .map(|(y, mat)| Ok((format!("y{y}"), ClassicalOperation::new(mat)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;

    let meets_hypotheses = g
        .outcomes()
        .values()
        .all(|gy| gy.nonzero_count(tol) == 1);
    if !meets_hypotheses {
        return Ok(None);
    }
    Ok(Some(classical_inclusion(&t, &g, index, tol)))
}

/// For every outcome of `g`, an outcome of `t` whose verifier points contain
/// those of `g_y`.
pub fn classical_inclusion(
    t: &ClassicalInstrument,
    g: &ClassicalInstrument,
    trial: usize,
    tol: &Tolerances,
) -> Vec<InclusionCase> {
    let t_points: Vec<(String, Vec<usize>)> = t
        .outcomes()
        .iter()
        .map(|(l, op)| (l.clone(), op.verifier_points(tol)))
        .collect();
    g.outcomes()
        .iter()
        .map(|(y, gy)| {
            let pts = gy.verifier_points(tol);
            let matched = t_points
                .iter()
                .filter(|(_, tp)| pts.iter().all(|p| tp.contains(p)))
                .max_by_key(|(_, tp)| tp.iter().any(|p| pts.contains(p)))
                .map(|(l, _)| l.clone());
            InclusionCase {
                trial,
                g_outcome: y.clone(),
                included: matched.is_some(),
                matched_t: matched,
                g_support_dim: pts.len(),
            }
        })
        .collect()
}

/// Classical counterpart of the verifier-inclusion harness.
pub fn classical_theorem_harness(seed: u64, size: usize, trials: usize, tol: &Tolerances) -> Result<HarnessReport> {
    if size == 0 || size > 4 {
        return structure(format!("harness size must be in 1..=4, got {size}"));
    }
    let root = SeededGenerator::new(seed);
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| classical_trial(i, size, &root, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(HarnessReport::assemble(seed, trials, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ins(ops: Vec<(&str, Vec<Vec<f64>>)>) -> ClassicalInstrument {
        ClassicalInstrument::new(
            ops.into_iter()
                .map(|(l, rows)| (l, ClassicalOperation::from_rows(&rows).unwrap())),
        )
        .unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_classical(&ClassicalInstrument::fine_grained(2), &tol()).valid);

        let neg = ins(vec![
            ("a", vec![vec![1.1, 0.0], vec![-0.1, 1.0]]),
        ]);
        let r = validate_classical(&neg, &tol());
        assert!(!r.valid && !r.outcomes["a"].nonnegative);

        let over = ins(vec![
            ("a", vec![vec![1.2, 0.0], vec![0.0, 0.5]]),
            ("b", vec![vec![0.0, 0.0], vec![-0.2, 0.5]]),
        ]);
        let r = validate_classical(&over, &tol());
        assert!(!r.valid && !r.outcomes["a"].substochastic);
        assert!(!r.problems().is_empty());
    }

    #[test]
    fn elementary_examples() {
        let fine = classical_is_elementary(&ClassicalInstrument::fine_grained(2), &tol());
        assert!(fine.is_elementary);
        assert_eq!(fine.canonical.unwrap(), vec![(0, "0".to_string()), (1, "1".to_string())]);

        let off = ins(vec![
            ("01", vec![vec![0.0, 1.0], vec![0.0, 0.0]]),
            ("00", vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
        ]);
        assert!(validate_classical(&off, &tol()).valid);
        assert!(!classical_is_repeatable(&off, &tol()));
        assert!(!classical_is_elementary(&off, &tol()).is_elementary);

        let coarse = ins(vec![
            ("01", vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]),
            ("2", vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]),
        ]);
        assert!(!classical_is_elementary(&coarse, &tol()).is_elementary);
    }

    #[test]
    fn verifier_examples() {
        let t = tol();
        let mp = ClassicalOperation::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let r = classical_verifier_checks(&mp, &ClassicalState::point(2, 0), &t).unwrap();
        assert!(r.is_verifier && r.is_strong);
        let half = ClassicalState::new(vec![0.5, 0.5], &t).unwrap();
        let r = classical_verifier_checks(&mp, &half, &t).unwrap();
        assert!(r.is_verifier && !r.is_strong);
        let r = classical_verifier_checks(&ClassicalOperation::unit(2, 0, 0), &ClassicalState::point(2, 1), &t).unwrap();
        assert!(!r.is_verifier);
        assert!(classical_verifier_checks(&mp, &ClassicalState::point(3, 0), &t).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(ClassicalState::new(vec![0.5, 0.4], &tol()).is_err());
        assert!(ClassicalState::new(vec![1.2, -0.2], &tol()).is_err());
        assert!(ClassicalState::new(vec![], &tol()).is_err());
    }

    #[test]
    fn harness_examples() {
        let t = tol();
        let r = classical_theorem_harness(7, 3, 200, &t).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.accepted > 0 && r.accepted < 200, "accepted {}", r.accepted);
        let r = classical_theorem_harness(1, 2, 50, &t).unwrap();
        assert_eq!(r.violations, 0);
        assert!(classical_theorem_harness(1, 5, 1, &t).is_err());
    }

    #[test]
    fn identity_conditionals_give_equal_verifiers() {
        let t = ClassicalInstrument::fine_grained(3);
        let cases = classical_inclusion(&t, &t, 0, &tol());
        for c in cases {
            assert!(c.included);
            assert_eq!(c.matched_t.as_deref(), Some(c.g_outcome.as_str()));
        }
    }
}
