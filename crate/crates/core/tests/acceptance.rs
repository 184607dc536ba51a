//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use qcompl_core::classical::{classical_theorem_harness, classical_verifier_checks, ClassicalOperation, ClassicalState};
use qcompl_core::compatibility::{
    are_compatible_elementary, pvm_commute, self_witness, verifier_inclusion_harness, verify_witness,
};
use qcompl_core::complementarity::{are_complementary, classify_relation, outcome_entropy, DegreeKind};
use qcompl_core::instruments::{coarse_grain, from_pvm, is_repeatable, to_elementary, OutcomePartition};
use qcompl_core::linalg::{
    basis_projector, basis_vector, c, frobenius_distance, identity, outer, range_subspace, real,
    subspace_relation, CMatrix, CVector,
};
use qcompl_core::quantum_ops::is_atomic;
use qcompl_core::randgen::{
    haar_unitary, random_density, random_density_in, random_instrument, random_projectors, random_rank_profile,
};
use qcompl_core::verifiers::{fixed_point_residual, is_fixed_point, is_verifier, verifier_support};
use qcompl_core::{
    ElementaryProperty, Error, Instrument, QuantumOperation, SeededGenerator, SubspaceRelation, Tolerances,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn pvm(projs: &[CMatrix]) -> ElementaryProperty {
    from_pvm(projs.iter().cloned().enumerate().map(|(i, p)| (format!("x{i}"), p)), &tol()).unwrap()
}

fn hadamard_vectors() -> (CVector, CVector) {
    let h = real(std::f64::consts::FRAC_1_SQRT_2);
    (CVector::from_vec(vec![h, h]), CVector::from_vec(vec![h, -h]))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let z = pvm(&[basis_projector(2, 0), basis_projector(2, 1)]);
    let (plus, minus) = hadamard_vectors();
    let x = pvm(&[outer(&plus), outer(&minus)]);
    let r = classify_relation(&z, &x, &tol()).map_err(|e| e.to_string())?;
    ensure(r.complementary, || "Z and X not classified complementary".into())?;
    let mut worst = 0.0f64;
    for v in r.degree_table.values().chain(r.reverse_table.values()) {
        ensure(v.kind == DegreeKind::Strong, || format!("degree {} instead of strong", v.kind))?;
        for p in v.probabilities.values() {
            worst = worst.max((p - 0.5).abs());
        }
    }
    ensure(worst <= 1e-7, || format!("probability off 0.5 by {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("all 4 entries strong, max |p-0.5| = {worst:.1e}, {:?}", start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (plus, minus) = hadamard_vectors();
    let embed = |v: &CVector| CVector::from_vec(vec![v[0], v[1], real(0.0)]);
    let fine = pvm(&[basis_projector(3, 0), basis_projector(3, 1), basis_projector(3, 2)]);
    let rotated = pvm(&[outer(&embed(&plus)), outer(&embed(&minus)), basis_projector(3, 2)]);
    let part = OutcomePartition::new([("01", vec!["x0", "x1"]), ("2", vec!["x2"])]).unwrap();
    let a = coarse_grain(fine.instrument(), &part).map_err(|e| e.to_string())?;
    let b = coarse_grain(rotated.instrument(), &part).map_err(|e| e.to_string())?;

    let low = {
        let mut m = CMatrix::zeros(3, 2);
        m.set_column(0, &basis_vector(3, 0));
        m.set_column(1, &basis_vector(3, 1));
        qcompl_core::Subspace::span(&m, &tol()).unwrap()
    };
    let high = qcompl_core::Subspace::span(&CMatrix::from_columns(&[basis_vector(3, 2)]), &tol()).unwrap();
    for (label, expected) in [("01", &low), ("2", &high)] {
        let sa = verifier_support(a.operation(label).unwrap(), &tol());
        let sb = verifier_support(b.operation(label).unwrap(), &tol());
        for s in [&sa, &sb] {
            let rel = subspace_relation(s, expected, &tol()).map_err(|e| e.to_string())?;
            ensure(rel == SubspaceRelation::Equal, || format!("outcome {label}: support relation {rel:?}"))?;
        }
    }
    for (name, ins) in [("computational", &a), ("rotated", &b)] {
        match to_elementary(ins, &tol()) {
            Err(Error::NotAtomic { label, rank }) if label == "01" && rank == 2 => {}
            other => return Err(format!("{name} coarse instrument: expected non-atomic rejection, got {other:?}")),
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("supports equal, both rejected as non-atomic (rank 2), {:?}", start.elapsed()))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let root = SeededGenerator::new(3);
    let mut worst = 0.0f64;
    for i in 0..1000u64 {
        let mut g = root.child(i);
        let d = g.range(1, 5);
        let ranks = random_rank_profile(d, &mut g);
        let projs = random_projectors(d, &ranks, &mut g).unwrap();
        let ins = Instrument::new(projs.iter().enumerate().map(|(k, p)| {
            (format!("x{k}"), QuantumOperation::single(p * g.phase()).unwrap())
        }))
        .unwrap();
        ensure(is_repeatable(&ins, &tol()).unwrap_or(false), || format!("trial {i}: not repeatable"))?;
        ensure(ins.outcomes().values().all(|op| is_atomic(op, &tol())), || format!("trial {i}: not atomic"))?;
        let e = to_elementary(&ins, &tol()).map_err(|e| format!("trial {i}: {e}"))?;
        for (k, p) in projs.iter().enumerate() {
            worst = worst.max(frobenius_distance(e.projector(&format!("x{k}")).unwrap(), p));
        }
    }
    ensure(worst <= 1e-8, || format!("projector error {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("1000 instruments, max projector error {worst:.1e}, {:?}", start.elapsed()))
}

/// Permutation `σ` with `Π_x ≈ Π'_σ(x)`, found by brute force.
fn matching_permutation(a: &[CMatrix], b: &[CMatrix]) -> Option<Vec<usize>> {
    fn go(a: &[CMatrix], b: &[CMatrix], used: &mut Vec<bool>, acc: &mut Vec<usize>) -> bool {
        let i = acc.len();
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if !used[j] && frobenius_distance(&a[i], &b[j]) <= 1e-8 {
                used[j] = true;
                acc.push(j);
                if go(a, b, used, acc) {
                    return true;
                }
                acc.pop();
                used[j] = false;
            }
        }
        false
    }
    if a.len() != b.len() {
        return None;
    }
    let mut acc = Vec::new();
    go(a, b, &mut vec![false; b.len()], &mut acc).then_some(acc)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let root = SeededGenerator::new(4);
    let mut complementary = 0;
    for i in 0..500u64 {
        let mut g = root.child(i);
        let d = g.range(1, 4);
        let pa = random_projectors(d, &random_rank_profile(d, &mut g), &mut g).unwrap();
        let pb = random_projectors(d, &random_rank_profile(d, &mut g), &mut g).unwrap();
        let (p, q) = (pvm(&pa), pvm(&pb));
        let comp = are_complementary(&p, &q, &tol()).map_err(|e| e.to_string())?.complementary;
        let compat = are_compatible_elementary(&p, &q, &tol()).map_err(|e| e.to_string())?;
        ensure(comp != compat, || format!("pair {i}: complementary={comp}, compatible={compat}"))?;
        let oracle_equal = matching_permutation(&pa, &pb).is_some();
        ensure(comp != oracle_equal, || format!("pair {i}: verdict disagrees with projector matching"))?;
        complementary += usize::from(comp);
    }
    for i in 0..100u64 {
        let mut g = root.child(10_000 + i);
        let d = g.range(1, 4);
        let pa = random_projectors(d, &random_rank_profile(d, &mut g), &mut g).unwrap();
        let mut order: Vec<usize> = (0..pa.len()).collect();
        g.shuffle(&mut order);
        let q = from_pvm(order.iter().map(|&k| (format!("y{k}"), pa[k].clone())), &tol()).unwrap();
        let p = pvm(&pa);
        ensure(are_compatible_elementary(&p, &q, &tol()).unwrap(), || format!("permuted pair {i} incompatible"))?;
        let b = are_complementary(&p, &q, &tol()).unwrap().bijection.ok_or("no bijection")?;
        for (x, y) in &b {
            ensure(x[1..] == y[1..], || format!("permuted pair {i}: {x} mapped to {y}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "500 random pairs ({complementary} complementary) consistent, 100 permuted pairs matched, {:?}",
        start.elapsed()
    ))
}

fn criterion_5() -> Outcome {
    let root = SeededGenerator::new(5);
    let mut worst = 0.0f64;
    for i in 0..500u64 {
        let mut g = root.child(i);
        let d = g.range(2, 5);
        let r = g.range(1, d - 1);
        let projs = random_projectors(d, &[r, d - r], &mut g).unwrap();
        let op = QuantumOperation::single(projs[0].clone()).unwrap();
        let range = range_subspace(&projs[0], &tol()).unwrap();
        let rho = random_density_in(&range, g.range(1, r), &mut g).unwrap();
        let v = is_verifier(&op, &rho, &tol()).unwrap();
        let f = is_fixed_point(&op, &rho, &tol()).unwrap();
        let res = fixed_point_residual(&op, &rho).unwrap();
        worst = worst.max(res);
        ensure(v && f && res <= 1e-9, || format!("supported trial {i}: verifier={v} fixed={f} residual={res:e}"))?;

        let outside = random_density(d, g.range(1, d), &mut g).unwrap();
        let v = is_verifier(&op, &outside, &tol()).unwrap();
        let f = is_fixed_point(&op, &outside, &tol()).unwrap();
        ensure(!v && !f, || format!("unsupported trial {i}: verifier={v} fixed={f}"))?;
    }
    Ok(format!("500 supported + 500 unsupported states, max residual {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut q_accepted = 0;
    let mut q_violations = 0;
    for dim in 1..=3 {
        let r = verifier_inclusion_harness(60 + dim as u64, dim, 300, &tol()).map_err(|e| e.to_string())?;
        q_accepted += r.accepted;
        q_violations += r.violations;
    }
    let mut c_accepted = 0;
    let mut c_violations = 0;
    for n in 1..=4 {
        let r = classical_theorem_harness(70 + n as u64, n, 500, &tol()).map_err(|e| e.to_string())?;
        c_accepted += r.accepted;
        c_violations += r.violations;
    }
    ensure(q_violations == 0 && c_violations == 0, || {
        format!("violations: quantum {q_violations}, classical {c_violations}")
    })?;
    ensure(q_accepted >= 200 && c_accepted >= 200, || {
        format!("filtered trials: quantum {q_accepted}, classical {c_accepted}")
    })?;
    Ok(format!("quantum {q_accepted} trials, classical {c_accepted} trials, 0 violations"))
}

fn perturbed_residual(t: &Instrument, eps: f64) -> f64 {
    let (label, op) = t.outcomes().first().unwrap();
    let mut kraus = op.kraus().to_vec();
    kraus[0][(0, 0)] += real(eps);
    let bumped = QuantumOperation::new(op.dim_in(), op.dim_out(), kraus).unwrap();
    let w = self_witness(t).unwrap().with_c_operation(label, bumped).unwrap();
    verify_witness(t, t, &w, &tol()).unwrap().max_residual()
}

fn criterion_7() -> Outcome {
    let root = SeededGenerator::new(7);
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut g = root.child(i);
        let din = g.range(1, 4);
        let dout = g.range(1, 4);
        let outcomes = g.range(1, 3);
        let mut counts: Vec<usize> = (0..outcomes).map(|_| g.range(1, 2)).collect();
        while counts.iter().sum::<usize>() * dout < din {
            counts[0] += 1;
        }
        let t = random_instrument(din, dout, &counts, &mut g).unwrap();
        let r = verify_witness(&t, &t, &self_witness(&t).unwrap(), &tol()).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_residual());
        ensure(r.valid && r.max_residual() <= 1e-10, || format!("instrument {i}: residual {:e}", r.max_residual()))?;
    }
    let t = random_instrument(3, 3, &[1, 1, 1], &mut root.child(1000)).unwrap();
    let r3 = perturbed_residual(&t, 1e-3);
    ensure(r3 > 1e-4, || format!("1e-3 perturbation gave residual {r3:e}"))?;
    let ratios: Vec<f64> = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
        .iter()
        .map(|&eps| perturbed_residual(&t, eps) / eps)
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    ensure(hi / lo <= 3.0, || format!("residual/eps ranges over [{lo:.3}, {hi:.3}]"))?;
    Ok(format!(
        "self-witness max residual {worst:.1e}; 1e-3 bump -> {r3:.2e}; residual/eps in [{lo:.3}, {hi:.3}]"
    ))
}

fn criterion_8() -> Outcome {
    let t = tol();
    let mp = ClassicalOperation::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let point = classical_verifier_checks(&mp, &ClassicalState::point(2, 0), &t).map_err(|e| e.to_string())?;
    let half = ClassicalState::new(vec![0.5, 0.5], &t).map_err(|e| e.to_string())?;
    let mixed = classical_verifier_checks(&mp, &half, &t).map_err(|e| e.to_string())?;
    ensure(point.is_verifier && point.is_strong, || format!("(1,0): {point:?}"))?;
    ensure(mixed.is_verifier && !mixed.is_strong, || format!("(1/2,1/2): {mixed:?}"))?;
    Ok("(1,0) verifier and strong; (1/2,1/2) verifier only".into())
}

fn criterion_9() -> Outcome {
    let fine = pvm(&[basis_projector(3, 0), basis_projector(3, 1), basis_projector(3, 2)]);
    let coarse = pvm(&[basis_projector(3, 0), identity(3) - basis_projector(3, 0)]);
    let commute = pvm_commute(&fine, &coarse, &tol()).map_err(|e| e.to_string())?;
    let compat = are_compatible_elementary(&fine, &coarse, &tol()).map_err(|e| e.to_string())?;
    let comp = are_complementary(&fine, &coarse, &tol()).map_err(|e| e.to_string())?.complementary;
    ensure(commute && !compat && comp, || {
        format!("commute={commute} compatible={compat} complementary={comp}")
    })?;
    Ok("commute = true, compatible = false, complementary = true".into())
}

/// Fourier basis of dimension `d`, rotated by `u`.
fn rotated_fourier(d: usize, u: &CMatrix) -> Vec<CMatrix> {
    (0..d)
        .map(|k| {
            let v = CVector::from_fn(d, |j, _| {
                let a = std::f64::consts::TAU * (j * k) as f64 / d as f64;
                c(a.cos(), a.sin()) / real((d as f64).sqrt())
            });
            outer(&(u * v))
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let t = tol();
    let h_half = outcome_entropy(&[0.5, 0.5], true, &t).map_err(|e| e.to_string())?;
    let h_34 = outcome_entropy(&[0.75, 0.25], true, &t).map_err(|e| e.to_string())?;
    let oracle_34 = 2.0 - 0.75 * 3f64.log2();
    ensure((h_half - 1.0).abs() <= 1e-12, || format!("H(1/2,1/2) = {h_half}"))?;
    ensure((h_34 - 0.811278).abs() <= 1e-6 && (h_34 - oracle_34).abs() <= 1e-12, || {
        format!("H(3/4,1/4) = {h_34}")
    })?;

    let root = SeededGenerator::new(10);
    let mut strong_entries = 0;
    for i in 0..200u64 {
        let mut g = root.child(i);
        let d = g.range(2, 4);
        let u = haar_unitary(d, &mut g).unwrap();
        let computational: Vec<CMatrix> = (0..d)
            .map(|k| {
                let e = &u * basis_vector(d, k);
                outer(&e)
            })
            .collect();
        let (p, q) = (pvm(&computational), pvm(&rotated_fourier(d, &u)));
        let r = classify_relation(&p, &q, &t).map_err(|e| e.to_string())?;
        for v in r.degree_table.values().chain(r.reverse_table.values()) {
            let n = v.probabilities.len();
            let max_entropy = (v.entropy_bits - (n as f64).log2()).abs() <= 1e-6;
            let strong = v.kind == DegreeKind::Strong;
            ensure(strong && max_entropy, || {
                format!("trial {i}: kind {} with H = {} over {n} outcomes", v.kind, v.entropy_bits)
            })?;
            strong_entries += 1;
        }
    }
    Ok(format!(
        "H(1/2,1/2) = {h_half:.6}, H(3/4,1/4) = {h_34:.6}, {strong_entries} entries from 200 unbiased pairs strong at maximal entropy"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("mutually unbiased qubit pair is strongly complementary", criterion_1),
        ("qutrit coarse instruments share verifiers but are not elementary", criterion_2),
        ("projector extraction round-trip", criterion_3),
        ("complementary iff not compatible", criterion_4),
        ("projective verifiers are fixed points", criterion_5),
        ("verifier inclusion under post-processing", criterion_6),
        ("exclusion witness residuals", criterion_7),
        ("classical strong verifier counterexample", criterion_8),
        ("commutation does not imply compatibility", criterion_9),
        ("outcome entropy and strong degree", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
