use std::fmt::Write as _;
use std::path::Path;

use qcompl_core::classical::{
    classical_is_elementary, classical_theorem_harness, classical_verifier_checks, validate_classical,
    ClassicalInstrument,
};
use qcompl_core::compatibility::{
    are_compatible_elementary, max_commutator, pvm_commute, verifier_inclusion_harness, verify_witness,
    HarnessReport,
};
use qcompl_core::complementarity::{classify_relation, DegreeVerdict, Side};
use qcompl_core::instruments::{is_repeatable, to_elementary, validate_instrument};
use qcompl_core::model::{complex_matrix_to_json, parse_model, ModelError, ModelFile, StateModel};
use qcompl_core::quantum_ops::is_atomic;
use qcompl_core::verifiers::{operation_report, verifier_support};
use qcompl_core::{ElementaryProperty, Error, Instrument, Tolerances};
use serde_json::{json, Map, Value};

use crate::Theory;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Model { path: String, source: ModelError },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Model {
                source: ModelError::Json { .. },
                ..
            } => "parse",
            CliError::Model { .. } => "schema",
            CliError::Core(_) => "structure",
            CliError::Usage(_) => "usage",
        }
    }
}

pub struct Report {
    pub json: Value,
    pub text: String,
    pub code: u8,
}

fn verdict(ok: bool) -> u8 {
    if ok {
        0
    } else {
        1
    }
}

fn load(path: &Path) -> Result<ModelFile, CliError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: display.clone(),
        source,
    })?;
    parse_model(&text).map_err(|source| CliError::Model { path: display, source })
}

fn load_quantum(path: &Path) -> Result<Instrument, CliError> {
    match load(path)? {
        ModelFile::QuantumInstrument(ins) => Ok(ins),
        other => Err(CliError::Usage(format!(
            "{}: expected a quantum-instrument file, found {}",
            path.display(),
            other.kind().as_str()
        ))),
    }
}

fn load_elementary(path: &Path, tol: &Tolerances) -> Result<(ElementaryProperty, Instrument), CliError> {
    let ins = load_quantum(path)?;
    let p = to_elementary(&ins, tol)?;
    Ok((p, ins))
}

pub fn validate(path: &Path, tol: &Tolerances) -> Result<Report, CliError> {
    let model = load(path)?;
    let echo = model.to_json();
    let (valid, problems) = match &model {
        ModelFile::QuantumInstrument(ins) => {
            let r = validate_instrument(ins, tol);
            (r.valid, r.problems())
        }
        ModelFile::ClassicalInstrument(ins) => {
            let r = validate_classical(ins, tol);
            (r.valid, r.problems())
        }
        ModelFile::State(s) => {
            let checked = match s {
                StateModel::Quantum { .. } => s.to_quantum(tol).map(|_| ()),
                StateModel::Classical { .. } => s.to_classical(tol).map(|_| ()),
            };
            match checked {
                Ok(()) => (true, vec![]),
                Err(e) => (false, vec![e.to_string()]),
            }
        }
        ModelFile::Witness(w) => {
            let mut problems = validate_instrument(w.c(), tol)
                .problems()
                .into_iter()
                .map(|p| format!("C: {p}"))
                .collect::<Vec<_>>();
            for (z, p) in w.post() {
                problems.extend(validate_instrument(p, tol).problems().into_iter().map(|m| format!("P^{z}: {m}")));
            }
            (problems.is_empty(), problems)
        }
    };
    let mut text = format!("{}: {}\n", model.kind().as_str(), if valid { "valid" } else { "invalid" });
    for p in &problems {
        let _ = writeln!(text, "  - {p}");
    }
    Ok(Report {
        json: json!({"kind": model.kind().as_str(), "valid": valid, "problems": problems, "model": echo}),
        text,
        code: verdict(valid),
    })
}

fn classify_quantum(ins: &Instrument, tol: &Tolerances) -> Result<Report, CliError> {
    let valid = validate_instrument(ins, tol).valid;
    let repeatable = ins.dim_in() == ins.dim_out() && is_repeatable(ins, tol)?;
    let atomic: Map<String, Value> = ins
        .outcomes()
        .iter()
        .map(|(l, op)| (l.clone(), json!(is_atomic(op, tol))))
        .collect();
    let all_atomic = atomic.values().all(|v| v == &json!(true));
    let elementary = if valid { to_elementary(ins, tol) } else { Err(Error::Structure("invalid instrument".into())) };
    let (is_elem, ranks, reason) = match &elementary {
        Ok(p) => (true, Some(p.ranks()), None),
        Err(e) => (false, None, Some(e.to_string())),
    };
    let mut text = String::new();
    let _ = writeln!(text, "valid:      {valid}");
    let _ = writeln!(text, "repeatable: {repeatable}");
    let _ = writeln!(text, "atomic:     {all_atomic}");
    let _ = writeln!(text, "elementary: {is_elem}");
    if let Some(r) = &ranks {
        let _ = writeln!(text, "projector ranks: {r:?}");
    }
    if let Some(why) = &reason {
        let _ = writeln!(text, "reason: {why}");
    }
    let projectors = elementary.as_ref().ok().map(|p| {
        p.projectors()
            .iter()
            .map(|(l, m)| (l.clone(), complex_matrix_to_json(m)))
            .collect::<Map<_, _>>()
    });
    Ok(Report {
        json: json!({
            "theory": "quantum",
            "valid": valid,
            "repeatable": repeatable,
            "atomic": atomic,
            "elementary": is_elem,
            "projector_ranks": ranks,
            "projectors": projectors,
            "reason": reason,
            "model": ModelFile::QuantumInstrument(ins.clone()).to_json(),
        }),
        text,
        code: verdict(is_elem),
    })
}

fn classify_classical(ins: &ClassicalInstrument, tol: &Tolerances) -> Report {
    let valid = validate_classical(ins, tol).valid;
    let e = classical_is_elementary(ins, tol);
    let canonical = e.canonical.as_ref().map(|c| {
        c.iter()
            .map(|(point, label)| json!({"point": point, "label": label}))
            .collect::<Vec<_>>()
    });
    let mut text = format!("valid:      {valid}\nelementary: {}\n", e.is_elementary);
    if let Some(c) = &e.canonical {
        for (point, label) in c {
            let _ = writeln!(text, "  point {point} <- outcome {label}");
        }
    }
    Report {
        json: json!({
            "theory": "classical",
            "valid": valid,
            "elementary": e.is_elementary,
            "canonical": canonical,
            "model": ModelFile::ClassicalInstrument(ins.clone()).to_json(),
        }),
        text,
        code: verdict(e.is_elementary),
    }
}

pub fn classify(path: &Path, tol: &Tolerances) -> Result<Report, CliError> {
    match load(path)? {
        ModelFile::QuantumInstrument(ins) => classify_quantum(&ins, tol),
        ModelFile::ClassicalInstrument(ins) => Ok(classify_classical(&ins, tol)),
        other => Err(CliError::Usage(format!(
            "classify expects an instrument, found {}",
            other.kind().as_str()
        ))),
    }
}

pub fn verifiers(path: &Path, outcome: &str, state: Option<&Path>, tol: &Tolerances) -> Result<Report, CliError> {
    let state = state.map(load).transpose()?;
    let state = match state {
        None => None,
        Some(ModelFile::State(s)) => Some(s),
        Some(other) => {
            return Err(CliError::Usage(format!("--state expects a state file, found {}", other.kind().as_str())))
        }
    };
    match load(path)? {
        ModelFile::QuantumInstrument(ins) => {
            let op = ins.operation_or_err(outcome)?;
            let support = verifier_support(op, tol);
            let mut text = format!("outcome {outcome}: verifier support of dimension {}\n", support.dim());
            let mut body = json!({
                "theory": "quantum",
                "outcome": outcome,
                "support_dim": support.dim(),
                "support_basis": complex_matrix_to_json(support.basis()),
            });
            let mut code = 0;
            if let Some(s) = state {
                let rho = s.to_quantum(tol)?;
                let r = operation_report(outcome, op, &rho, tol)?;
                let _ = writeln!(
                    text,
                    "probability {:.9}\nverifier:        {}\nstrong verifier: {}",
                    r.probability, r.is_verifier, r.is_strong
                );
                body["state"] = json!({
                    "probability": r.probability,
                    "is_verifier": r.is_verifier,
                    "is_strong": r.is_strong,
                    "is_fixed_point": r.is_fixed_point,
                });
                code = verdict(r.is_verifier);
            }
            Ok(Report { json: body, text, code })
        }
        ModelFile::ClassicalInstrument(ins) => {
            let op = ins
                .operation(outcome)
                .ok_or_else(|| Error::Structure(format!("no outcome labelled `{outcome}`")))?;
            let points = op.verifier_points(tol);
            let mut text = format!("outcome {outcome}: verifier points {points:?}\n");
            let mut body = json!({"theory": "classical", "outcome": outcome, "support_points": points});
            let mut code = 0;
            if let Some(s) = state {
                let p = s.to_classical(tol)?;
                let r = classical_verifier_checks(op, &p, tol)?;
                let _ = writeln!(text, "verifier:        {}\nstrong verifier: {}", r.is_verifier, r.is_strong);
                body["state"] = json!({"is_verifier": r.is_verifier, "is_strong": r.is_strong});
                code = verdict(r.is_verifier);
            }
            Ok(Report { json: body, text, code })
        }
        other => Err(CliError::Usage(format!(
            "verifiers expects an instrument, found {}",
            other.kind().as_str()
        ))),
    }
}

fn degree_json(table: &indexmap::IndexMap<String, DegreeVerdict>) -> Value {
    table
        .iter()
        .map(|(l, v)| {
            (
                l.clone(),
                json!({
                    "degree": v.kind.as_str(),
                    "probabilities": v.probabilities,
                    "entropy_bits": v.entropy_bits,
                }),
            )
        })
        .collect::<Map<_, _>>()
        .into()
}

fn degree_text(out: &mut String, title: &str, table: &indexmap::IndexMap<String, DegreeVerdict>) {
    let _ = writeln!(out, "{title}");
    for (l, v) in table {
        let probs: Vec<String> = v.probabilities.iter().map(|(y, p)| format!("{y}={p:.6}")).collect();
        let _ = writeln!(out, "  {l}: {} (H = {:.6} bits; {})", v.kind, v.entropy_bits, probs.join(", "));
    }
}

pub fn comp(p_path: &Path, q_path: &Path, tol: &Tolerances) -> Result<Report, CliError> {
    let (p, pi) = load_elementary(p_path, tol)?;
    let (q, qi) = load_elementary(q_path, tol)?;
    let r = classify_relation(&p, &q, tol)?;
    let mut text = format!("complementary: {}\n", r.complementary);
    if let Some(b) = &r.bijection {
        let pairs: Vec<String> = b.iter().map(|(x, y)| format!("{x}->{y}")).collect();
        let _ = writeln!(text, "bijection: {}", pairs.join(", "));
    }
    if let Some(w) = &r.witness {
        let side = match w.verifies {
            Side::First => "first",
            Side::Second => "second",
        };
        let _ = writeln!(text, "witness: verifier of outcome {} of the {side} property", w.outcome);
    }
    degree_text(&mut text, "degrees (first verifiers vs second):", &r.degree_table);
    degree_text(&mut text, "degrees (second verifiers vs first):", &r.reverse_table);
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "verifies": match w.verifies { Side::First => "first", Side::Second => "second" },
            "outcome": w.outcome,
            "state": complex_matrix_to_json(w.state.matrix()),
        })
    });
    Ok(Report {
        json: json!({
            "complementary": r.complementary,
            "bijection": r.bijection,
            "witness": witness,
            "degree_table": degree_json(&r.degree_table),
            "reverse_table": degree_json(&r.reverse_table),
            "models": [
                ModelFile::QuantumInstrument(pi).to_json(),
                ModelFile::QuantumInstrument(qi).to_json(),
            ],
        }),
        text,
        code: verdict(r.complementary),
    })
}

pub fn compat(p_path: &Path, q_path: &Path, tol: &Tolerances) -> Result<Report, CliError> {
    let (p, pi) = load_elementary(p_path, tol)?;
    let (q, qi) = load_elementary(q_path, tol)?;
    let compatible = are_compatible_elementary(&p, &q, tol)?;
    let commute = pvm_commute(&p, &q, tol)?;
    let commutator = max_commutator(&p, &q)?;
    let text = format!(
        "compatible:    {compatible}\nPVMs commute:  {commute} (max commutator {commutator:.3e})\n"
    );
    Ok(Report {
        json: json!({
            "compatible": compatible,
            "pvm_commute": commute,
            "max_commutator": commutator,
            "models": [
                ModelFile::QuantumInstrument(pi).to_json(),
                ModelFile::QuantumInstrument(qi).to_json(),
            ],
        }),
        text,
        code: verdict(compatible),
    })
}

pub fn witness(t_path: &Path, g_path: &Path, w_path: &Path, tol: &Tolerances) -> Result<Report, CliError> {
    let t = load_quantum(t_path)?;
    let g = load_quantum(g_path)?;
    let w = match load(w_path)? {
        ModelFile::Witness(w) => w,
        other => {
            return Err(CliError::Usage(format!(
                "{}: expected a witness file, found {}",
                w_path.display(),
                other.kind().as_str()
            )))
        }
    };
    let r = verify_witness(&t, &g, &w, tol)?;
    let mut text = format!("witness valid: {}\nmax residual:  {:.3e}\n", r.valid, r.max_residual());
    for (x, v) in &r.t_residuals {
        let _ = writeln!(text, "  T outcome {x}: residual {v:.3e}");
    }
    for (y, v) in &r.g_residuals {
        let _ = writeln!(text, "  G outcome {y}: residual {v:.3e}");
    }
    for d in &r.instrument_defects {
        let _ = writeln!(text, "  {d} is not a valid instrument");
    }
    Ok(Report {
        json: json!({
            "valid": r.valid,
            "max_residual": r.max_residual(),
            "t_residuals": r.t_residuals,
            "g_residuals": r.g_residuals,
            "instrument_defects": r.instrument_defects,
            "model": ModelFile::Witness(w).to_json(),
        }),
        text,
        code: verdict(r.valid),
    })
}

fn harness_report(theory: &str, dim: usize, r: &HarnessReport) -> Report {
    let failures: Vec<Value> = r
        .cases
        .iter()
        .filter(|c| !c.included)
        .map(|c| json!({"trial": c.trial, "g_outcome": c.g_outcome, "support_dim": c.g_support_dim}))
        .collect();
    let text = format!(
        "{theory} harness, dimension {dim}, seed {} ({})\ntrials {}, accepted {}, discarded {}\nviolations: {}\n",
        r.seed, r.generator, r.trials, r.accepted, r.discarded, r.violations
    );
    Report {
        json: json!({
            "theory": theory,
            "dim": dim,
            "seed": r.seed,
            "generator": r.generator,
            "trials": r.trials,
            "accepted": r.accepted,
            "discarded": r.discarded,
            "cases": r.cases.len(),
            "violations": r.violations,
            "failures": failures,
        }),
        text,
        code: verdict(r.violations == 0),
    }
}

pub fn harness(theory: Theory, dim: usize, trials: usize, seed: u64, tol: &Tolerances) -> Result<Report, CliError> {
    Ok(match theory {
        Theory::Quantum => harness_report("quantum", dim, &verifier_inclusion_harness(seed, dim, trials, tol)?),
        Theory::Classical => harness_report("classical", dim, &classical_theorem_harness(seed, dim, trials, tol)?),
    })
}
