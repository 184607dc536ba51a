//! JSON model files.
//!
//! Every file carries a top-level `"kind"`: `quantum-instrument`,
//! `classical-instrument`, `state` or `witness`. The payload fields sit
//! next to it. Complex scalars are `[re, im]`, matrices are row-major nested
//! arrays. Parsing performs structural checks only; numeric validity
//! (positivity, completeness, normalisation) is left to the analyses.

use indexmap::IndexMap;
use serde_json::{json, Map, Value};

use crate::classical::{ClassicalInstrument, ClassicalOperation, ClassicalState, RMatrix};
use crate::compatibility::ExclusionWitness;
use crate::instruments::Instrument;
use crate::linalg::{c, outer, CMatrix, CVector, Tolerances};
use crate::quantum_ops::{DensityState, QuantumOperation};
use crate::Result as CoreResult;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

pub type ModelResult<T> = std::result::Result<T, ModelError>;

fn schema<T>(path: &str, message: impl Into<String>) -> ModelResult<T> {
    Err(ModelError::Schema {
        path: path.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    QuantumInstrument,
    ClassicalInstrument,
    State,
    Witness,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::QuantumInstrument => "quantum-instrument",
            ModelKind::ClassicalInstrument => "classical-instrument",
            ModelKind::State => "state",
            ModelKind::Witness => "witness",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            ModelKind::QuantumInstrument,
            ModelKind::ClassicalInstrument,
            ModelKind::State,
            ModelKind::Witness,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

/// State payload before numeric validation.
#[derive(Debug, Clone, PartialEq)]
pub enum StateModel {
    Quantum { dims: Vec<usize>, matrix: CMatrix },
    /// `{"probs": [...]}`: a classical distribution.
    Classical { probs: Vec<f64> },
}

impl StateModel {
    pub fn to_quantum(&self, tol: &Tolerances) -> CoreResult<DensityState> {
        match self {
            StateModel::Quantum { dims, matrix } => DensityState::new(dims.clone(), matrix.clone(), tol),
            StateModel::Classical { .. } => Err(crate::Error::InvalidState(
                "expected a quantum state, found a classical distribution".into(),
            )),
        }
    }

    pub fn to_classical(&self, tol: &Tolerances) -> CoreResult<ClassicalState> {
        match self {
            StateModel::Classical { probs } => ClassicalState::new(probs.clone(), tol),
            StateModel::Quantum { .. } => Err(crate::Error::InvalidState(
                "expected a classical distribution, found a quantum state".into(),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelFile {
    QuantumInstrument(Instrument),
    ClassicalInstrument(ClassicalInstrument),
    State(StateModel),
    Witness(ExclusionWitness),
}

impl ModelFile {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelFile::QuantumInstrument(_) => ModelKind::QuantumInstrument,
            ModelFile::ClassicalInstrument(_) => ModelKind::ClassicalInstrument,
            ModelFile::State(_) => ModelKind::State,
            ModelFile::Witness(_) => ModelKind::Witness,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut body = match self {
            ModelFile::QuantumInstrument(ins) => instrument_to_json(ins),
            ModelFile::ClassicalInstrument(ins) => classical_to_json(ins),
            ModelFile::State(s) => state_to_json(s),
            ModelFile::Witness(w) => witness_to_json(w),
        };
        let mut out = Map::new();
        out.insert("kind".into(), Value::from(self.kind().as_str()));
        if let Value::Object(fields) = &mut body {
            out.append(fields);
        }
        Value::Object(out)
    }
}

pub fn parse_model(text: &str) -> ModelResult<ModelFile> {
    let value: Value = serde_json::from_str(text).map_err(|e| ModelError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    model_from_value(&value)
}

pub fn model_from_value(value: &Value) -> ModelResult<ModelFile> {
    let obj = object(value, "$")?;
    let kind_str = match obj.get("kind") {
        None => return schema("$", "missing \"kind\""),
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return schema("$.kind", "expected a string"),
    };
    let Some(kind) = ModelKind::parse(kind_str) else {
        return schema(
            "$.kind",
            format!("unknown kind `{kind_str}`; expected quantum-instrument, classical-instrument, state or witness"),
        );
    };
    Ok(match kind {
        ModelKind::QuantumInstrument => ModelFile::QuantumInstrument(instrument_from(value, "$")?),
        ModelKind::ClassicalInstrument => ModelFile::ClassicalInstrument(classical_from(value, "$")?),
        ModelKind::State => ModelFile::State(state_from(value, "$")?),
        ModelKind::Witness => ModelFile::Witness(witness_from(value, "$")?),
    })
}

fn object<'a>(v: &'a Value, path: &str) -> ModelResult<&'a Map<String, Value>> {
    v.as_object().map_or_else(|| schema(path, "expected an object"), Ok)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> ModelResult<&'a Value> {
    obj.get(key)
        .map_or_else(|| schema(path, format!("missing \"{key}\"")), Ok)
}

fn array<'a>(v: &'a Value, path: &str) -> ModelResult<&'a Vec<Value>> {
    v.as_array().map_or_else(|| schema(path, "expected an array"), Ok)
}

fn count(v: &Value, path: &str) -> ModelResult<usize> {
    match v.as_u64() {
        Some(n) if n > 0 => usize::try_from(n).map_or_else(|_| schema(path, "too large"), Ok),
        _ => schema(path, "expected a positive integer"),
    }
}

fn number(v: &Value, path: &str) -> ModelResult<f64> {
    v.as_f64().map_or_else(|| schema(path, "expected a number"), Ok)
}

fn string<'a>(v: &'a Value, path: &str) -> ModelResult<&'a str> {
    v.as_str().map_or_else(|| schema(path, "expected a string"), Ok)
}

fn complex(v: &Value, path: &str) -> ModelResult<crate::linalg::C64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(c(number(re, &format!("{path}[0]"))?, number(im, &format!("{path}[1]"))?)),
        _ => schema(path, "complex entry must be a two-element array [re, im]"),
    }
}

fn rows<'a>(v: &'a Value, path: &str) -> ModelResult<(usize, usize, &'a Vec<Value>)> {
    let rows = array(v, path)?;
    if rows.is_empty() {
        return schema(path, "matrix has no rows");
    }
    let width = array(&rows[0], &format!("{path}[0]"))?.len();
    if width == 0 {
        return schema(path, "matrix has no columns");
    }
    for (i, r) in rows.iter().enumerate() {
        if array(r, &format!("{path}[{i}]"))?.len() != width {
            return schema(&format!("{path}[{i}]"), format!("row length differs from {width}"));
        }
    }
    Ok((rows.len(), width, rows))
}

fn complex_matrix(v: &Value, path: &str) -> ModelResult<CMatrix> {
    let (r, w, rows) = rows(v, path)?;
    let mut m = CMatrix::zeros(r, w);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.as_array().into_iter().flatten().enumerate() {
            m[(i, j)] = complex(e, &format!("{path}[{i}][{j}]"))?;
        }
    }
    Ok(m)
}

fn real_matrix(v: &Value, path: &str) -> ModelResult<RMatrix> {
    let (r, w, rows) = rows(v, path)?;
    let mut m = RMatrix::zeros(r, w);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.as_array().into_iter().flatten().enumerate() {
            m[(i, j)] = number(e, &format!("{path}[{i}][{j}]"))?;
        }
    }
    Ok(m)
}

fn check_type(obj: &Map<String, Value>, expected: &str, path: &str) -> ModelResult<()> {
    match obj.get("type") {
        None => Ok(()),
        Some(Value::String(s)) if s == expected => Ok(()),
        Some(_) => schema(&format!("{path}.type"), format!("expected \"{expected}\"")),
    }
}

/// `{"dim_in", "dim_out", "kraus": [...]}`.
pub fn operation_from(v: &Value, path: &str) -> ModelResult<QuantumOperation> {
    let obj = object(v, path)?;
    let dim_in = count(field(obj, "dim_in", path)?, &format!("{path}.dim_in"))?;
    let dim_out = count(field(obj, "dim_out", path)?, &format!("{path}.dim_out"))?;
    operation_body(obj, dim_in, dim_out, path)
}

fn operation_body(obj: &Map<String, Value>, dim_in: usize, dim_out: usize, path: &str) -> ModelResult<QuantumOperation> {
    let kpath = format!("{path}.kraus");
    let kraus = array(field(obj, "kraus", path)?, &kpath)?
        .iter()
        .enumerate()
        .map(|(i, k)| complex_matrix(k, &format!("{kpath}[{i}]")))
        .collect::<ModelResult<Vec<_>>>()?;
    QuantumOperation::new(dim_in, dim_out, kraus).map_err(|e| ModelError::Schema {
        path: kpath,
        message: e.to_string(),
    })
}

pub fn instrument_from(v: &Value, path: &str) -> ModelResult<Instrument> {
    let obj = object(v, path)?;
    check_type(obj, "quantum", path)?;
    let dim_in = count(field(obj, "dim_in", path)?, &format!("{path}.dim_in"))?;
    let dim_out = count(field(obj, "dim_out", path)?, &format!("{path}.dim_out"))?;
    let opath = format!("{path}.outcomes");
    let mut outcomes = Vec::new();
    for (i, o) in array(field(obj, "outcomes", path)?, &opath)?.iter().enumerate() {
        let p = format!("{opath}[{i}]");
        let oobj = object(o, &p)?;
        let label = string(field(oobj, "label", &p)?, &format!("{p}.label"))?;
        outcomes.push((label.to_string(), operation_body(oobj, dim_in, dim_out, &p)?));
    }
    Instrument::new(outcomes).map_err(|e| ModelError::Schema {
        path: opath,
        message: e.to_string(),
    })
}

pub fn classical_from(v: &Value, path: &str) -> ModelResult<ClassicalInstrument> {
    let obj = object(v, path)?;
    check_type(obj, "classical", path)?;
    let size_in = count(field(obj, "size_in", path)?, &format!("{path}.size_in"))?;
    let size_out = count(field(obj, "size_out", path)?, &format!("{path}.size_out"))?;
    let opath = format!("{path}.outcomes");
    let mut outcomes = Vec::new();
    for (i, o) in array(field(obj, "outcomes", path)?, &opath)?.iter().enumerate() {
        let p = format!("{opath}[{i}]");
        let oobj = object(o, &p)?;
        let label = string(field(oobj, "label", &p)?, &format!("{p}.label"))?;
        let mpath = format!("{p}.matrix");
        let m = real_matrix(field(oobj, "matrix", &p)?, &mpath)?;
        if (m.nrows(), m.ncols()) != (size_out, size_in) {
            return schema(&mpath, format!("expected {size_out}x{size_in}, found {}x{}", m.nrows(), m.ncols()));
        }
        let op = ClassicalOperation::new(m).map_err(|e| ModelError::Schema {
            path: mpath,
            message: e.to_string(),
        })?;
        outcomes.push((label.to_string(), op));
    }
    ClassicalInstrument::new(outcomes).map_err(|e| ModelError::Schema {
        path: opath,
        message: e.to_string(),
    })
}

pub fn state_from(v: &Value, path: &str) -> ModelResult<StateModel> {
    let obj = object(v, path)?;
    if let Some(p) = obj.get("probs") {
        let ppath = format!("{path}.probs");
        let probs = array(p, &ppath)?
            .iter()
            .enumerate()
            .map(|(i, x)| number(x, &format!("{ppath}[{i}]")))
            .collect::<ModelResult<Vec<_>>>()?;
        if probs.is_empty() {
            return schema(&ppath, "empty distribution");
        }
        return Ok(StateModel::Classical { probs });
    }
    let dpath = format!("{path}.dims");
    let dims = array(field(obj, "dims", path)?, &dpath)?
        .iter()
        .enumerate()
        .map(|(i, d)| count(d, &format!("{dpath}[{i}]")))
        .collect::<ModelResult<Vec<_>>>()?;
    if dims.is_empty() {
        return schema(&dpath, "no subsystem dimensions");
    }
    let total: usize = dims.iter().product();
    let matrix = match (obj.get("matrix"), obj.get("vector")) {
        (Some(m), None) => complex_matrix(m, &format!("{path}.matrix"))?,
        (None, Some(vec)) => {
            let vpath = format!("{path}.vector");
            let entries = array(vec, &vpath)?
                .iter()
                .enumerate()
                .map(|(i, e)| complex(e, &format!("{vpath}[{i}]")))
                .collect::<ModelResult<Vec<_>>>()?;
            let v = CVector::from_vec(entries);
            let n = v.norm();
            if n == 0.0 || !n.is_finite() {
                return schema(&vpath, "vector must be nonzero and finite");
            }
            outer(&(v / c(n, 0.0)))
        }
        (Some(_), Some(_)) => return schema(path, "give either \"matrix\" or \"vector\", not both"),
        (None, None) => return schema(path, "missing \"matrix\" or \"vector\""),
    };
    if matrix.nrows() != total || matrix.ncols() != total {
        return schema(path, format!("dims {dims:?} need a {total}x{total} matrix"));
    }
    Ok(StateModel::Quantum { dims, matrix })
}

pub fn witness_from(v: &Value, path: &str) -> ModelResult<ExclusionWitness> {
    let obj = object(v, path)?;
    let cpath = format!("{path}.C");
    let cval = field(obj, "C", path)?;
    let c_ins = instrument_from(cval, &cpath)?;
    let dpath = format!("{cpath}.dims_out");
    let dims = array(field(object(cval, &cpath)?, "dims_out", &cpath)?, &dpath)?;
    let [db, de] = dims.as_slice() else {
        return schema(&dpath, "expected [dB, dE]");
    };
    let dims_out = (count(db, &format!("{dpath}[0]"))?, count(de, &format!("{dpath}[1]"))?);

    let ppath = format!("{path}.partition");
    let mut partition = IndexMap::new();
    for (x, block) in object(field(obj, "partition", path)?, &ppath)? {
        let bpath = format!("{ppath}.{x}");
        let labels = array(block, &bpath)?
            .iter()
            .enumerate()
            .map(|(i, z)| string(z, &format!("{bpath}[{i}]")).map(str::to_string))
            .collect::<ModelResult<Vec<_>>>()?;
        partition.insert(x.clone(), labels);
    }

    let qpath = format!("{path}.post");
    let mut post = IndexMap::new();
    for (z, ins) in object(field(obj, "post", path)?, &qpath)? {
        post.insert(z.clone(), instrument_from(ins, &format!("{qpath}.{z}"))?);
    }
    ExclusionWitness::new(c_ins, dims_out, partition, post).map_err(|e| ModelError::Schema {
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn complex_to_json(z: crate::linalg::C64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|z| complex_to_json(*z)).collect()))
            .collect(),
    )
}

fn real_matrix_to_json(m: &RMatrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|x| json!(x)).collect()))
            .collect(),
    )
}

pub fn instrument_to_json(ins: &Instrument) -> Value {
    let outcomes: Vec<Value> = ins
        .outcomes()
        .iter()
        .map(|(l, op)| {
            json!({
                "label": l,
                "kraus": op.kraus().iter().map(complex_matrix_to_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "type": "quantum",
        "dim_in": ins.dim_in(),
        "dim_out": ins.dim_out(),
        "outcomes": outcomes,
    })
}

pub fn classical_to_json(ins: &ClassicalInstrument) -> Value {
    let outcomes: Vec<Value> = ins
        .outcomes()
        .iter()
        .map(|(l, op)| json!({"label": l, "matrix": real_matrix_to_json(op.matrix())}))
        .collect();
    json!({
        "type": "classical",
        "size_in": ins.size_in(),
        "size_out": ins.size_out(),
        "outcomes": outcomes,
    })
}

pub fn state_to_json(s: &StateModel) -> Value {
    match s {
        StateModel::Quantum { dims, matrix } => json!({"dims": dims, "matrix": complex_matrix_to_json(matrix)}),
        StateModel::Classical { probs } => json!({"probs": probs}),
    }
}

pub fn witness_to_json(w: &ExclusionWitness) -> Value {
    let mut c_json = instrument_to_json(w.c());
    let (db, de) = w.dims_out();
    c_json["dims_out"] = json!([db, de]);
    let post: Map<String, Value> = w
        .post()
        .iter()
        .map(|(z, p)| (z.clone(), instrument_to_json(p)))
        .collect();
    let partition: Map<String, Value> = w
        .partition()
        .iter()
        .map(|(x, zs)| (x.clone(), json!(zs)))
        .collect();
    json!({
        "C": c_json,
        "partition": partition,
        "post": post,
    })
}
