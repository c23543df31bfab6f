//! File formats: JSON measurements and frames, CSV sweep output.
//!
//! All floating-point output is rounded to 12 significant digits before
//! serialization so identical inputs produce byte-identical reports across
//! platforms.
//!
//! Measurement files look like
//!
//! ```json
//! {
//!   "model": {"type": "quantum", "d": 2},
//!   "effects": [
//!     {"coords": [0.25, 0.1, 0.0, 0.2]},
//!     {"matrix": {"re": [[0.5, 0.0], [0.0, 0.25]], "im": [[0.0, 0.1], [-0.1, 0.0]]}}
//!   ]
//! }
//! ```
//!
//! where `coords` lists the functional values `(f(m), f(u_1), ...)` and
//! `matrix` gives a Hermitian POVM element for quantum models. The model may
//! instead be supplied by the caller; an embedded model wins on conflict.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::frames::Frame;
use crate::measurement::{Measurement, MeasurementError};
use crate::model::{EffectFunctional, GgptModel, ModelKind};
use crate::models::SweepRecord;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no model given: neither the file nor the caller supplies one")]
    MissingModel,
    #[error("effect {index}: matrix form requires a quantum model")]
    MatrixNeedsQuantum { index: usize },
    #[error("effect {index}: matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { index: usize, residual: f64 },
    #[error("effect {index}: matrix must be {expected}x{expected}")]
    MatrixShape { index: usize, expected: usize },
    #[error("unsupported model dimension: {0}")]
    BadModelDimension(String),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Frame(#[from] crate::frames::FrameError),
}

/// On-disk form of a measurement.
#[derive(Debug, Serialize, Deserialize)]
pub struct MeasurementFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    pub effects: Vec<EffectSpec>,
}

/// One effect: functional values, or a Hermitian matrix for quantum models.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EffectSpec {
    Coords { coords: Vec<f64> },
    Matrix { matrix: ComplexMatrix },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

/// On-disk form of a plain frame.
#[derive(Debug, Serialize, Deserialize)]
pub struct FrameFile {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

fn build_model(kind: ModelKind) -> Result<GgptModel, FormatError> {
    match kind {
        ModelKind::Quantum { d } => {
            if d < 2 {
                return Err(FormatError::BadModelDimension(format!("quantum d = {d}")));
            }
            Ok(GgptModel::quantum(d))
        }
        ModelKind::Classical { n } => {
            if n < 2 {
                return Err(FormatError::BadModelDimension(format!("classical n = {n}")));
            }
            Ok(GgptModel::classical(n))
        }
    }
}

/// Parse a measurement file. `fallback_model` is used when the file carries
/// no model; when both are present and disagree, the file wins and a warning
/// is returned.
pub fn parse_measurement(
    json: &str,
    fallback_model: Option<ModelKind>,
    tol: f64,
) -> Result<(Measurement, Vec<String>), FormatError> {
    let file: MeasurementFile = serde_json::from_str(json)?;
    let mut warnings = Vec::new();
    let kind = match (file.model, fallback_model) {
        (Some(embedded), Some(given)) => {
            if embedded != given {
                warnings.push(format!(
                    "model in file ({embedded:?}) overrides the one given ({given:?})"
                ));
            }
            embedded
        }
        (Some(embedded), None) => embedded,
        (None, Some(given)) => given,
        (None, None) => return Err(FormatError::MissingModel),
    };
    let model = build_model(kind)?;

    let mut effects = Vec::with_capacity(file.effects.len());
    for (index, spec) in file.effects.iter().enumerate() {
        match spec {
            EffectSpec::Coords { coords } => {
                effects.push(EffectFunctional::from_slice(coords));
            }
            EffectSpec::Matrix { matrix } => {
                let ModelKind::Quantum { d } = kind else {
                    return Err(FormatError::MatrixNeedsQuantum { index });
                };
                let mat = complex_matrix(matrix, d, index)?;
                let herm_residual = (&mat - mat.adjoint()).norm();
                if herm_residual > 1e-10 * mat.norm().max(1.0) {
                    return Err(FormatError::NotHermitian { index, residual: herm_residual });
                }
                effects.push(model.effect_from_hermitian(&mat));
            }
        }
    }
    let measurement = Measurement::new(model, effects, tol)?;
    Ok((measurement, warnings))
}

fn complex_matrix(
    spec: &ComplexMatrix,
    d: usize,
    index: usize,
) -> Result<DMatrix<Complex64>, FormatError> {
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
    if !shape_ok(&spec.re) {
        return Err(FormatError::MatrixShape { index, expected: d });
    }
    if let Some(im) = &spec.im {
        if !shape_ok(im) {
            return Err(FormatError::MatrixShape { index, expected: d });
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let re = spec.re[i][j];
        let im = spec.im.as_ref().map_or(0.0, |m| m[i][j]);
        Complex64::new(re, im)
    }))
}

/// Parse a plain frame file.
pub fn parse_frame(json: &str) -> Result<Frame, FormatError> {
    let file: FrameFile = serde_json::from_str(json)?;
    Ok(Frame::from_rows(file.dim, &file.vectors)?)
}

/// Round to 12 significant digits; the bit pattern is then deterministic.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific notation round-trips")
}

/// Fixed-width 12-significant-digit form for CSV output.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    *v = serde_json::Number::from_f64(round_sig12(f))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serialize with every float rounded to 12 significant digits.
pub fn to_json_12<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("valid JSON value");
    s.push('\n');
    s
}

/// CSV of a family sweep: header plus one row per record, flags as 0/1 and
/// floats with 12 significant digits.
pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("a,b,c,ic,morphophoric,tight_ic,s_tight,chi_ray,alpha_s\n");
    for r in records {
        let flag = |b: bool| if b { "1" } else { "0" };
        let alpha = r.alpha_s.map(fmt_sig12).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_sig12(r.a),
            fmt_sig12(r.b),
            fmt_sig12(r.c),
            flag(r.ic),
            flag(r.morphophoric),
            flag(r.tight_ic),
            flag(r.s_tight),
            flag(r.chi_ray),
            alpha,
        ));
    }
    out
}
