//! Input documents. Algebra-only commands accept a bare algebra spec or one
//! wrapped as `{"algebra": ...}`; the others name their fields explicitly.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use ukb_core::io::{AlgebraSpec, MatrixJson, SampleSpec, StateSpec};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed input: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn read_document(path: &Path) -> Result<Value, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.to_path_buf(), source })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn parse<T: DeserializeOwned>(doc: Value) -> Result<T, InputError> {
    Ok(serde_json::from_value(doc)?)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AlgebraInput {
    Wrapped { algebra: AlgebraSpec },
    Bare(AlgebraSpec),
}

impl AlgebraInput {
    pub fn spec(&self) -> &AlgebraSpec {
        match self {
            AlgebraInput::Wrapped { algebra } | AlgebraInput::Bare(algebra) => algebra,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnsInput {
    pub algebra: AlgebraSpec,
    pub state: StateSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceInput {
    pub algebra: AlgebraSpec,
    pub a: StateSpec,
    pub b: StateSpec,
}

/// Either an element (round trip through the transform) or sampled values
/// (inversion of externally supplied data).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GelfandInput {
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub element: Option<MatrixJson>,
    #[serde(default)]
    pub samples: Option<Vec<SampleSpec>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarInput {
    pub algebra: AlgebraSpec,
    pub a: MatrixJson,
    pub b: MatrixJson,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormInput {
    pub algebra: AlgebraSpec,
    pub element: MatrixJson,
}

/// A context `(A, p)` plus command-specific fields. States named `mu` or
/// `state` in `xi` live on the corner; all others live on the parent.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HereditaryInput {
    pub algebra: AlgebraSpec,
    pub projection: MatrixJson,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub states: Option<Vec<StateSpec>>,
    #[serde(default)]
    pub mu: Option<StateSpec>,
    #[serde(default)]
    pub radius: Option<f64>,
}
