use thiserror::Error;

use crate::fsm::{Label, Trace};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label {0:?}: labels must be non-empty and contain no whitespace, '|' or '#'")]
    InvalidLabel(String),

    #[error("invalid state identifier {0:?}: state identifiers must be non-empty and contain no whitespace or '#'")]
    InvalidState(String),

    #[error("input {input} is not in the input alphabet of component {component}")]
    InputNotInAlphabet { component: String, input: Label },

    #[error("trace set exceeds the cardinality guard of {limit} traces")]
    TraceLimit { limit: usize },

    #[error("components at {path} are not composable: {reason}")]
    NotComposable { path: String, reason: String },

    #[error("duplicate leaf name {0} in system expression")]
    DuplicateLeaf(String),

    #[error("signature mismatch between {left} and {right}: {detail}")]
    SignatureMismatch {
        left: String,
        right: String,
        detail: String,
    },

    #[error("unknown component {0} (not a leaf of the system expression)")]
    UnknownTarget(String),

    #[error("trace {0} is not a trace of the composed system")]
    NotATrace(Trace),

    #[error("system expressions have different shapes: {0}")]
    ShapeMismatch(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
