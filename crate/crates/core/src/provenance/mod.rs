//! Getting graphs in and out: PROV-style provenance import and the native
//! graph file.

mod graph_file;
mod prov;

use thiserror::Error;

use crate::engine::Diagnostic;
use crate::model::ModelError;

pub use graph_file::{load_graph, save_graph};
pub use prov::{
    import_prov, parse_prov, GenerationRecord, ProvAttributes, ProvBindings, ProvDocument, Usage,
};

/// A malformed input file; `path` locates the offending value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}: {message}", if path.is_empty() { "." } else { path.as_str() })]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImportError {
    #[error("{record} references missing {kind} {id:?}")]
    DanglingReference {
        record: String,
        kind: &'static str,
        id: String,
    },
    #[error("duplicate provenance record: {0}")]
    DuplicateRecord(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("imported graph is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
}
