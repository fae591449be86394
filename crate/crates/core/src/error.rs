use std::path::PathBuf;

use thiserror::Error;

use crate::model::PlanViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    /// A configuration or input document violates one of its invariants.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected} links, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid optimizer parameters: {0}")]
    InvalidParams(String),

    #[error("cannot select an operating point from an empty front")]
    EmptyFront,

    #[error("invalid signal plan: {}", format_violations(.0))]
    InvalidPlan(Vec<PlanViolation>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Parse {
            context: context.into(),
            source,
        }
    }
}

fn format_violations(violations: &[PlanViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
