use std::fmt;

use thiserror::Error;

/// A single failed parameter check, addressed by its `section.key` path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Prefix the path with a section name (`k` becomes `grid.k`).
    pub fn in_section(mut self, section: &str) -> Self {
        self.path = format!("{section}.{}", self.path);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub(crate) fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("support overflow: {0}")]
    SupportOverflow(String),

    #[error("{0} requires a nonzero field")]
    ZeroField(&'static str),

    #[error("no trial field with negative energy for R_n in {tried:?}; extend R_list")]
    NoWitness { tried: Vec<f64> },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(path: &str, message: impl Into<String>) -> Self {
        Error::Invalid(vec![Violation::new(path, message)])
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
