use thiserror::Error;

/// Errors raised by the exact engine.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("size guard exceeded: {what} = {value} (limit {limit})")]
    SizeGuard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("partition {0} is crossing")]
    Crossing(String),

    #[error("{lower} does not refine {upper}")]
    NotComparable { lower: String, upper: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid process description: {0}")]
    InvalidSpec(String),

    #[error("cumulant not defined for word {0:?}")]
    UndefinedCumulant(Vec<usize>),

    #[error("invalid subdivision: {0}")]
    InvalidSubdivision(String),

    #[error("invalid interval [{start}, {end})")]
    InvalidInterval { start: String, end: String },

    #[error("derived-tuple substitution rule failed its oracle check for groups {0:?}")]
    SubstitutionRule(Vec<Vec<usize>>),

    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
