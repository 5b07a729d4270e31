use thiserror::Error;

use crate::netmodel::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("assignment has {got} values, problem has {want} variables")]
    AssignmentLength { got: usize, want: usize },

    #[error("variable {0} has a non-integral value")]
    NonIntegral(String),

    #[error("placement shape does not match the topology: {0}")]
    Shape(String),

    #[error("model is infeasible")]
    Infeasible,

    #[error("search limit reached before any feasible solution was found")]
    LimitReached,

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("invalid trace: {0}")]
    Trace(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
