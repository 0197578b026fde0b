use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed document at byte {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid scenario: {}", format_violations(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no candidate links within {max_link_distance} m; increase the maximum link distance")]
    NoCandidateLinks { max_link_distance: f64 },

    #[error("binary variable {var} = {value} is not within {tol} of 0 or 1")]
    NonIntegral { var: usize, value: f64, tol: f64 },

    #[error("too many binary variables for exhaustive search: {0} (limit {1})")]
    TooManyBinaries(usize, usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("optimality not proven: {0}")]
    NotProven(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
