use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix is not strictly stable (spectral radius {radius})")]
    Unstable { radius: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {cond:e})")]
    Singular { cond: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("set is empty")]
    EmptySet,

    #[error("set is unbounded")]
    Unbounded,

    #[error("iteration cap of {cap} reached after {iterations} iterations")]
    IterationCap { cap: usize, iterations: usize },

    /// The invariant-set recursion hit its cap; `partial` is not invariant.
    #[error("set recursion not finitely determined within {iterations} iterations")]
    NotDetermined {
        iterations: usize,
        partial: Box<crate::polytope::HPolytope>,
    },

    #[error("terminal synthesis failed: {0}")]
    Synthesis(String),

    #[error("{0} lies outside its admissible set")]
    NotAdmissible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
