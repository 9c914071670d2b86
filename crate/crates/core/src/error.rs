use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, parameters, or inputs.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed input data (CSV rows, plan files, MPS text).
    #[error("parse error: {0}")]
    Parse(String),
    /// Model construction or validation failure.
    #[error("model error: {0}")]
    Model(String),
    /// Solver adapter failure (missing backend, integrality violation, ...).
    #[error("solver error: {0}")]
    Solver(String),
    /// The model was proved infeasible or unbounded, or no incumbent exists.
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    pub fn no_solution(msg: impl Into<String>) -> Self {
        Error::NoSolution(msg.into())
    }
}
