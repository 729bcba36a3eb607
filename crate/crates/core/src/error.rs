use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),
    #[error("invalid cost model: {0}")]
    InvalidCost(String),
    #[error("profile has {got} contributions, expected {expected}")]
    ProfileLength { expected: usize, got: usize },
    #[error("contribution {index} = {value} outside [{c_min}, {c_max}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        c_min: f64,
        c_max: f64,
    },
    #[error("index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("precondition not met: {0}")]
    Precondition(String),
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("utility vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serializing output: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum RlError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("environment returned score {score} outside [{c_min}, {c_max}]")]
    EnvContract { score: f64, c_min: f64, c_max: f64 },
    #[error("invalid trainer configuration: {0}")]
    Config(String),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}
