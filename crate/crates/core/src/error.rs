use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("candidate index {index} out of range (total {total})")]
    OutOfRange { index: u64, total: u64 },
    #[error("candidate space exhausted")]
    Exhausted,
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("table parse error on line {line}: {message}")]
    TableParse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
