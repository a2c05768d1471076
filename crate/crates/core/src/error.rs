use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("inadmissible data: {}", .0.join("; "))]
    Inadmissible(Vec<String>),

    #[error("numerical abort at step {step} (t = {t}): {reason}")]
    NumericalAbort { step: usize, t: f64, reason: String },

    #[error("newton did not converge at step {step} after {iterations} iterations (residual {residual:e})")]
    NewtonFailure {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
