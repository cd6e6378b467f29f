use thiserror::Error;

/// Errors raised by mesh construction, data ingestion and the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ingestion error at line {line}: {msg}")]
    Ingest { line: usize, msg: String },

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:.3e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ill-conditioned system (condition estimate {condition:.3e}): {context}")]
    IllConditioned { condition: f64, context: String },

    #[error("problem size {size} exceeds the budget {budget}; pass force to override")]
    Budget { size: usize, budget: usize },

    #[error("corrector ({element}, {local}) failed: {source}")]
    Corrector {
        element: usize,
        local: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
