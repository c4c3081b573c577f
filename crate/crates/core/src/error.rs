use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("out of domain: point {point:?} at step {step} is closer than {margin} to the noise box boundary")]
    OutOfDomain {
        step: usize,
        point: Vec<f64>,
        margin: f64,
    },

    #[error("capacity exceeded: {what} needs {required} but the limit is {limit}")]
    Capacity {
        what: String,
        required: u64,
        limit: u64,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time {t} is not on the path grid (step {dt})")]
    OffGrid { t: f64, dt: f64 },

    #[error("malformed noise blob: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
