use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("warp is not strictly increasing at index {index} ({left} >= {right})")]
    NonMonotoneWarp { index: usize, left: f64, right: f64 },

    #[error("warp endpoints ({first}, {last}) do not match the domain [{start}, {end}]")]
    WarpEndpoints {
        first: f64,
        last: f64,
        start: f64,
        end: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{points} grid points cannot be split into {periods} equal periods")]
    PeriodMismatch { points: usize, periods: usize },

    #[error("point left the positive orthant of the sphere at index {index} (value {value})")]
    OrthantViolation { index: usize, value: f64 },

    #[error("points are antipodal on the sphere (angle {0})")]
    Antipodal(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("non-finite loss {loss} at outer iteration {iteration}")]
    NonFiniteLoss { iteration: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
