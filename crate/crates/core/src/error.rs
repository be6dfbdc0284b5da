use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
    #[error("invalid geometry: {0}")]
    BadGeometry(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("eigensolver failed to converge on a {size}x{size} block")]
    EigenNoConvergence { size: usize },
    #[error("eigenvalue {0} is degenerate across blocks; only direct numerical reconstruction applies")]
    DegenerateEigenvalue(f64),
    #[error("contour integration did not stabilize after {0} nodes")]
    ContourUnstable(usize),
    #[error("Newton iteration did not converge within {0} steps")]
    NewtonNoConvergence(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
