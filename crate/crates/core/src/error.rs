use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at cell {index}")]
    NonFinite { index: usize },

    #[error("shape clearance {clearance:.4} is below the required {required:.4}")]
    Clearance { clearance: f64, required: f64 },

    #[error("interface clearance {clearance:.4} fell below rho = {rho:.4} at step {step}")]
    ClearanceViolation { step: usize, clearance: f64, rho: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("level set touches the box boundary")]
    BoundaryContact,

    #[error("contour is not closed: {0}")]
    OpenContour(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("focal point crossing: r * kappa = {0:.6} >= 1")]
    FocalCrossing(f64),

    #[error("time {t} is past the extinction time {t_ext}")]
    PastExtinction { t: f64, t_ext: f64 },

    #[error("point is not on the contour (distance {0:.3e})")]
    NotOnContour(f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("bad field header: {0}")]
    Header(String),

    #[error("payload size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
