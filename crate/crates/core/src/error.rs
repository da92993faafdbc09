use thiserror::Error;

use crate::dynamics::Termination;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs a power-of-two point count of at least 16, got {0}")]
    InvalidPointCount(usize),

    #[error("grid half-length must be positive and finite, got {0}")]
    InvalidHalfLength(f64),

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("derivative order {0} is not supported here")]
    InvalidDerivativeOrder(u32),

    #[error("seminorm order must lie in (0, 1), got {0}")]
    InvalidSeminormOrder(f64),

    #[error("map is not orientation preserving: phi_x = {min_derivative:e} at index {index}")]
    NotMonotone { min_derivative: f64, index: usize },

    #[error("phi_x drops to {min_derivative:e}, below the margin {margin:e}")]
    PositivityMargin { min_derivative: f64, margin: f64 },

    #[error("inverse root finder did not converge at grid index {index}")]
    InversionFailed { index: usize },

    #[error("conjugated Helmholtz iteration stalled after {iterations} iterations (residual {residual:e})")]
    ConjugateSolveStalled { iterations: usize, residual: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite state detected at t = {time}")]
    NanDetected { time: f64 },

    #[error(
        "initial velocity lies outside the exponential-map domain ({termination:?} at t = {time})"
    )]
    OutsideExpDomain { termination: Termination, time: f64 },

    #[error("trajectory for {label} terminated early ({termination:?} at t = {time})")]
    Blowup {
        label: String,
        termination: Termination,
        time: f64,
    },

    #[error("bump radius {radius} is not resolved by spacing {spacing} (needs radius > 4h)")]
    UnderResolved { radius: f64, spacing: f64 },

    #[error("probe direction is degenerate: m_est = {m_est:e}")]
    DegenerateProbe { m_est: f64 },

    #[error("supports of the two fields overlap at grid index {index}")]
    OverlappingSupports { index: usize },

    #[error("malformed snapshot file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
