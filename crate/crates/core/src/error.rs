use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MuskatError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite integrand value at quadrature node {node} (offset s = {offset})")]
    NonFiniteNode { node: usize, offset: f64 },

    #[error("non-finite operator value at x = {x}")]
    NonFiniteValue { x: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Rayleigh-Taylor condition violated: delta_rho = g*(rho_minus - rho_plus) = {delta_rho} <= 0")]
    RayleighTaylor { delta_rho: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("point #{index} at ({x}, {y}) lies within clearance {clearance} of the interface")]
    Clearance {
        index: usize,
        x: f64,
        y: f64,
        clearance: f64,
    },

    #[error("point #{index} at ({x}, {y}) is not on the requested side of the interface")]
    WrongSide { index: usize, x: f64, y: f64 },

    #[error("interface became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("snapshot sink failed: {0}")]
    Sink(String),

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
}

pub type Result<T> = std::result::Result<T, MuskatError>;
