use thiserror::Error;

/// Errors shared across the calibration library.
#[derive(Debug, Error)]
pub enum LiftError {
    #[error("unsupported qubit count {0}: supported range is 1..=3")]
    UnsupportedDimension(usize),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("reference is infeasible on the model: max remainder {max_remainder:.3e} exceeds {tolerance:.3e}")]
    InfeasibleReference { max_remainder: f64, tolerance: f64 },

    #[error("initial-state reset violated: deviation {0:.3e}")]
    ResetViolation(f64),

    #[error("pulse optimizer failed to converge: best infidelity {best_infidelity:.3e} after {iterations} iterations")]
    QocConvergence {
        best_infidelity: f64,
        iterations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Configuration(String),
}

pub type Result<T> = std::result::Result<T, LiftError>;
