//! Harness around the calibration library: seeded Monte Carlo sweeps over
//! error magnitudes, trajectory dumps for single trials, and a built-in
//! validation suite. All file formats are plain CSV/JSON/whitespace text.

pub mod config;
pub mod sweep;
pub mod track;
pub mod validate;

pub use config::{trial_seed, ExperimentConfig, LiftSettings, Mode, SignPolicyTag};
pub use sweep::{run_sweep, SweepSummary};
pub use track::dump_tracking;
pub use validate::run_validate;

/// Harness-level failures, split by exit code: configuration problems exit
/// with 2, runtime failures with 3.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("calibration failure: {0}")]
    Algorithm(#[from] liftcal::LiftError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
