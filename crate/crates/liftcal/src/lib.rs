//! Pulse-level gate calibration: optimal-control reference design, bilinear
//! system identification from rollout data, and norm-optimal iterative
//! learning control, tied together by a calibration loop that only talks to
//! the device through an experiment interface.

pub use nalgebra;
pub use num_complex;

pub mod error;
pub mod ilc;
pub mod lifting;
pub mod orchestrator;
pub mod pauli;
pub mod qoc;
pub mod sim;
pub mod sysid;

pub use error::{LiftError, Result};
pub use ilc::{contraction_estimate, IlcConfig, IlcState};
pub use lifting::{build_lifted, lift_deviation, linearize, LiftedSystem, ReferenceTriplet};
pub use orchestrator::{
    convergence_check, run_ilc_only, run_lift, single_qubit_setup, CalibrationTrace, Experiment,
    LiftConfig, SimExperiment, TraceEntry,
};
pub use pauli::{BlochState, PauliBasis};
pub use qoc::{design_reference, gate_fidelity, GateTarget, GuessPolicy, QocConfig};
pub use sim::{
    apply_error_model, rollout, sample_error_model, ControlSchedule, ErrorModel, HamiltonianModel,
    Phase, RolloutRecord, SignPolicy,
};
pub use sysid::{
    assemble_snapshots, bilinear_dmd, dmd, feasible, refine_exponential_fit, sufficiency_analysis,
    DerivativeMode, LearnedModel, SnapshotSet, SufficiencyReport,
};
