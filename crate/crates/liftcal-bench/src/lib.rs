//! Shared setup for the criterion benches: a single-qubit model, a designed
//! X-gate reference, and a perturbed plant.

use std::sync::Arc;

use liftcal::num_complex::Complex64;
use liftcal::{
    apply_error_model, BlochState, ErrorModel, GateTarget, HamiltonianModel, PauliBasis,
};

pub fn single_qubit(dt: f64, horizon: usize, drift_z: f64) -> HamiltonianModel {
    let basis = Arc::new(PauliBasis::build(1).expect("single-qubit basis"));
    let h0 = basis.operator(2) * Complex64::new(drift_z, 0.0);
    let hx = basis.operator(0).clone();
    let hy = basis.operator(1).clone();
    HamiltonianModel::from_hamiltonians(basis, h0, vec![hx, hy], dt, horizon).expect("valid model")
}

pub fn x_gate_target() -> GateTarget {
    let basis = PauliBasis::build(1).expect("basis");
    GateTarget::new(basis.operator(0).clone()).expect("X is unitary")
}

pub fn ground_state() -> BlochState {
    BlochState::from_slice(&[0.0, 0.0, 1.0])
}

pub fn perturbed(nominal: &HamiltonianModel, eps: f64) -> HamiltonianModel {
    let error = ErrorModel {
        eps_z: eps,
        eps_controls: vec![eps, -eps],
    };
    apply_error_model(nominal, &error).expect("perturbed model")
}
