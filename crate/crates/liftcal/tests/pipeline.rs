//! End-to-end calibration against a simulated device with coherent errors.

use liftcal::orchestrator::single_qubit_setup;
use liftcal::sim::apply_error_model;
use liftcal::{run_ilc_only, run_lift, ErrorModel, LiftConfig, SimExperiment};

#[test]
fn full_loop_beats_learning_control_alone_at_large_mismatch() {
    let (nominal, target, x0) = single_qubit_setup(0.2, 10).unwrap();
    let err = ErrorModel {
        eps_z: 0.3,
        eps_controls: vec![0.28, -0.31],
    };
    let true_model = apply_error_model(&nominal, &err).unwrap();
    let exp = SimExperiment::new(true_model, target.clone());
    let cfg = LiftConfig {
        rng_seed: 7,
        ..Default::default()
    };

    let lift = run_lift(&nominal, &exp, &target, &x0, &cfg).unwrap();
    assert!(
        lift.converged,
        "full loop stalled at {:.2e}",
        lift.terminal_infidelity()
    );
    assert_eq!(lift.redesigns, 1);

    let ilc = run_ilc_only(&nominal, &exp, &target, &x0, &cfg).unwrap();
    assert!(
        lift.terminal_infidelity() < ilc.terminal_infidelity() || !ilc.converged,
        "learning control alone matched the full loop at large mismatch"
    );
}

#[test]
fn rollout_budget_is_respected() {
    let (nominal, target, x0) = single_qubit_setup(0.2, 10).unwrap();
    let err = ErrorModel {
        eps_z: 0.3,
        eps_controls: vec![0.3, 0.3],
    };
    let true_model = apply_error_model(&nominal, &err).unwrap();
    let exp = SimExperiment::new(true_model, target.clone());
    let cfg = LiftConfig {
        max_rollouts: 3,
        rng_seed: 11,
        ..Default::default()
    };
    let trace = run_lift(&nominal, &exp, &target, &x0, &cfg).unwrap();
    assert!(trace.rollouts_used <= 3);
    assert_eq!(trace.entries.len(), trace.rollouts_used);
}
