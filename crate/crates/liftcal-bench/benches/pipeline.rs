//! Criterion benches over the stages of a calibration trial: simulation,
//! lifting, the learning-control solve, identification, and the full loop.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use liftcal::ilc::{solve_correction, IlcConfig};
use liftcal::{
    assemble_snapshots, bilinear_dmd, build_lifted, design_reference, linearize, rollout, run_lift,
    DerivativeMode, LiftConfig, QocConfig, ReferenceTriplet, SimExperiment,
};
use liftcal_bench::{ground_state, perturbed, single_qubit, x_gate_target};

fn bench_rollout(c: &mut Criterion) {
    let model = single_qubit(0.15, 10, 0.1);
    let target = x_gate_target();
    let x0 = ground_state();
    let (_, u) = design_reference(&model, &target, &x0, &qoc()).expect("design");
    c.bench_function("rollout-10-steps", |b| {
        b.iter(|| rollout(black_box(&model), black_box(&u), black_box(&x0)).unwrap())
    });
}

fn qoc() -> QocConfig {
    QocConfig {
        u_sat: 2.0,
        ..QocConfig::default()
    }
}

fn reference() -> (liftcal::HamiltonianModel, ReferenceTriplet) {
    let model = single_qubit(0.15, 10, 0.1);
    let target = x_gate_target();
    let x0 = ground_state();
    let (reference, _) = design_reference(&model, &target, &x0, &qoc()).expect("design");
    (model, reference)
}

fn bench_lifting(c: &mut Criterion) {
    let (model, reference) = reference();
    c.bench_function("linearize-and-lift", |b| {
        b.iter(|| {
            let (a, bm) = linearize(black_box(&model), black_box(&reference)).unwrap();
            build_lifted(&a, &bm, &model.c_matrix).unwrap()
        })
    });
}

fn bench_ilc_solve(c: &mut Criterion) {
    let (model, reference) = reference();
    let (a, bm) = linearize(&model, &reference).unwrap();
    let lifted = build_lifted(&a, &bm, &model.c_matrix).unwrap();
    let d =
        &lifted.f_ref * liftcal::nalgebra::DVector::from_element(lifted.lifted_control_len(), 1e-3);
    let config = IlcConfig {
        u_sat: 2.0,
        ..IlcConfig::default()
    };
    c.bench_function("ilc-solve-correction", |b| {
        b.iter(|| solve_correction(&lifted, &reference, black_box(&d), &config).unwrap())
    });
}

fn bench_identification(c: &mut Criterion) {
    let model = single_qubit(0.15, 10, 0.1);
    let target = x_gate_target();
    let x0 = ground_state();
    let (_, u) = design_reference(&model, &target, &x0, &qoc()).expect("design");
    let plant = perturbed(&model, 0.2);
    let rec = rollout(&plant, &u, &x0).unwrap();
    c.bench_function("bilinear-dmd-one-rollout", |b| {
        b.iter(|| {
            let snap = assemble_snapshots(black_box(std::slice::from_ref(&rec)))
                .unwrap()
                .with_mode(DerivativeMode::Discrete);
            bilinear_dmd(&snap, true, None, 0.0).unwrap()
        })
    });
}

fn bench_full_trial(c: &mut Criterion) {
    let nominal = single_qubit(0.15, 10, 0.0);
    let target = x_gate_target();
    let x0 = ground_state();
    let plant = perturbed(&nominal, 0.2);
    let experiment = SimExperiment::new(plant, target.clone());
    let cfg = LiftConfig {
        qoc: qoc_with_jitter(),
        ilc: IlcConfig {
            u_sat: 2.0,
            ..IlcConfig::default()
        },
        ..LiftConfig::default()
    };
    c.bench_function("full-calibration-trial-eps-0.2", |b| {
        b.iter(|| run_lift(&nominal, &experiment, &target, &x0, black_box(&cfg)).unwrap())
    });
}

fn qoc_with_jitter() -> QocConfig {
    QocConfig {
        u_sat: 2.0,
        initial_guess: liftcal::GuessPolicy::RandomSeeded {
            seed: 0,
            relative_jitter: 0.15,
        },
        ..QocConfig::default()
    }
}

criterion_group!(
    benches,
    bench_rollout,
    bench_lifting,
    bench_ilc_solve,
    bench_identification,
    bench_full_trial
);
criterion_main!(benches);
