//! Built-in property checks runnable from the command line. Each check
//! prints one PASS/FAIL line; the command fails if any check fails.

use liftcal::nalgebra::{DMatrix, DVector};
use liftcal::num_complex::Complex64;
use liftcal::pauli::vectorize_hamiltonian;
use liftcal::{
    assemble_snapshots, bilinear_dmd, build_lifted, linearize, rollout, sufficiency_analysis,
    BlochState, ControlSchedule, DerivativeMode, HamiltonianModel, PauliBasis, ReferenceTriplet,
};
use std::sync::Arc;

use crate::config::{ExperimentConfig, Mode};
use crate::sweep::{render_csv, run_trials};
use crate::Result;

fn single_qubit(dt: f64, horizon: usize, drift_z: f64) -> HamiltonianModel {
    let basis = Arc::new(PauliBasis::build(1).expect("single-qubit basis"));
    let h0 = basis.operator(2) * Complex64::new(drift_z, 0.0);
    let hx = basis.operator(0).clone();
    let hy = basis.operator(1).clone();
    HamiltonianModel::from_hamiltonians(basis, h0, vec![hx, hy], dt, horizon).expect("valid model")
}

fn lcg_schedule(t: usize, controls: usize, scale: f64, seed: u64) -> ControlSchedule {
    let mut state = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ControlSchedule::new(DMatrix::from_fn(t, controls, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        scale * (((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5) * 2.0
    }))
}

fn check_structure_constants() -> std::result::Result<(), String> {
    let basis = PauliBasis::build(1).map_err(|e| e.to_string())?;
    let two_n = 2.0;
    for j in 0..3 {
        for k in 0..3 {
            let comm =
                basis.operator(j) * basis.operator(k) - basis.operator(k) * basis.operator(j);
            let mut rebuilt = DMatrix::<Complex64>::zeros(2, 2);
            for l in 0..3 {
                rebuilt += basis.operator(l) * (basis.sigma(j, k, l) * two_n);
            }
            let err = (comm - rebuilt).norm();
            if err > 1e-12 {
                return Err(format!(
                    "commutator ({j},{k}) reconstruction error {err:.2e}"
                ));
            }
        }
    }
    Ok(())
}

fn check_generator_skew() -> std::result::Result<(), String> {
    let basis = PauliBasis::build(1).map_err(|e| e.to_string())?;
    let h = basis.operator(0) * Complex64::new(0.37, 0.0)
        + basis.operator(1) * Complex64::new(-0.81, 0.0)
        + basis.operator(2) * Complex64::new(0.55, 0.0);
    let gen = vectorize_hamiltonian(&h, &basis).map_err(|e| e.to_string())?;
    let skew = (&gen + gen.transpose()).norm();
    if skew > 1e-10 {
        return Err(format!("vectorized generator skew defect {skew:.2e}"));
    }
    Ok(())
}

fn check_norm_conservation() -> std::result::Result<(), String> {
    let t = 1000;
    let model = single_qubit(0.01, t, 0.4);
    let u = lcg_schedule(t, 2, 0.8, 11);
    let x0 = BlochState::from_slice(&[0.0, 0.6, 0.8]);
    let rec = rollout(&model, &u, &x0).map_err(|e| e.to_string())?;
    let n0 = rec.x[0].norm();
    let drift = rec
        .x
        .iter()
        .map(|x| (x.norm() - n0).abs())
        .fold(0.0, f64::max);
    if drift > 1e-9 {
        return Err(format!("norm drift {drift:.2e} over {t} steps"));
    }
    Ok(())
}

fn check_lifted_structure() -> std::result::Result<(), String> {
    let t = 8;
    let model = single_qubit(0.15, t, 0.2);
    let u = lcg_schedule(t, 2, 0.5, 3);
    let x0 = BlochState::from_slice(&[0.0, 0.0, 1.0]);
    let reference = ReferenceTriplet::from_rollout(&model, &u, &x0).map_err(|e| e.to_string())?;
    let (a, b) = linearize(&model, &reference).map_err(|e| e.to_string())?;
    let lifted = build_lifted(&a, &b, &model.c_matrix).map_err(|e| e.to_string())?;
    let d = lifted.state_dim;
    let j = lifted.controls;
    for s in 0..=t {
        for m in 0..t {
            if s > m {
                continue;
            }
            let block = lifted.f_ref.view((s * d, m * j), (d, j));
            if block.norm() > 1e-12 {
                return Err(format!("block ({s},{m}) above the diagonal is non-zero"));
            }
        }
    }
    // Control Jacobian against finite differences of the one-step map.
    let h = 1e-6;
    let s = 3;
    for jj in 0..j {
        let mut up = u.clone();
        up.u[(s, jj)] += h;
        let mut dn = u.clone();
        dn.u[(s, jj)] -= h;
        let pu = liftcal::sim::step_propagator(&model, &up.step(s));
        let pd = liftcal::sim::step_propagator(&model, &dn.step(s));
        let fd: DVector<f64> = (pu - pd) * &reference.x_ref[s] / (2.0 * h);
        let col = b[s].column(jj).into_owned();
        let rel = (&col - &fd).norm() / fd.norm().max(1e-12);
        if rel > 1e-6 {
            return Err(format!("Jacobian column {jj} off by {rel:.2e} relative"));
        }
    }
    Ok(())
}

fn check_identification_recovery() -> std::result::Result<(), String> {
    let dt = 1e-3;
    let t = 300;
    let model = single_qubit(dt, t, 0.7);
    let u = lcg_schedule(t, 2, 1.0, 29);
    let x0 = BlochState::from_slice(&[0.0, 0.6, 0.8]);
    let rec = rollout(&model, &u, &x0).map_err(|e| e.to_string())?;
    let snap = assemble_snapshots(&[rec])
        .map_err(|e| e.to_string())?
        .with_mode(DerivativeMode::ContinuousFd);
    let learned = bilinear_dmd(&snap, true, None, 0.0).map_err(|e| e.to_string())?;
    let err = (&learned.a0 - &model.h0).norm()
        + learned
            .ac
            .iter()
            .zip(&model.hc)
            .map(|(a, h)| (a - h).norm())
            .sum::<f64>();
    if err > 1e-4 {
        return Err(format!("generator recovery error {err:.2e}"));
    }
    Ok(())
}

fn check_sufficiency() -> std::result::Result<(), String> {
    let t = 10;
    let model = single_qubit(0.2, t, 0.0);
    let amp = std::f64::consts::FRAC_PI_2 / (t as f64 * model.dt);
    let u = ControlSchedule::new(DMatrix::from_fn(
        t,
        2,
        |_, c| if c == 0 { amp } else { 0.0 },
    ));
    let x0 = BlochState::from_slice(&[0.0, 0.0, 1.0]);
    let reference = ReferenceTriplet::from_rollout(&model, &u, &x0).map_err(|e| e.to_string())?;
    let report = sufficiency_analysis(&reference, &model.c_matrix, &model.basis, &[0, 1]);
    if !report.overdetermined || report.rank_s != 2 {
        return Err(format!(
            "expected an over-determined rank-2 system, got rank {}",
            report.rank_s
        ));
    }
    Ok(())
}

fn check_sweep_determinism() -> std::result::Result<(), String> {
    let cfg = ExperimentConfig {
        eps_levels: vec![0.05],
        trials_per_level: 1,
        mode: Mode::Lift,
        master_seed: 123,
        ..Default::default()
    };
    let a = render_csv(&run_trials(&cfg, 1).map_err(|e| e.to_string())?);
    let b = render_csv(&run_trials(&cfg, 2).map_err(|e| e.to_string())?);
    if a != b {
        return Err("identical seeds produced different CSV output".into());
    }
    Ok(())
}

/// Run every check, print one line each, and return whether all passed.
pub fn run_validate() -> Result<bool> {
    type Check = fn() -> std::result::Result<(), String>;
    let checks: Vec<(&str, Check)> = vec![
        ("pauli-structure-constants", check_structure_constants),
        ("vectorized-generator-skew", check_generator_skew),
        ("rollout-norm-conservation", check_norm_conservation),
        ("lifted-system-structure", check_lifted_structure),
        ("identification-recovery", check_identification_recovery),
        ("tracking-sufficiency", check_sufficiency),
        ("sweep-determinism", check_sweep_determinism),
    ];
    let mut all = true;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                all = false;
                println!("FAIL {name}: {why}");
            }
        }
    }
    Ok(all)
}
