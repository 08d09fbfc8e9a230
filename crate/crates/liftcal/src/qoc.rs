//! Gradient-based pulse design: given a model, a target gate, and an initial
//! state, return a control schedule and the reference triplet it induces.
//!
//! The optimizer works in the complex unitary picture so the fidelity metric
//! |Tr(U†·U_target)|/d applies directly; gradients through the step unitaries
//! are exact (Fréchet derivatives of the matrix exponential). The Bloch-space
//! reference is reconstructed from the same Hamiltonians afterwards.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LiftError, Result};
use crate::lifting::{frechet_exp, ReferenceTriplet};
use crate::pauli::BlochState;
use crate::sim::{ControlSchedule, HamiltonianModel};

type CMatrix = DMatrix<Complex64>;

/// Infidelity the optimizer must reach for a reference to count as designed.
pub const DESIGN_INFIDELITY: f64 = 1e-6;

/// Target unitary for gate synthesis.
#[derive(Debug, Clone)]
pub struct GateTarget {
    pub unitary: CMatrix,
}

impl GateTarget {
    pub fn new(unitary: CMatrix) -> Result<Self> {
        if unitary.nrows() != unitary.ncols() {
            return Err(LiftError::ShapeMismatch("target must be square".into()));
        }
        let d = unitary.nrows();
        let err = (unitary.adjoint() * &unitary - CMatrix::identity(d, d)).norm();
        if err > 1e-10 {
            return Err(LiftError::InvalidOperator(format!(
                "target is not unitary: deviation {err:.3e}"
            )));
        }
        Ok(Self { unitary })
    }

    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }
}

/// How the optimizer seeds its control schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuessPolicy {
    Zero,
    /// Constant pulse with the rotation area implied by the target.
    ConstantArea,
    /// Constant-area pulse with seeded per-step jitter; keeps the optimized
    /// waveform non-constant so rollout data excites the identification.
    RandomSeeded {
        seed: u64,
        relative_jitter: f64,
    },
}

#[derive(Debug, Clone)]
pub struct QocConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub u_sat: f64,
    pub initial_guess: GuessPolicy,
}

impl Default for QocConfig {
    fn default() -> Self {
        Self {
            max_iterations: 4000,
            gradient_tolerance: 1e-12,
            u_sat: 1.0,
            initial_guess: GuessPolicy::ConstantArea,
        }
    }
}

/// Fidelity |Tr(U†·target)|/d of the time-ordered product of step unitaries.
pub fn gate_fidelity(model: &HamiltonianModel, u: &ControlSchedule, target: &GateTarget) -> f64 {
    let unitary = total_unitary(model, u);
    overlap_fidelity(&unitary, target)
}

fn overlap_fidelity(unitary: &CMatrix, target: &GateTarget) -> f64 {
    let tau = (target.unitary.adjoint() * unitary).diagonal().sum();
    tau.norm() / target.dim() as f64
}

/// Time-ordered product Π_s exp(−i H(u(s)) Δt), earliest step rightmost.
pub fn total_unitary(model: &HamiltonianModel, u: &ControlSchedule) -> CMatrix {
    let d = model.basis.hilbert_dim();
    let mut total = CMatrix::identity(d, d);
    for s in 0..u.steps() {
        total = step_unitary(model, &u.step(s)) * total;
    }
    total
}

fn step_unitary(model: &HamiltonianModel, u_s: &[f64]) -> CMatrix {
    (model.hamiltonian_at(u_s) * Complex64::new(0.0, -model.dt)).exp()
}

/// Extract the constant-amplitude guess by projecting the target's rotation
/// generator onto each control Hamiltonian. Single-qubit only; other sizes
/// fall back to zero.
fn constant_area_guess(model: &HamiltonianModel, target: &GateTarget) -> ControlSchedule {
    let t = model.horizon;
    let j = model.controls();
    let mut u = DMatrix::zeros(t, j);
    if target.dim() == 2 {
        // V = target / sqrt(det) lies in SU(2): V = cos(θ/2)I − i sin(θ/2) n̂·σ⃗.
        let det = target.unitary[(0, 0)] * target.unitary[(1, 1)]
            - target.unitary[(0, 1)] * target.unitary[(1, 0)];
        let phase = det.sqrt();
        if phase.norm() > 1e-12 {
            let v = &target.unitary / phase;
            let cos_half = (v.diagonal().sum() / Complex64::new(2.0, 0.0))
                .re
                .clamp(-1.0, 1.0);
            let theta = 2.0 * cos_half.acos();
            // n_j sin(θ/2) = (i/2)·Tr(P_j V)
            let mut axis = [0.0f64; 3];
            for (k, a) in axis.iter_mut().enumerate() {
                *a = (Complex64::i() * (model.basis.operator(k) * &v).diagonal().sum()
                    / Complex64::new(2.0, 0.0))
                .re;
            }
            let sin_half = (1.0 - cos_half * cos_half).max(0.0).sqrt();
            if sin_half > 1e-9 {
                for a in axis.iter_mut() {
                    *a /= sin_half;
                }
            }
            // Constant H = Σ u_j H_j over duration T·dt realizes angle
            // 2‖u‖·T·dt about the driven axis; project per control channel.
            let duration = t as f64 * model.dt;
            for (jj, hj) in model.hc_complex.iter().enumerate() {
                // Component of the rotation axis along this control's Pauli axis.
                let mut comp = 0.0;
                for (k, &ax) in axis.iter().enumerate() {
                    let w = ((model.basis.operator(k).adjoint() * hj).diagonal().sum()
                        / Complex64::new(2.0, 0.0))
                    .re;
                    comp += w * ax;
                }
                let amp = theta / 2.0 * comp / duration;
                for s in 0..t {
                    u[(s, jj)] = amp;
                }
            }
        }
    }
    ControlSchedule::new(u)
}

fn initial_guess(
    model: &HamiltonianModel,
    target: &GateTarget,
    cfg: &QocConfig,
) -> ControlSchedule {
    match cfg.initial_guess {
        GuessPolicy::Zero => ControlSchedule::zeros(model.horizon, model.controls()),
        GuessPolicy::ConstantArea => constant_area_guess(model, target),
        GuessPolicy::RandomSeeded {
            seed,
            relative_jitter,
        } => {
            let mut sched = constant_area_guess(model, target);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = sched.max_abs().max(0.1 * cfg.u_sat);
            for v in sched.u.iter_mut() {
                *v += scale * relative_jitter * (rng.gen::<f64>() * 2.0 - 1.0);
            }
            sched
        }
    }
}

/// Exact gradient of the fidelity with respect to every amplitude.
fn fidelity_and_gradient(
    model: &HamiltonianModel,
    u: &ControlSchedule,
    target: &GateTarget,
) -> (f64, DMatrix<f64>) {
    let t = u.steps();
    let j = u.controls();
    let d = target.dim();
    let unitaries: Vec<CMatrix> = (0..t).map(|s| step_unitary(model, &u.step(s))).collect();

    // forward[s] = V_{s-1}···V_0, backward[s] = V_{T-1}···V_{s+1}
    let mut forward = vec![CMatrix::identity(d, d); t + 1];
    for s in 0..t {
        forward[s + 1] = &unitaries[s] * &forward[s];
    }
    let mut backward = vec![CMatrix::identity(d, d); t + 1];
    for s in (0..t).rev() {
        backward[s] = &backward[s + 1] * &unitaries[s];
    }
    // backward[s] currently includes V_s; strip it by using backward[s+1].
    let tau = (target.unitary.adjoint() * &forward[t]).diagonal().sum();
    let fid = tau.norm() / d as f64;

    let mut grad = DMatrix::zeros(t, j);
    if tau.norm() < 1e-300 {
        return (fid, grad);
    }
    for s in 0..t {
        let m = -Complex64::i() * model.dt;
        let h_total = model.hamiltonian_at(&u.step(s)) * m;
        // W = R_s · G† · L_s with L_s = V_{T-1}···V_{s+1}
        let w = &forward[s] * target.unitary.adjoint() * &backward[s + 1];
        for jj in 0..j {
            let dir = &model.hc_complex[jj] * m;
            let dstep = frechet_exp(&h_total, &dir);
            let dtau = (&w * dstep).diagonal().sum();
            grad[(s, jj)] = (tau.conj() * dtau).re / (tau.norm() * d as f64);
        }
    }
    (fid, grad)
}

/// Design a reference: optimize the schedule, then roll it out on the model
/// so the triplet is feasible by construction.
pub fn design_reference(
    model: &HamiltonianModel,
    target: &GateTarget,
    x0: &BlochState,
    cfg: &QocConfig,
) -> Result<(ReferenceTriplet, ControlSchedule)> {
    if cfg.max_iterations == 0 || cfg.u_sat <= 0.0 {
        return Err(LiftError::Configuration(
            "max_iterations must be >= 1 and u_sat > 0".into(),
        ));
    }
    if target.dim() != model.basis.hilbert_dim() {
        return Err(LiftError::ShapeMismatch(
            "target dimension does not match the model".into(),
        ));
    }

    let clamp = |sched: &mut ControlSchedule| {
        for v in sched.u.iter_mut() {
            *v = v.clamp(-cfg.u_sat, cfg.u_sat);
        }
    };

    let mut u = initial_guess(model, target, cfg);
    clamp(&mut u);

    // Adam on the infidelity with projection onto the amplitude box.
    let t = u.steps();
    let j = u.controls();
    let mut m1: DMatrix<f64> = DMatrix::zeros(t, j);
    let mut m2: DMatrix<f64> = DMatrix::zeros(t, j);
    let lr = 0.05;
    let (b1, b2, eps) = (0.9, 0.999, 1e-12);

    let mut best = u.clone();
    let mut best_infidelity = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        let (fid, grad) = fidelity_and_gradient(model, &u, target);
        let infidelity = 1.0 - fid;
        if infidelity < best_infidelity {
            best_infidelity = infidelity;
            best = u.clone();
        }
        if best_infidelity <= 1e-12 {
            break;
        }
        let gnorm = grad.norm();
        if gnorm < cfg.gradient_tolerance && it > 1 {
            break;
        }
        for r in 0..t {
            for ccol in 0..j {
                let g = -grad[(r, ccol)]; // descend on infidelity
                m1[(r, ccol)] = b1 * m1[(r, ccol)] + (1.0 - b1) * g;
                m2[(r, ccol)] = b2 * m2[(r, ccol)] + (1.0 - b2) * g * g;
                let mhat = m1[(r, ccol)] / (1.0 - b1.powi(it as i32));
                let vhat: f64 = m2[(r, ccol)] / (1.0 - b2.powi(it as i32));
                u.u[(r, ccol)] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        clamp(&mut u);
    }

    if best_infidelity > DESIGN_INFIDELITY {
        return Err(LiftError::QocConvergence {
            best_infidelity,
            iterations,
        });
    }

    let reference = ReferenceTriplet::from_rollout(model, &best, x0)?;
    Ok((reference, best))
}
