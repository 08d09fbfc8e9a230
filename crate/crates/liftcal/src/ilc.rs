//! Norm-optimal iterative learning control on the lifted deviation system.
//!
//! Each trial observes a lifted deviation, backs out the repeatable
//! disturbance d = δx − F^ref·δu, and solves a regularized least-squares
//! problem for the next control correction. Without active actuation bounds
//! the update is the exact normal-equations minimizer (matching the
//! pseudoinverse solution); with bounds a projected accelerated gradient
//! method takes over.

use nalgebra::{DMatrix, DVector};

use crate::error::{LiftError, Result};
use crate::lifting::{lift_deviation, LiftedSystem, ReferenceTriplet};
use crate::sim::{ControlSchedule, RolloutRecord};

/// Tuning for the per-trial quadratic program.
#[derive(Debug, Clone)]
pub struct IlcConfig {
    /// Output weighting; identity when absent. Square, sized (T+1)·K.
    pub w: Option<DMatrix<f64>>,
    /// Tikhonov weight on the control-rate penalty ‖D·δu‖.
    pub lambda: f64,
    /// Absolute actuation bound on u_ref + δu.
    pub u_sat: f64,
    /// Per-trial correction bound on δu.
    pub du_sat: f64,
    pub max_qp_iterations: usize,
    pub qp_tolerance: f64,
}

impl Default for IlcConfig {
    fn default() -> Self {
        Self {
            w: None,
            lambda: 1e-3,
            u_sat: 1.0,
            du_sat: 0.5,
            max_qp_iterations: 20_000,
            qp_tolerance: 1e-12,
        }
    }
}

/// Per-trial learning state.
#[derive(Debug, Clone)]
pub struct IlcState {
    /// Current disturbance estimate (persistence model carries the last
    /// observation forward).
    pub d_hat: DVector<f64>,
    /// Correction applied on the next trial.
    pub delta_u: DVector<f64>,
    pub iteration: usize,
    /// RMS output deviation per observed trial, oldest first.
    pub tracking_rms: Vec<f64>,
}

impl IlcState {
    pub fn initial(lifted: &LiftedSystem) -> Self {
        Self {
            d_hat: DVector::zeros(lifted.lifted_state_len()),
            delta_u: DVector::zeros(lifted.lifted_control_len()),
            iteration: 0,
            tracking_rms: Vec::new(),
        }
    }
}

/// Back out the repeatable disturbance from an observed lifted deviation:
/// d = δx − F^ref·δu.
pub fn estimate_disturbance(
    lifted: &LiftedSystem,
    dx: &DVector<f64>,
    du_applied: &DVector<f64>,
) -> Result<DVector<f64>> {
    if dx.len() != lifted.lifted_state_len() || du_applied.len() != lifted.lifted_control_len() {
        return Err(LiftError::ShapeMismatch(
            "lifted deviation dimensions do not match the lifted system".into(),
        ));
    }
    Ok(dx - &lifted.f_ref * du_applied)
}

/// First-order forward-difference operator acting per control channel on a
/// time-major lifted control vector: (T−1)·J × T·J.
pub fn difference_operator(steps: usize, controls: usize) -> DMatrix<f64> {
    if steps < 2 {
        return DMatrix::zeros(0, steps * controls);
    }
    let mut d = DMatrix::zeros((steps - 1) * controls, steps * controls);
    for s in 0..steps - 1 {
        for j in 0..controls {
            d[(s * controls + j, s * controls + j)] = -1.0;
            d[(s * controls + j, (s + 1) * controls + j)] = 1.0;
        }
    }
    d
}

fn box_bounds(reference: &ReferenceTriplet, config: &IlcConfig) -> (DVector<f64>, DVector<f64>) {
    let t = reference.horizon();
    let j = reference.u_ref.controls();
    let mut lower = DVector::zeros(t * j);
    let mut upper = DVector::zeros(t * j);
    for s in 0..t {
        for jj in 0..j {
            let u = reference.u_ref.u[(s, jj)];
            lower[s * j + jj] = (-config.du_sat).max(-config.u_sat - u);
            upper[s * j + jj] = config.du_sat.min(config.u_sat - u);
        }
    }
    (lower, upper)
}

fn clamp_to(v: &mut DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) {
    for i in 0..v.len() {
        v[i] = v[i].clamp(lower[i], upper[i]);
    }
}

/// Solve min_δu ‖W·G·(F^ref·δu + d)‖² + λ²‖D·δu‖² subject to the actuation
/// box. The unconstrained minimizer is returned directly when it is
/// feasible; otherwise projected FISTA refines it, keeping the best feasible
/// iterate seen.
pub fn solve_correction(
    lifted: &LiftedSystem,
    reference: &ReferenceTriplet,
    d_hat: &DVector<f64>,
    config: &IlcConfig,
) -> Result<DVector<f64>> {
    if d_hat.len() != lifted.lifted_state_len() {
        return Err(LiftError::ShapeMismatch(
            "disturbance length does not match the lifted state".into(),
        ));
    }
    let gf = &lifted.g * &lifted.f_ref;
    let gd = &lifted.g * d_hat;
    let (m, b) = match &config.w {
        Some(w) => {
            if w.nrows() != gf.nrows() || w.ncols() != gf.nrows() {
                return Err(LiftError::ShapeMismatch(
                    "output weight size does not match the lifted output".into(),
                ));
            }
            (w * gf, w * gd)
        }
        None => (gf, gd),
    };

    // Stack the smoothing penalty under the tracking term so one
    // least-squares problem covers both.
    let diff = difference_operator(lifted.steps, lifted.controls);
    let cols = lifted.lifted_control_len();
    let extra = if config.lambda > 0.0 { diff.nrows() } else { 0 };
    let mut a = DMatrix::zeros(m.nrows() + extra, cols);
    a.view_mut((0, 0), (m.nrows(), cols)).copy_from(&m);
    if extra > 0 {
        a.view_mut((m.nrows(), 0), (extra, cols))
            .copy_from(&(&diff * config.lambda));
    }
    let mut rhs = DVector::zeros(a.nrows());
    rhs.rows_mut(0, b.len()).copy_from(&b);

    // Minimum-norm unconstrained solution via the pseudoinverse.
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let pinv_a = svd.pseudo_inverse(1e-12 * smax.max(1.0)).expect("svd");
    let unconstrained = -(&pinv_a * &rhs);

    let (lower, upper) = box_bounds(reference, config);
    let feasible = (0..cols)
        .all(|i| unconstrained[i] >= lower[i] - 1e-12 && unconstrained[i] <= upper[i] + 1e-12);
    if feasible {
        let mut sol = unconstrained;
        clamp_to(&mut sol, &lower, &upper);
        return Ok(sol);
    }

    // Projected FISTA on ‖A·δu + rhs‖².
    let objective = |v: &DVector<f64>| (&a * v + &rhs).norm_squared();
    let lipschitz = 2.0 * smax * smax;
    let step = if lipschitz > 0.0 {
        1.0 / lipschitz
    } else {
        1.0
    };
    let mut x = unconstrained.clone();
    clamp_to(&mut x, &lower, &upper);
    let mut best = x.clone();
    let mut best_obj = objective(&best);
    let mut z = x.clone();
    let mut t_acc = 1.0_f64;
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &rhs;
    for _ in 0..config.max_qp_iterations {
        let grad = (&ata * &z + &atb) * 2.0;
        let mut next = &z - &grad * step;
        clamp_to(&mut next, &lower, &upper);
        let obj = objective(&next);
        if obj < best_obj {
            best_obj = obj;
            best = next.clone();
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt());
        z = &next + (&next - &x) * ((t_acc - 1.0) / t_next);
        clamp_to(&mut z, &lower, &upper);
        let moved = (&next - &x).norm();
        x = next;
        t_acc = t_next;
        if moved < config.qp_tolerance {
            break;
        }
    }
    Ok(best)
}

/// One learning iteration: observe a trial, update the disturbance estimate
/// (persistence), solve for the next correction, and compose the next
/// schedule.
pub fn ilc_step(
    lifted: &LiftedSystem,
    reference: &ReferenceTriplet,
    record: &RolloutRecord,
    state: &IlcState,
    config: &IlcConfig,
) -> Result<(IlcState, ControlSchedule)> {
    let (dx, dy, du_applied) = lift_deviation(record, reference)?;
    let d_hat = estimate_disturbance(lifted, &dx, &du_applied)?;
    let mut tracking_rms = state.tracking_rms.clone();
    tracking_rms.push(dy.norm() / (dy.len() as f64).sqrt());
    let delta_u = solve_correction(lifted, reference, &d_hat, config)?;
    let next = IlcState {
        d_hat,
        delta_u: delta_u.clone(),
        iteration: state.iteration + 1,
        tracking_rms,
    };
    Ok((next, compose_schedule(reference, &delta_u)?))
}

/// u_ref + δu, reshaped from the time-major lifted vector.
pub fn compose_schedule(
    reference: &ReferenceTriplet,
    delta_u: &DVector<f64>,
) -> Result<ControlSchedule> {
    let t = reference.horizon();
    let j = reference.u_ref.controls();
    if delta_u.len() != t * j {
        return Err(LiftError::ShapeMismatch(
            "correction length does not match the schedule".into(),
        ));
    }
    let mut u = reference.u_ref.u.clone();
    for s in 0..t {
        for jj in 0..j {
            u[(s, jj)] += delta_u[s * j + jj];
        }
    }
    Ok(ControlSchedule::new(u))
}

/// Upper bound on the per-trial error contraction rate: σ_max(I − F^ref⁺·F).
/// Below one, unconstrained norm-optimal ILC converges monotonically.
pub fn contraction_estimate(f_ref: &DMatrix<f64>, f_true: &DMatrix<f64>) -> Result<f64> {
    if f_ref.shape() != f_true.shape() {
        return Err(LiftError::ShapeMismatch(
            "lifted maps must have matching shapes".into(),
        ));
    }
    let svd = f_ref.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let pinv = svd.pseudo_inverse(1e-12 * smax.max(1.0)).expect("svd");
    let n = f_ref.ncols();
    let m = DMatrix::identity(n, n) - pinv * f_true;
    Ok(m.svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max))
}
