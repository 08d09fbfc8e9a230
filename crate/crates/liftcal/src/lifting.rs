//! Linearization of the discrete dynamics around a reference triplet and
//! assembly of the lifted block system of Markov parameters.
//!
//! With the exact exponential integrator, ∂f/∂x at the reference is the step
//! propagator itself, and ∂f/∂u follows from the Fréchet derivative of the
//! matrix exponential (exp of the block matrix [[M, E], [0, M]] carries the
//! directional derivative in its top-right block).

use nalgebra::{DMatrix, DVector};

use crate::error::{LiftError, Result};
use crate::pauli::BlochState;
use crate::sim::{rollout, step_propagator, ControlSchedule, HamiltonianModel, RolloutRecord};

/// Tolerance for the feasibility remainder r(s) and the initial reset.
pub const REMAINDER_TOL: f64 = 1e-10;

/// A trajectory (y, x, u) that satisfies the discrete dynamics of the model
/// it was designed on.
#[derive(Debug, Clone)]
pub struct ReferenceTriplet {
    pub y_ref: Vec<DVector<f64>>,
    pub x_ref: Vec<DVector<f64>>,
    pub u_ref: ControlSchedule,
    /// The model the reference is feasible on.
    pub model: HamiltonianModel,
}

impl ReferenceTriplet {
    /// Build the triplet by rolling the schedule out on the model; the
    /// remainder is zero by construction.
    pub fn from_rollout(
        model: &HamiltonianModel,
        u_ref: &ControlSchedule,
        x0: &BlochState,
    ) -> Result<Self> {
        let rec = rollout(model, u_ref, x0)?;
        Ok(Self {
            y_ref: rec.y,
            x_ref: rec.x,
            u_ref: u_ref.clone(),
            model: model.clone(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.u_ref.steps()
    }

    /// Largest per-step feasibility remainder ‖f(x(s), u(s)) − x(s+1)‖.
    pub fn max_remainder(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.horizon() {
            let p = step_propagator(&self.model, &self.u_ref.step(s));
            let r = (&p * &self.x_ref[s] - &self.x_ref[s + 1]).norm();
            worst = worst.max(r);
        }
        worst
    }
}

/// The lifted deviation dynamics δx = F^ref δu, δy = G δx.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    /// (T+1)·d × T·J, strictly block lower triangular.
    pub f_ref: DMatrix<f64>,
    /// (T+1)·K × (T+1)·d, block diagonal I ⊗ C.
    pub g: DMatrix<f64>,
    pub a_ref: Vec<DMatrix<f64>>,
    pub b_ref: Vec<DMatrix<f64>>,
    pub state_dim: usize,
    pub controls: usize,
    pub steps: usize,
}

impl LiftedSystem {
    pub fn lifted_state_len(&self) -> usize {
        (self.steps + 1) * self.state_dim
    }

    pub fn lifted_control_len(&self) -> usize {
        self.steps * self.controls
    }
}

/// Directional derivative of the matrix exponential: D exp(M)[E], via the
/// top-right block of exp([[M, E], [0, M]]).
pub fn frechet_exp<T>(m: &DMatrix<T>, e: &DMatrix<T>) -> DMatrix<T>
where
    T: nalgebra::ComplexField + Copy,
{
    let d = m.nrows();
    let mut block = DMatrix::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(m);
    block.view_mut((0, d), (d, d)).copy_from(e);
    block.view_mut((d, d), (d, d)).copy_from(m);
    let exp = block.exp();
    exp.view((0, d), (d, d)).into_owned()
}

/// Per-step Jacobians of the discrete step map at the reference.
#[allow(clippy::type_complexity)]
pub fn linearize(
    model: &HamiltonianModel,
    reference: &ReferenceTriplet,
) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    let t = reference.horizon();
    if reference.x_ref.len() != t + 1 {
        return Err(LiftError::ShapeMismatch(
            "reference state trajectory length does not match horizon".into(),
        ));
    }
    let max_remainder = {
        let mut worst: f64 = 0.0;
        for s in 0..t {
            let p = step_propagator(model, &reference.u_ref.step(s));
            worst = worst.max((&p * &reference.x_ref[s] - &reference.x_ref[s + 1]).norm());
        }
        worst
    };
    if max_remainder > REMAINDER_TOL {
        return Err(LiftError::InfeasibleReference {
            max_remainder,
            tolerance: REMAINDER_TOL,
        });
    }

    let dim = model.dim();
    let controls = model.controls();
    let mut a_ref = Vec::with_capacity(t);
    let mut b_ref = Vec::with_capacity(t);
    for s in 0..t {
        let u_s = reference.u_ref.step(s);
        let gen_dt = model.generator_at(&u_s) * model.dt;
        a_ref.push(gen_dt.clone().exp());
        let mut b = DMatrix::zeros(dim, controls);
        for j in 0..controls {
            let dir = &model.hc[j] * model.dt;
            let dpdu = frechet_exp(&gen_dt, &dir);
            b.set_column(j, &(dpdu * &reference.x_ref[s]));
        }
        b_ref.push(b);
    }
    Ok((a_ref, b_ref))
}

/// Assemble F^ref and G from per-step Jacobians and the observation matrix.
pub fn build_lifted(
    a_ref: &[DMatrix<f64>],
    b_ref: &[DMatrix<f64>],
    c_matrix: &DMatrix<f64>,
) -> Result<LiftedSystem> {
    if a_ref.len() != b_ref.len() || a_ref.is_empty() {
        return Err(LiftError::ShapeMismatch(
            "need matching, non-empty Jacobian sequences".into(),
        ));
    }
    let t = a_ref.len();
    let dim = a_ref[0].nrows();
    let controls = b_ref[0].ncols();
    for (s, (a, b)) in a_ref.iter().zip(b_ref).enumerate() {
        if a.nrows() != dim || a.ncols() != dim || b.nrows() != dim || b.ncols() != controls {
            return Err(LiftError::ShapeMismatch(format!(
                "inconsistent Jacobian shapes at step {s}"
            )));
        }
    }
    if c_matrix.ncols() != dim {
        return Err(LiftError::ShapeMismatch(
            "observation matrix width does not match state dimension".into(),
        ));
    }

    let mut f_ref = DMatrix::zeros((t + 1) * dim, t * controls);
    for (m, bm) in b_ref.iter().enumerate() {
        // Block (m+1, m) = B(m); deeper rows accumulate A products.
        let mut block = bm.clone();
        f_ref
            .view_mut(((m + 1) * dim, m * controls), (dim, controls))
            .copy_from(&block);
        for s in (m + 2)..=t {
            block = &a_ref[s - 1] * block;
            f_ref
                .view_mut((s * dim, m * controls), (dim, controls))
                .copy_from(&block);
        }
    }

    let k = c_matrix.nrows();
    let mut g = DMatrix::zeros((t + 1) * k, (t + 1) * dim);
    for s in 0..=t {
        g.view_mut((s * k, s * dim), (k, dim)).copy_from(c_matrix);
    }

    Ok(LiftedSystem {
        f_ref,
        g,
        a_ref: a_ref.to_vec(),
        b_ref: b_ref.to_vec(),
        state_dim: dim,
        controls,
        steps: t,
    })
}

/// Stack the per-step deviations of a rollout against the reference into
/// lifted vectors (time-major ordering).
pub fn lift_deviation(
    record: &RolloutRecord,
    reference: &ReferenceTriplet,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let t = reference.horizon();
    if record.horizon() != t {
        return Err(LiftError::ShapeMismatch(format!(
            "rollout horizon {} does not match reference horizon {t}",
            record.horizon()
        )));
    }
    let reset = (&record.x[0] - &reference.x_ref[0]).norm();
    if reset > REMAINDER_TOL {
        return Err(LiftError::ResetViolation(reset));
    }

    let dim = record.x[0].len();
    let k = record.y[0].len();
    let controls = record.u.controls();
    let mut dx = DVector::zeros((t + 1) * dim);
    let mut dy = DVector::zeros((t + 1) * k);
    let mut du = DVector::zeros(t * controls);
    for s in 0..=t {
        dx.rows_mut(s * dim, dim)
            .copy_from(&(&record.x[s] - &reference.x_ref[s]));
        dy.rows_mut(s * k, k)
            .copy_from(&(&record.y[s] - &reference.y_ref[s]));
    }
    for s in 0..t {
        for j in 0..controls {
            du[s * controls + j] = record.u.u[(s, j)] - reference.u_ref.u[(s, j)];
        }
    }
    Ok((dx, dy, du))
}
