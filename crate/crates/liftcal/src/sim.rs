//! Discretized bilinear state-space simulator.
//!
//! Integrates the vectorized dynamics ẋ = (𝐇₀ + Σ u_j 𝐇_j)x under a
//! zero-order hold by taking the exact matrix exponential of the
//! skew-symmetric generator on each step. The exponential keeps every step
//! propagator orthogonal, so ‖x‖ is conserved along rollouts.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{LiftError, Result};
use crate::pauli::{vectorize_hamiltonian, BlochState, PauliBasis};

const SKEW_TOL: f64 = 1e-12;

type CMatrix = DMatrix<Complex64>;

/// Drift and control generators in both the complex-Hamiltonian picture and
/// the real vectorized picture, plus the discretization.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    pub basis: Arc<PauliBasis>,
    /// Complex drift Hamiltonian H₀ (2^n × 2^n).
    pub h0_complex: CMatrix,
    /// Complex control Hamiltonians H_j.
    pub hc_complex: Vec<CMatrix>,
    /// Vectorized drift generator 𝐇₀ ((4^n−1)²), skew-symmetric.
    pub h0: DMatrix<f64>,
    /// Vectorized control generators 𝐇_j.
    pub hc: Vec<DMatrix<f64>>,
    /// Step duration (amplitude-normalized units).
    pub dt: f64,
    /// Horizon in steps.
    pub horizon: usize,
    /// Observation matrix C (K × (4^n−1)); identity for complete readout.
    pub c_matrix: DMatrix<f64>,
}

impl HamiltonianModel {
    /// Build from complex Hamiltonians; the vectorized generators are derived.
    pub fn from_hamiltonians(
        basis: Arc<PauliBasis>,
        h0_complex: CMatrix,
        hc_complex: Vec<CMatrix>,
        dt: f64,
        horizon: usize,
    ) -> Result<Self> {
        if dt <= 0.0 {
            return Err(LiftError::Configuration("dt must be positive".into()));
        }
        if horizon == 0 {
            return Err(LiftError::Configuration(
                "horizon must be at least 1".into(),
            ));
        }
        if hc_complex.is_empty() {
            return Err(LiftError::Configuration(
                "at least one control Hamiltonian is required".into(),
            ));
        }
        let h0 = vectorize_hamiltonian(&h0_complex, &basis)?;
        let hc = hc_complex
            .iter()
            .map(|h| vectorize_hamiltonian(h, &basis))
            .collect::<Result<Vec<_>>>()?;
        let dim = basis.dim();
        let model = Self {
            basis,
            h0_complex,
            hc_complex,
            h0,
            hc,
            dt,
            horizon,
            c_matrix: DMatrix::identity(dim, dim),
        };
        model.check_skew()?;
        Ok(model)
    }

    /// Build from vectorized generators; the complex picture is recovered by
    /// least-squares devectorization (used for learned models).
    pub fn from_generators(
        basis: Arc<PauliBasis>,
        h0: DMatrix<f64>,
        hc: Vec<DMatrix<f64>>,
        dt: f64,
        horizon: usize,
    ) -> Result<Self> {
        let h0_complex = crate::pauli::devectorize_generator(&h0, &basis)?;
        let hc_complex = hc
            .iter()
            .map(|g| crate::pauli::devectorize_generator(g, &basis))
            .collect::<Result<Vec<_>>>()?;
        if dt <= 0.0 {
            return Err(LiftError::Configuration("dt must be positive".into()));
        }
        if horizon == 0 {
            return Err(LiftError::Configuration(
                "horizon must be at least 1".into(),
            ));
        }
        let dim = basis.dim();
        let model = Self {
            basis,
            h0_complex,
            hc_complex,
            h0,
            hc,
            dt,
            horizon,
            c_matrix: DMatrix::identity(dim, dim),
        };
        model.check_skew()?;
        Ok(model)
    }

    pub fn with_observation(mut self, c_matrix: DMatrix<f64>) -> Result<Self> {
        if c_matrix.ncols() != self.basis.dim() {
            return Err(LiftError::ShapeMismatch(format!(
                "observation matrix has {} columns, expected {}",
                c_matrix.ncols(),
                self.basis.dim()
            )));
        }
        self.c_matrix = c_matrix;
        Ok(self)
    }

    pub fn controls(&self) -> usize {
        self.hc.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn check_skew(&self) -> Result<()> {
        for (name, g) in
            std::iter::once(("drift", &self.h0)).chain(self.hc.iter().map(|g| ("control", g)))
        {
            let asym = (g + g.transpose()).norm();
            if asym > SKEW_TOL {
                return Err(LiftError::InvalidOperator(format!(
                    "{name} generator violates skew-symmetry by {asym:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// The complex Hamiltonian H(u) = H₀ + Σ u_j H_j.
    pub fn hamiltonian_at(&self, u_s: &[f64]) -> CMatrix {
        let mut h = self.h0_complex.clone();
        for (hj, &uj) in self.hc_complex.iter().zip(u_s) {
            h += hj * Complex64::new(uj, 0.0);
        }
        h
    }

    /// The vectorized generator 𝐇₀ + Σ u_j 𝐇_j.
    pub fn generator_at(&self, u_s: &[f64]) -> DMatrix<f64> {
        let mut g = self.h0.clone();
        for (hj, &uj) in self.hc.iter().zip(u_s) {
            g += hj * uj;
        }
        g
    }
}

/// Piecewise-constant control amplitudes, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    /// T × J amplitudes.
    pub u: DMatrix<f64>,
}

impl ControlSchedule {
    pub fn new(u: DMatrix<f64>) -> Self {
        Self { u }
    }

    pub fn zeros(steps: usize, controls: usize) -> Self {
        Self {
            u: DMatrix::zeros(steps, controls),
        }
    }

    pub fn steps(&self) -> usize {
        self.u.nrows()
    }

    pub fn controls(&self) -> usize {
        self.u.ncols()
    }

    pub fn step(&self, s: usize) -> Vec<f64> {
        self.u.row(s).iter().copied().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Coherent model discrepancies for the single-qubit experiment:
/// H(u; ε) = ε_z Z + u_x(1+ε_x)X + u_y(1+ε_y)Y.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    /// Additive drift coefficient on Z.
    pub eps_z: f64,
    /// Multiplicative error per control channel.
    pub eps_controls: Vec<f64>,
}

impl ErrorModel {
    pub fn zero(controls: usize) -> Self {
        Self {
            eps_z: 0.0,
            eps_controls: vec![0.0; controls],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eps_z == 0.0 && self.eps_controls.iter().all(|e| *e == 0.0)
    }
}

/// Sign convention for the ±ε mean of sampled error components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPolicy {
    /// Each component's sign drawn uniformly at random.
    Random,
    /// All components positive (debugging aid).
    Positive,
}

/// Draw each error component from N(±mean_eps, mean_eps²/100). Reproducible
/// under a fixed seed; mean_eps = 0 yields the exact zero model.
pub fn sample_error_model(
    mean_eps: f64,
    controls: usize,
    seed: u64,
    policy: SignPolicy,
) -> ErrorModel {
    if mean_eps == 0.0 {
        return ErrorModel::zero(controls);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = mean_eps.abs() / 10.0;
    let draw = |rng: &mut ChaCha8Rng| {
        let sign = match policy {
            SignPolicy::Positive => 1.0,
            SignPolicy::Random => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let normal = Normal::new(sign * mean_eps, sigma).expect("valid normal");
        normal.sample(rng)
    };
    let eps_z = draw(&mut rng);
    let eps_controls = (0..controls).map(|_| draw(&mut rng)).collect();
    ErrorModel {
        eps_z,
        eps_controls,
    }
}

/// Build the perturbed "true" model from a nominal single-qubit model.
pub fn apply_error_model(nominal: &HamiltonianModel, err: &ErrorModel) -> Result<HamiltonianModel> {
    if err.eps_controls.len() != nominal.controls() {
        return Err(LiftError::Configuration(format!(
            "error model has {} control entries, model has {} controls",
            err.eps_controls.len(),
            nominal.controls()
        )));
    }
    if nominal.basis.qubits() != 1 {
        return Err(LiftError::Configuration(
            "the coherent error model is defined for single-qubit models".into(),
        ));
    }
    if err.is_zero() {
        return Ok(nominal.clone());
    }
    let z = nominal.basis.operator(2).clone();
    let h0 = &nominal.h0_complex + z * Complex64::new(err.eps_z, 0.0);
    let hc = nominal
        .hc_complex
        .iter()
        .zip(&err.eps_controls)
        .map(|(h, e)| h * Complex64::new(1.0 + e, 0.0))
        .collect();
    HamiltonianModel::from_hamiltonians(nominal.basis.clone(), h0, hc, nominal.dt, nominal.horizon)
}

/// Which stage of the calibration loop produced a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    InitialQoc,
    DmdRedesign,
    Ilc,
}

impl Phase {
    pub fn tag(&self) -> &'static str {
        match self {
            Phase::InitialQoc => "initial-qoc",
            Phase::DmdRedesign => "dmd-redesign",
            Phase::Ilc => "ilc",
        }
    }
}

/// Time-stamped snapshots from one execution of a control schedule.
#[derive(Debug, Clone)]
pub struct RolloutRecord {
    /// States x(0..=T).
    pub x: Vec<DVector<f64>>,
    /// Observables y(0..=T) = C x.
    pub y: Vec<DVector<f64>>,
    /// The schedule that was applied.
    pub u: ControlSchedule,
    /// Step duration of the producing model.
    pub dt: f64,
    /// Calibration iteration index.
    pub iteration: usize,
    pub phase: Phase,
}

impl RolloutRecord {
    pub fn horizon(&self) -> usize {
        self.u.steps()
    }
}

/// exp(Δt·(𝐇₀ + Σ u_j 𝐇_j)); orthogonal because the generator is skew.
pub fn step_propagator(model: &HamiltonianModel, u_s: &[f64]) -> DMatrix<f64> {
    (model.generator_at(u_s) * model.dt).exp()
}

/// Propagate x0 through the full schedule, recording every snapshot.
pub fn rollout(
    model: &HamiltonianModel,
    u: &ControlSchedule,
    x0: &BlochState,
) -> Result<RolloutRecord> {
    if u.steps() != model.horizon {
        return Err(LiftError::ShapeMismatch(format!(
            "schedule has {} steps, model horizon is {}",
            u.steps(),
            model.horizon
        )));
    }
    if u.controls() != model.controls() {
        return Err(LiftError::ShapeMismatch(format!(
            "schedule has {} controls, model has {}",
            u.controls(),
            model.controls()
        )));
    }
    if x0.dim() != model.dim() {
        return Err(LiftError::ShapeMismatch(format!(
            "initial state has dimension {}, expected {}",
            x0.dim(),
            model.dim()
        )));
    }
    let mut x = Vec::with_capacity(model.horizon + 1);
    let mut y = Vec::with_capacity(model.horizon + 1);
    x.push(x0.coords.clone());
    y.push(&model.c_matrix * &x0.coords);
    let mut state = x0.coords.clone();
    for s in 0..model.horizon {
        let p = step_propagator(model, &u.step(s));
        state = &p * &state;
        x.push(state.clone());
        y.push(&model.c_matrix * &state);
    }
    Ok(RolloutRecord {
        x,
        y,
        u: u.clone(),
        dt: model.dt,
        iteration: 0,
        phase: Phase::InitialQoc,
    })
}
