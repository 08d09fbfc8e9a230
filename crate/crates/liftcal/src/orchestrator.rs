//! The calibration loop: design a reference with optimal control, monitor
//! model feasibility from rollout data, redesign on a learned model when the
//! nominal one is too far off, and track the reference with iterative
//! learning control until the scored infidelity meets the target.
//!
//! Rollouts go through the [`Experiment`] trait so the algorithm never sees
//! the device's internals, only schedules in and measured trajectories out.

use nalgebra::DVector;

use crate::error::{LiftError, Result};
use crate::ilc::{ilc_step, IlcConfig, IlcState};
use crate::lifting::{build_lifted, lift_deviation, linearize, LiftedSystem, ReferenceTriplet};
use crate::pauli::BlochState;
use crate::qoc::{design_reference, gate_fidelity, GateTarget, GuessPolicy, QocConfig};
use crate::sim::{rollout, ControlSchedule, HamiltonianModel, Phase, RolloutRecord};
use crate::sysid::{
    assemble_snapshots, bilinear_dmd, feasible, refine_exponential_fit, LearnedModel, RefineOptions,
};

/// A device the loop can only interact with by running schedules.
pub trait Experiment {
    /// Execute a schedule from the agreed initial state and return the
    /// measured trajectory.
    fn rollout(&self, u: &ControlSchedule, x0: &BlochState) -> Result<RolloutRecord>;

    /// Score the gate infidelity a schedule achieves on the device.
    fn score_infidelity(&self, u: &ControlSchedule) -> f64;
}

/// Simulated device: the true model stays private to honor the information
/// barrier between the algorithm and the plant.
pub struct SimExperiment {
    true_model: HamiltonianModel,
    target: GateTarget,
}

impl SimExperiment {
    pub fn new(true_model: HamiltonianModel, target: GateTarget) -> Self {
        Self { true_model, target }
    }
}

impl Experiment for SimExperiment {
    fn rollout(&self, u: &ControlSchedule, x0: &BlochState) -> Result<RolloutRecord> {
        rollout(&self.true_model, u, x0)
    }

    fn score_infidelity(&self, u: &ControlSchedule) -> f64 {
        1.0 - gate_fidelity(&self.true_model, u, &self.target)
    }
}

#[derive(Debug, Clone)]
pub struct LiftConfig {
    pub target_fidelity: f64,
    /// Hard budget on device executions.
    pub max_rollouts: usize,
    /// Relative generator mismatch above which the nominal model is declared
    /// infeasible.
    pub feasibility_threshold: f64,
    /// Cap on how many of the most recent rollouts feed the identification;
    /// defaults to the full rollout budget (all accumulated data).
    pub dmd_rollout_budget: usize,
    pub max_redesigns: usize,
    pub ilc: IlcConfig,
    pub qoc: QocConfig,
    /// Master seed; folded into the pulse-shaping jitter so distinct trials
    /// explore distinct waveforms.
    pub rng_seed: u64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self {
            target_fidelity: 0.9999,
            max_rollouts: 50,
            feasibility_threshold: 0.05,
            dmd_rollout_budget: 50,
            max_redesigns: 1,
            ilc: IlcConfig::default(),
            qoc: QocConfig {
                initial_guess: GuessPolicy::RandomSeeded {
                    seed: 0,
                    relative_jitter: 0.15,
                },
                ..QocConfig::default()
            },
            rng_seed: 0,
        }
    }
}

/// One rollout's worth of bookkeeping.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub rollout: usize,
    pub phase: Phase,
    pub infidelity: f64,
    pub tracking_rms: f64,
    pub u: ControlSchedule,
    /// Which model generation produced the schedule: 0 for the initial
    /// nominal design, incremented at every redesign.
    pub model_id: usize,
}

/// Full record of a calibration run.
#[derive(Debug, Clone)]
pub struct CalibrationTrace {
    pub entries: Vec<TraceEntry>,
    /// Best schedule found (the last one executed).
    pub u_star: ControlSchedule,
    pub converged: bool,
    pub rollouts_used: usize,
    pub redesigns: usize,
    pub warnings: Vec<String>,
    /// Reference designed on each model generation; entry `model_id`
    /// indexes into this.
    pub references: Vec<ReferenceTriplet>,
}

impl CalibrationTrace {
    pub fn terminal_infidelity(&self) -> f64 {
        self.entries
            .last()
            .map(|e| e.infidelity)
            .unwrap_or(f64::INFINITY)
    }

    pub fn best_infidelity(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.infidelity)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Whether the latest scored infidelity meets the fidelity target.
pub fn convergence_check(trace: &CalibrationTrace, cfg: &LiftConfig) -> bool {
    trace.terminal_infidelity() <= 1.0 - cfg.target_fidelity
}

fn lifted_for(reference: &ReferenceTriplet) -> Result<LiftedSystem> {
    let (a, b) = linearize(&reference.model, reference)?;
    build_lifted(&a, &b, &reference.model.c_matrix)
}

fn qoc_with_seed(base: &QocConfig, fold: u64) -> QocConfig {
    let mut cfg = base.clone();
    if let GuessPolicy::RandomSeeded {
        seed,
        relative_jitter,
    } = cfg.initial_guess
    {
        cfg.initial_guess = GuessPolicy::RandomSeeded {
            seed: seed ^ fold,
            relative_jitter,
        };
    }
    cfg
}

fn tracking_rms(record: &RolloutRecord, reference: &ReferenceTriplet) -> Result<f64> {
    let (_, dy, _) = lift_deviation(record, reference)?;
    Ok(dy.norm() / (dy.len() as f64).sqrt())
}

fn identify(
    records: &[RolloutRecord],
    budget: usize,
    nominal: &HamiltonianModel,
) -> Result<LearnedModel> {
    let start = records.len().saturating_sub(budget);
    let snapshots = assemble_snapshots(&records[start..])?;
    let prior = LearnedModel::from_generators(nominal.h0.clone(), nominal.hc.clone());
    let coarse = bilinear_dmd(&snapshots, true, Some(&prior), 0.0)?;
    refine_exponential_fit(&snapshots, &coarse, &RefineOptions::default())
}

/// The full loop: optimal-control design, rollout, data-driven feasibility
/// monitoring with at most `max_redesigns` model redesigns, and learning
/// control on the surviving reference.
pub fn run_lift(
    nominal: &HamiltonianModel,
    experiment: &dyn Experiment,
    target: &GateTarget,
    x0: &BlochState,
    cfg: &LiftConfig,
) -> Result<CalibrationTrace> {
    run_loop(nominal, experiment, target, x0, cfg, true)
}

/// Learning control on the initial reference only; no identification, no
/// redesign. The baseline the full loop is measured against.
pub fn run_ilc_only(
    nominal: &HamiltonianModel,
    experiment: &dyn Experiment,
    target: &GateTarget,
    x0: &BlochState,
    cfg: &LiftConfig,
) -> Result<CalibrationTrace> {
    run_loop(nominal, experiment, target, x0, cfg, false)
}

fn run_loop(
    nominal: &HamiltonianModel,
    experiment: &dyn Experiment,
    target: &GateTarget,
    x0: &BlochState,
    cfg: &LiftConfig,
    with_identification: bool,
) -> Result<CalibrationTrace> {
    if cfg.max_rollouts == 0 {
        return Err(LiftError::Configuration("max_rollouts must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&(1.0 - cfg.target_fidelity)) {
        return Err(LiftError::Configuration(
            "target_fidelity must lie in (0, 1]".into(),
        ));
    }

    let mut nominal = nominal.clone();
    let qoc_cfg = qoc_with_seed(&cfg.qoc, cfg.rng_seed);
    let (mut reference, mut schedule) = design_reference(&nominal, target, x0, &qoc_cfg)?;
    let mut lifted = lifted_for(&reference)?;
    let mut ilc_state = IlcState::initial(&lifted);
    let mut references = vec![reference.clone()];

    let mut records: Vec<RolloutRecord> = Vec::new();
    let mut entries: Vec<TraceEntry> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut phase = Phase::InitialQoc;
    let mut redesigns = 0usize;
    let mut converged = false;
    let mut downgraded = false;

    for iter in 0..cfg.max_rollouts {
        let mut record = experiment.rollout(&schedule, x0)?;
        record.iteration = iter;
        record.phase = phase;
        let infidelity = experiment.score_infidelity(&schedule);
        let rms = tracking_rms(&record, &reference)?;
        entries.push(TraceEntry {
            rollout: iter,
            phase,
            infidelity,
            tracking_rms: rms,
            u: schedule.clone(),
            model_id: redesigns,
        });
        records.push(record.clone());

        if infidelity <= 1.0 - cfg.target_fidelity {
            converged = true;
            break;
        }
        if iter + 1 == cfg.max_rollouts {
            break;
        }

        if with_identification && !downgraded {
            let learned = identify(&records, cfg.dmd_rollout_budget, &nominal)?;
            if !feasible(&nominal, &learned, cfg.feasibility_threshold) {
                if redesigns < cfg.max_redesigns {
                    redesigns += 1;
                    nominal = learned
                        .to_model(nominal.basis.clone(), nominal.dt, nominal.horizon)?
                        .with_observation(nominal.c_matrix.clone())?;
                    let redesign_cfg =
                        qoc_with_seed(&cfg.qoc, cfg.rng_seed.wrapping_add(redesigns as u64));
                    let (r, s) = design_reference(&nominal, target, x0, &redesign_cfg)?;
                    reference = r;
                    references.push(reference.clone());
                    schedule = s;
                    lifted = lifted_for(&reference)?;
                    ilc_state = IlcState::initial(&lifted);
                    phase = Phase::DmdRedesign;
                    continue;
                }
                warnings.push(format!(
                    "model mismatch persists after {redesigns} redesign(s); \
                     continuing with learning control only"
                ));
                downgraded = true;
            }
        }

        let (next_state, next_schedule) =
            ilc_step(&lifted, &reference, &record, &ilc_state, &cfg.ilc)?;
        ilc_state = next_state;
        schedule = next_schedule;
        phase = Phase::Ilc;
    }

    Ok(CalibrationTrace {
        u_star: schedule,
        rollouts_used: entries.len(),
        entries,
        converged,
        redesigns,
        warnings,
        references,
    })
}

/// Convenience: the standard single-qubit calibration problem. Zero nominal
/// drift, X and Y drives, identity observation.
pub fn single_qubit_setup(
    dt: f64,
    horizon: usize,
) -> Result<(HamiltonianModel, GateTarget, BlochState)> {
    use num_complex::Complex64;
    let basis = std::sync::Arc::new(crate::pauli::PauliBasis::build(1)?);
    let zero = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
    let hx = basis.operator(0).clone();
    let hy = basis.operator(1).clone();
    let model =
        HamiltonianModel::from_hamiltonians(basis.clone(), zero, vec![hx, hy], dt, horizon)?;
    let target = GateTarget::new(basis.operator(0).clone())?;
    let x0 = BlochState::new(DVector::from_row_slice(&[0.0, 0.0, 1.0]));
    Ok((model, target, x0))
}
