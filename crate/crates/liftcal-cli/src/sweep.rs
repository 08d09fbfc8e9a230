//! Seeded Monte Carlo sweep over error magnitudes, CSV/JSON persistence.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use liftcal::orchestrator::single_qubit_setup;
use liftcal::{
    apply_error_model, run_ilc_only, run_lift, sample_error_model, CalibrationTrace, ErrorModel,
    SimExperiment,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{trial_seed, ExperimentConfig};
use crate::{HarnessError, Result};

pub const CSV_HEADER: &str =
    "trial_id,eps_mean,eps_z,eps_x,eps_y,rollout,phase,infidelity,tracking_rms,converged";

#[derive(Debug, Clone)]
pub struct TrialRun {
    pub mode_tag: &'static str,
    pub trace: CalibrationTrace,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub eps_index: usize,
    pub trial_index: usize,
    pub eps_mean: f64,
    pub error: ErrorModel,
    pub runs: Vec<TrialRun>,
}

/// Run one seeded trial: sample the coherent error, build the true system,
/// and calibrate in the configured mode(s).
pub fn run_trial(
    cfg: &ExperimentConfig,
    eps_index: usize,
    trial_index: usize,
) -> liftcal::Result<TrialOutcome> {
    let seed = trial_seed(cfg.master_seed, eps_index, trial_index);
    let eps_mean = cfg.eps_levels[eps_index];
    let (nominal, target, x0) = single_qubit_setup(cfg.dt, cfg.horizon)?;
    let error = sample_error_model(eps_mean, nominal.controls(), seed, cfg.sign_policy.into());
    let true_model = apply_error_model(&nominal, &error)?;
    let experiment = SimExperiment::new(true_model, target.clone());
    let lift_cfg = cfg.lift.to_lift_config(seed);

    let mut runs = Vec::new();
    if cfg.mode.runs_lift() {
        runs.push(TrialRun {
            mode_tag: "lift",
            trace: run_lift(&nominal, &experiment, &target, &x0, &lift_cfg)?,
        });
    }
    if cfg.mode.runs_ilc_only() {
        runs.push(TrialRun {
            mode_tag: "ilc-only",
            trace: run_ilc_only(&nominal, &experiment, &target, &x0, &lift_cfg)?,
        });
    }
    Ok(TrialOutcome {
        eps_index,
        trial_index,
        eps_mean,
        error,
        runs,
    })
}

/// Execute all trials in a worker pool; results come back in deterministic
/// (eps_index, trial_index) order regardless of completion order.
pub fn run_trials(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<TrialOutcome>> {
    cfg.check()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.eps_levels.len())
        .flat_map(|ei| (0..cfg.trials_per_level).map(move |ti| (ei, ti)))
        .collect();
    let work = || -> liftcal::Result<Vec<TrialOutcome>> {
        tasks
            .par_iter()
            .map(|&(ei, ti)| run_trial(cfg, ei, ti))
            .collect()
    };
    let outcomes = if jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(work)
    } else {
        work()
    }?;
    Ok(outcomes)
}

/// Per-rollout rows for every trial and mode, fixed header, stable order.
pub fn render_csv(outcomes: &[TrialOutcome]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for o in outcomes {
        for run in &o.runs {
            let trial_id = format!("e{}t{}-{}", o.eps_index, o.trial_index, run.mode_tag);
            for entry in &run.trace.entries {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    trial_id,
                    o.eps_mean,
                    o.error.eps_z,
                    o.error.eps_controls[0],
                    o.error.eps_controls[1],
                    entry.rollout,
                    entry.phase.tag(),
                    entry.infidelity,
                    entry.tracking_rms,
                    run.trace.converged,
                )
                .expect("writing to a String cannot fail");
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeStats {
    pub trials: usize,
    pub convergence_rate: f64,
    pub median_terminal_infidelity: f64,
    pub median_rollouts_used: f64,
    pub redesign_counts: BTreeMap<usize, usize>,
    /// Median scored infidelity at each rollout index, across the trials
    /// still running at that index.
    pub median_infidelity_by_rollout: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsSummary {
    pub eps_mean: f64,
    pub modes: BTreeMap<String, ModeStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub per_eps: Vec<EpsSummary>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN medians"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn summarize(cfg: &ExperimentConfig, outcomes: &[TrialOutcome]) -> SweepSummary {
    let mut per_eps = Vec::new();
    for (ei, &eps_mean) in cfg.eps_levels.iter().enumerate() {
        let mut modes: BTreeMap<String, ModeStats> = BTreeMap::new();
        let tags: Vec<&'static str> = outcomes
            .iter()
            .filter(|o| o.eps_index == ei)
            .flat_map(|o| o.runs.iter().map(|r| r.mode_tag))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        for tag in tags {
            let traces: Vec<&CalibrationTrace> = outcomes
                .iter()
                .filter(|o| o.eps_index == ei)
                .flat_map(|o| o.runs.iter())
                .filter(|r| r.mode_tag == tag)
                .map(|r| &r.trace)
                .collect();
            let trials = traces.len();
            let converged = traces.iter().filter(|t| t.converged).count();
            let mut terminal: Vec<f64> = traces.iter().map(|t| t.terminal_infidelity()).collect();
            let mut rollouts: Vec<f64> = traces.iter().map(|t| t.rollouts_used as f64).collect();
            let mut redesign_counts = BTreeMap::new();
            for t in &traces {
                *redesign_counts.entry(t.redesigns).or_insert(0usize) += 1;
            }
            let max_len = traces.iter().map(|t| t.entries.len()).max().unwrap_or(0);
            let mut by_rollout = Vec::with_capacity(max_len);
            for r in 0..max_len {
                let mut vals: Vec<f64> = traces
                    .iter()
                    .filter_map(|t| t.entries.get(r).map(|e| e.infidelity))
                    .collect();
                by_rollout.push(median(&mut vals));
            }
            modes.insert(
                tag.to_string(),
                ModeStats {
                    trials,
                    convergence_rate: if trials > 0 {
                        converged as f64 / trials as f64
                    } else {
                        f64::NAN
                    },
                    median_terminal_infidelity: median(&mut terminal),
                    median_rollouts_used: median(&mut rollouts),
                    redesign_counts,
                    median_infidelity_by_rollout: by_rollout,
                },
            );
        }
        per_eps.push(EpsSummary { eps_mean, modes });
    }
    SweepSummary {
        config: cfg.clone(),
        per_eps,
    }
}

/// Run the sweep and write `trials.csv` and `summary.json` to the output
/// directory.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<SweepSummary> {
    cfg.check()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let outcomes = run_trials(cfg, jobs)?;
    let csv = render_csv(&outcomes);
    std::fs::write(cfg.output_dir.join("trials.csv"), csv)?;
    let summary = summarize(cfg, &outcomes);
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(cfg.output_dir.join("summary.json"), text)?;
    Ok(summary)
}
