//! Plot-ready trajectory dumps for a single trial: reference vs rollout per
//! calibration stage.

use std::fmt::Write as _;
use std::path::PathBuf;

use liftcal::orchestrator::single_qubit_setup;
use liftcal::{
    apply_error_model, rollout, run_ilc_only, run_lift, sample_error_model, CalibrationTrace,
    HamiltonianModel, Phase, ReferenceTriplet, SimExperiment, TraceEntry,
};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::Result;

/// Stage files written by `dump_tracking`, keyed by stage letter.
#[derive(Debug, Clone)]
pub struct TrackReport {
    pub manifest_path: PathBuf,
    pub written: Vec<(char, PathBuf)>,
    pub omitted: Vec<(char, String)>,
}

fn stage_text(
    true_model: &HamiltonianModel,
    reference: &ReferenceTriplet,
    entry: &TraceEntry,
) -> Result<String> {
    let x0 = liftcal::BlochState::new(reference.x_ref[0].clone());
    let rec = rollout(true_model, &entry.u, &x0)?;
    let t = reference.horizon();
    let dim = reference.x_ref[0].len();
    let controls = entry.u.controls();
    let mut out = String::new();
    out.push_str("# s");
    for i in 0..dim {
        write!(out, " x_ref[{i}]").unwrap();
    }
    for i in 0..dim {
        write!(out, " x[{i}]").unwrap();
    }
    for j in 0..controls {
        write!(out, " u[{j}]").unwrap();
    }
    out.push('\n');
    for s in 0..=t {
        write!(out, "{s}").unwrap();
        for i in 0..dim {
            write!(out, " {}", reference.x_ref[s][i]).unwrap();
        }
        for i in 0..dim {
            write!(out, " {}", rec.x[s][i]).unwrap();
        }
        for j in 0..controls {
            // Controls are zero-order-hold; the terminal snapshot has none.
            let v = if s < t { entry.u.u[(s, j)] } else { 0.0 };
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

fn stage_entry(
    trace: &CalibrationTrace,
    pick: impl Fn(&TraceEntry) -> bool,
    last: bool,
) -> Option<&TraceEntry> {
    if last {
        trace.entries.iter().rev().find(|e| pick(e))
    } else {
        trace.entries.iter().find(|e| pick(e))
    }
}

/// Write per-stage trajectory files for one seeded trial:
/// (a) rollout of the nominal-model design, (b) first rollout after the
/// data-driven redesign, (c) final polished rollout, (d) final rollout of
/// the no-redesign baseline. Stages that never occur are noted in the
/// manifest instead of written.
pub fn dump_tracking(cfg: &ExperimentConfig, eps: f64, trial_seed: u64) -> Result<TrackReport> {
    cfg.check()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let (nominal, target, x0) = single_qubit_setup(cfg.dt, cfg.horizon)?;
    let error = sample_error_model(eps, nominal.controls(), trial_seed, cfg.sign_policy.into());
    let true_model = apply_error_model(&nominal, &error)?;
    let experiment = SimExperiment::new(true_model.clone(), target.clone());
    let lift_cfg = cfg.lift.to_lift_config(trial_seed);

    let lift = run_lift(&nominal, &experiment, &target, &x0, &lift_cfg)?;
    let ilc = run_ilc_only(&nominal, &experiment, &target, &x0, &lift_cfg)?;

    type Picked<'t> = Option<(&'t CalibrationTrace, &'t TraceEntry)>;
    let stages: Vec<(char, &str, Picked)> = vec![
        (
            'a',
            "nominal-model design rollout",
            stage_entry(&lift, |e| e.phase == Phase::InitialQoc, false).map(|e| (&lift, e)),
        ),
        (
            'b',
            "first rollout after redesign",
            stage_entry(&lift, |e| e.phase == Phase::DmdRedesign, false).map(|e| (&lift, e)),
        ),
        (
            'c',
            "final polished rollout",
            stage_entry(&lift, |_| true, true).map(|e| (&lift, e)),
        ),
        (
            'd',
            "final rollout without redesign",
            stage_entry(&ilc, |_| true, true).map(|e| (&ilc, e)),
        ),
    ];

    let mut written = Vec::new();
    let mut omitted = Vec::new();
    let mut manifest_stages = serde_json::Map::new();
    for (letter, description, found) in stages {
        match found {
            Some((trace, entry)) => {
                let reference = &trace.references[entry.model_id];
                let path = cfg.output_dir.join(format!("tracking-stage-{letter}.dat"));
                std::fs::write(&path, stage_text(&true_model, reference, entry)?)?;
                manifest_stages.insert(
                    letter.to_string(),
                    json!({
                        "description": description,
                        "file": path.file_name().unwrap().to_string_lossy(),
                        "rollout": entry.rollout,
                        "phase": entry.phase.tag(),
                        "infidelity": entry.infidelity,
                        "tracking_rms": entry.tracking_rms,
                    }),
                );
                written.push((letter, path));
            }
            None => {
                let note = format!("stage omitted: {description} did not occur in this trial");
                manifest_stages.insert(
                    letter.to_string(),
                    json!({ "description": description, "omitted": note }),
                );
                omitted.push((letter, note));
            }
        }
    }

    let manifest = json!({
        "eps": eps,
        "trial_seed": trial_seed,
        "lift": {
            "converged": lift.converged,
            "rollouts_used": lift.rollouts_used,
            "redesigns": lift.redesigns,
            "terminal_infidelity": lift.terminal_infidelity(),
            "warnings": lift.warnings,
        },
        "ilc_only": {
            "converged": ilc.converged,
            "rollouts_used": ilc.rollouts_used,
            "terminal_infidelity": ilc.terminal_infidelity(),
        },
        "stages": manifest_stages,
    });
    let manifest_path = cfg.output_dir.join("tracking-manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&manifest_path, text)?;

    Ok(TrackReport {
        manifest_path,
        written,
        omitted,
    })
}
