//! Sweep configuration: JSON file mirroring these field names, with CLI
//! flags layered on top.

use std::path::{Path, PathBuf};

use liftcal::{GuessPolicy, IlcConfig, LiftConfig, QocConfig, SignPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Lift,
    IlcOnly,
    Both,
}

impl Mode {
    pub fn runs_lift(&self) -> bool {
        matches!(self, Mode::Lift | Mode::Both)
    }

    pub fn runs_ilc_only(&self) -> bool {
        matches!(self, Mode::IlcOnly | Mode::Both)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lift" => Ok(Mode::Lift),
            "ilc-only" => Ok(Mode::IlcOnly),
            "both" => Ok(Mode::Both),
            other => Err(HarnessError::Config(format!(
                "unknown mode '{other}' (expected lift, ilc-only, or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignPolicyTag {
    Random,
    Positive,
}

impl From<SignPolicyTag> for SignPolicy {
    fn from(tag: SignPolicyTag) -> Self {
        match tag {
            SignPolicyTag::Random => SignPolicy::Random,
            SignPolicyTag::Positive => SignPolicy::Positive,
        }
    }
}

/// Serializable subset of the loop configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftSettings {
    pub target_fidelity: f64,
    pub max_rollouts: usize,
    pub feasibility_threshold: f64,
    pub max_redesigns: usize,
    pub lambda: f64,
    pub u_sat: f64,
    pub du_sat: f64,
}

impl Default for LiftSettings {
    fn default() -> Self {
        Self {
            target_fidelity: 0.9999,
            max_rollouts: 50,
            feasibility_threshold: 0.05,
            max_redesigns: 1,
            lambda: 1e-3,
            u_sat: 2.0,
            du_sat: 0.05,
        }
    }
}

impl LiftSettings {
    pub fn to_lift_config(&self, rng_seed: u64) -> LiftConfig {
        LiftConfig {
            target_fidelity: self.target_fidelity,
            max_rollouts: self.max_rollouts,
            feasibility_threshold: self.feasibility_threshold,
            dmd_rollout_budget: self.max_rollouts,
            max_redesigns: self.max_redesigns,
            ilc: IlcConfig {
                lambda: self.lambda,
                u_sat: self.u_sat,
                du_sat: self.du_sat,
                ..IlcConfig::default()
            },
            qoc: QocConfig {
                u_sat: self.u_sat,
                initial_guess: GuessPolicy::RandomSeeded {
                    seed: 0,
                    relative_jitter: 0.15,
                },
                ..QocConfig::default()
            },
            rng_seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub eps_levels: Vec<f64>,
    pub trials_per_level: usize,
    pub sign_policy: SignPolicyTag,
    pub lift: LiftSettings,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub mode: Mode,
    /// Pulse segment duration of the single-qubit experiment.
    pub dt: f64,
    /// Number of pulse segments.
    pub horizon: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eps_levels: vec![0.01, 0.05, 0.1, 0.2, 0.3],
            trials_per_level: 30,
            sign_policy: SignPolicyTag::Random,
            lift: LiftSettings::default(),
            output_dir: PathBuf::from("liftcal-out"),
            master_seed: 0,
            mode: Mode::Both,
            // Total pulse time 1.5 with saturation 2: short enough that
            // uncorrectable drift exposure stays small, long enough that a
            // pi rotation is reachable when a channel is scaled down 30%.
            dt: 0.15,
            horizon: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&raw)
            .map_err(|e| HarnessError::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.eps_levels.is_empty() {
            return Err(HarnessError::Config("eps_levels must be non-empty".into()));
        }
        if self.trials_per_level == 0 {
            return Err(HarnessError::Config("trials_per_level must be >= 1".into()));
        }
        if self.dt <= 0.0 || self.horizon == 0 {
            return Err(HarnessError::Config(
                "dt must be > 0 and horizon >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&(1.0 - self.lift.target_fidelity)) {
            return Err(HarnessError::Config(
                "target_fidelity must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Per-trial RNG stream: hash(master_seed, eps_index, trial_index), so
/// trials are independent of execution order and worker count.
pub fn trial_seed(master_seed: u64, eps_index: usize, trial_index: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((eps_index as u64).to_le_bytes());
    hasher.update((trial_index as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
