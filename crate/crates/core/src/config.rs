//! The run configuration: one TOML document holding every knob of a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ident::IdentConfig;
use crate::maneuver::ManeuverKind;
use crate::model::VesselParams;
use crate::net::TrainConfig;
use crate::ode::Solver;
use crate::synth::{derive_seed, standard_plan, DisturbanceSpec, Split, TrialPlan};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutConfig {
    pub solver: Solver,
    /// Largest admissible |u′|, |v′| or |r′| before a rollout is declared
    /// diverged.
    pub velocity_bound: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Euler,
            velocity_bound: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Generator truth, and the known constants (mass, added mass, jet,
    /// scaling) used during identification.
    pub vessel: VesselParams,
    pub disturbance: DisturbanceSpec,
    pub identification: IdentConfig,
    /// `training.seed` is mixed with the global seed, never used alone.
    pub training: TrainConfig,
    pub rollout: RolloutConfig,
    /// Empty means the standard seven-trial plan.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub maneuvers: Vec<TrialPlan>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("out"),
            vessel: VesselParams::default(),
            disturbance: DisturbanceSpec::default(),
            identification: IdentConfig::default(),
            training: TrainConfig::default(),
            rollout: RolloutConfig::default(),
            maneuvers: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.vessel.validate()?;
        self.disturbance.validate()?;
        self.identification.validate()?;
        self.training.validate()?;
        if !(self.rollout.velocity_bound > 0.0) {
            return Err(Error::Config("rollout.velocity_bound must be positive".into()));
        }
        let plans = self.plans();
        let mut names = std::collections::BTreeSet::new();
        for p in &plans {
            if p.name.is_empty() || !p.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!(
                    "maneuver name `{}` must be nonempty and use only [A-Za-z0-9_-]",
                    p.name
                )));
            }
            if !names.insert(p.name.as_str()) {
                return Err(Error::Config(format!("duplicate maneuver name `{}`", p.name)));
            }
            p.maneuver
                .validate(self.vessel.delta_max)
                .map_err(|e| Error::Config(format!("maneuver `{}`: {e}", p.name)))?;
        }
        for split in [Split::Train, Split::Test] {
            if !plans.iter().any(|p| p.split == split) {
                return Err(Error::Config(format!("no {split:?} maneuvers configured").to_lowercase()));
            }
        }
        if !plans
            .iter()
            .any(|p| p.split == Split::Train && matches!(p.maneuver.kind, ManeuverKind::Random { .. }))
        {
            return Err(Error::Config(
                "training needs at least one random-steering maneuver for sway/yaw identification".into(),
            ));
        }
        Ok(())
    }

    pub fn plans(&self) -> Vec<TrialPlan> {
        if self.maneuvers.is_empty() {
            standard_plan(self.seed)
        } else {
            self.maneuvers.clone()
        }
    }

    /// Training configuration with its seed tied to the global one.
    pub fn effective_training(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, &format!("training/{}", self.training.seed)),
            ..self.training
        }
    }

    /// SHA-256 over the canonical JSON form, with `output_dir` left out so
    /// the same experiment written to two places hashes the same.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
        }
        let bytes = serde_json::to_vec(&value).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
