//! Identification, training and evaluation glued together over whole
//! datasets. The CLI and the acceptance suite both go through here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ident::{identify_surge, identify_sway_yaw, IdentConfig};
use crate::log::TrialLog;
use crate::maneuver::Replay;
use crate::model::VesselParams;
use crate::net::{
    datadriven_samples, hybrid_samples, train, DataDrivenModel, HybridModel, OutputMode, TrainConfig,
    TrainOutcome,
};
use crate::ode::Solver;
use crate::rollout::{rmse, rollout, turning_diameter, PhysicalModel, RolloutOptions, Trajectory, VelocityModel};
use crate::synth::derive_seed;

/// Surge from every log in `surge_logs`, sway/yaw from `swayyaw_logs`.
/// Everything in `base` other than the identified coefficients is kept.
pub fn identify_vessel(
    surge_logs: &[&TrialLog],
    swayyaw_logs: &[&TrialLog],
    base: &VesselParams,
    cfg: &IdentConfig,
) -> Result<VesselParams> {
    cfg.validate()?;
    let mut params = *base;
    params.surge = identify_surge(surge_logs, base, cfg)?;
    params.swayyaw = identify_sway_yaw(swayyaw_logs, &base.nondim, cfg)?;
    params.validate()?;
    Ok(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNets {
    pub hybrid: TrainOutcome,
    pub datadriven: TrainOutcome,
}

/// Trains the residual network and the data-driven baseline with the same
/// recipe. The baseline's seed is derived from the hybrid's.
pub fn train_networks(logs: &[&TrialLog], physics: &PhysicalModel, cfg: &TrainConfig) -> Result<TrainedNets> {
    let mut hybrid_set = Vec::new();
    let mut dd_set = Vec::new();
    for log in logs {
        hybrid_set.extend(hybrid_samples(log, physics));
        dd_set.extend(datadriven_samples(log, &physics.params.nondim));
    }
    let hybrid = train(&hybrid_set, cfg, OutputMode::Residual)?;
    let dd_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, "datadriven"),
        ..*cfg
    };
    let datadriven = train(&dd_set, &dd_cfg, OutputMode::Direct)?;
    Ok(TrainedNets { hybrid, datadriven })
}

/// The three models under comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub physical: PhysicalModel,
    pub hybrid: HybridModel,
    pub datadriven: DataDrivenModel,
}

impl ModelSet {
    pub fn new(params: VesselParams, solver: Solver, nets: &TrainedNets) -> Self {
        let physical = PhysicalModel::new(params, solver);
        Self {
            hybrid: HybridModel {
                physics: physical.clone(),
                net: nets.hybrid.net.clone(),
            },
            datadriven: DataDrivenModel {
                net: nets.datadriven.net.clone(),
                scheme: params.nondim,
                solver,
            },
            physical,
        }
    }
}

pub const MODEL_NAMES: [&str; 3] = ["physical", "hybrid", "datadriven"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    /// RMSE of (u, v, r) over the samples the rollout completed.
    pub rmse: [f64; 3],
    pub diverged: bool,
    pub samples: usize,
    pub diameter: Option<f64>,
    pub diameter_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverScore {
    pub name: String,
    pub samples: usize,
    pub truth_diameter: Option<f64>,
    pub physical: ModelScore,
    pub hybrid: ModelScore,
    pub datadriven: ModelScore,
}

impl ManeuverScore {
    pub fn models(&self) -> [(&'static str, &ModelScore); 3] {
        [
            (MODEL_NAMES[0], &self.physical),
            (MODEL_NAMES[1], &self.hybrid),
            (MODEL_NAMES[2], &self.datadriven),
        ]
    }
}

/// Replays the log's controls through `model` from the log's first sample.
pub fn rollout_log(model: &dyn VelocityModel, params: &VesselParams, log: &TrialLog, velocity_bound: f64) -> Trajectory {
    let controls = log.controls();
    let first = &log.rows[0];
    let opts = RolloutOptions {
        dt: log.dt,
        steps: log.len() - 1,
        velocity_bound,
    };
    rollout(
        model,
        &params.nondim,
        first.state(),
        first.pose(),
        &mut Replay(&controls),
        &opts,
    )
}

fn score(traj: &Trajectory, truth: &Trajectory, truth_diameter: Option<f64>) -> Result<ModelScore> {
    let n = traj.len();
    let rmse = rmse(&traj.states, &truth.states[..n])?;
    let diameter = match truth_diameter {
        Some(_) if !traj.diverged => turning_diameter(&traj.poses).ok(),
        _ => None,
    };
    Ok(ModelScore {
        rmse,
        diverged: traj.diverged,
        samples: n,
        diameter,
        diameter_rel_err: diameter.zip(truth_diameter).map(|(d, t)| (d - t).abs() / t),
    })
}

/// Rolls all three models through one test log, concurrently, and scores
/// them against it. With `turning` set, diameters are fitted for the truth
/// and for every rollout that stayed bounded.
pub fn evaluate_log(
    name: &str,
    log: &TrialLog,
    models: &ModelSet,
    velocity_bound: f64,
    turning: bool,
) -> Result<(ManeuverScore, [Trajectory; 3])> {
    let params = &models.physical.params;
    let [phy, hyb, dd] = std::thread::scope(|scope| {
        let a = scope.spawn(|| rollout_log(&models.physical, params, log, velocity_bound));
        let b = scope.spawn(|| rollout_log(&models.hybrid, params, log, velocity_bound));
        let c = scope.spawn(|| rollout_log(&models.datadriven, params, log, velocity_bound));
        [a, b, c].map(|h| h.join().expect("rollout panicked"))
    });
    let truth = Trajectory::from_log(log);
    // a turning log too short to settle simply has no diameter
    let truth_diameter = if turning {
        turning_diameter(&truth.poses).ok()
    } else {
        None
    };
    if phy.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let report = ManeuverScore {
        name: name.to_string(),
        samples: log.len(),
        truth_diameter,
        physical: score(&phy, &truth, truth_diameter)?,
        hybrid: score(&hyb, &truth, truth_diameter)?,
        datadriven: score(&dd, &truth, truth_diameter)?,
    };
    Ok((report, [phy, hyb, dd]))
}
