//! The commands behind the `hybrid-maneuver` binary and the files they
//! exchange through the output directory:
//!
//! ```text
//! <out>/manifest.json         gen
//! <out>/logs/<name>.csv       gen
//! <out>/coefficients.json     identify
//! <out>/bundle.json           identify, then train
//! <out>/loss_trace.csv        train
//! <out>/rollouts/<name>.csv   rollout, evaluate
//! <out>/report.json           evaluate
//! ```
//!
//! Every JSON artifact carries the hash of the configuration that produced
//! it; later stages refuse a mismatch unless forced.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{read_json, read_log_csv, write_json, write_log_csv, write_loss_trace, write_trajectories_csv};
use crate::log::TrialLog;
use crate::maneuver::{ManeuverKind, ManeuverSpec};
use crate::model::{SurgeCoeffs, SwayYawCoeffs, VesselParams};
use crate::net::{ResidualNet, TrainOutcome};
use crate::ode::Solver;
use crate::pipeline::{evaluate_log, identify_vessel, rollout_log, train_networks, ManeuverScore, ModelSet, TrainedNets};
use crate::rollout::{PhysicalModel, Trajectory};
use crate::synth::{generate_dataset, DisturbanceSpec, Split, LOG_DT};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const DISTURBANCE_NOTE: &str = "drift is modeled as a steady earth-frame current of magnitude \
current_speed; wave forcing adds a separate sinusoidal acceleration and is not part of the drift speed";

/// Where each artifact lives under an output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn log(&self, name: &str) -> PathBuf {
        self.root.join("logs").join(format!("{name}.csv"))
    }

    pub fn coefficients(&self) -> PathBuf {
        self.root.join("coefficients.json")
    }

    pub fn bundle(&self) -> PathBuf {
        self.root.join("bundle.json")
    }

    pub fn loss_trace(&self) -> PathBuf {
        self.root.join("loss_trace.csv")
    }

    pub fn rollout(&self, name: &str) -> PathBuf {
        self.root.join("rollouts").join(format!("{name}.csv"))
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }
}

fn check_hash(found: &str, config: &str, force: bool) -> Result<()> {
    if force || found == config {
        Ok(())
    } else {
        Err(Error::HashMismatch {
            bundle: found.to_string(),
            config: config.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub split: Split,
    /// Relative to the manifest's directory.
    pub file: PathBuf,
    pub noise_seed: u64,
    pub samples: usize,
    pub maneuver: ManeuverSpec,
}

impl ManifestEntry {
    pub fn is_turning(&self) -> bool {
        matches!(self.maneuver.kind, ManeuverKind::Turning { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub dt: f64,
    pub disturbance: DisturbanceSpec,
    pub disturbance_note: String,
    pub trials: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.trials.iter().filter(move |t| t.split == split)
    }
}

fn load_manifest(layout: &Layout, cfg_hash: &str, force: bool) -> Result<Manifest> {
    let path = layout.manifest();
    if !path.exists() {
        return Err(Error::MissingArtifact(format!("{} (run `gen` first)", path.display())));
    }
    let m: Manifest = read_json(&path)?;
    check_hash(&m.config_hash, cfg_hash, force)?;
    Ok(m)
}

fn load_logs<'a>(layout: &Layout, entries: impl Iterator<Item = &'a ManifestEntry>) -> Result<Vec<(ManifestEntry, TrialLog)>> {
    entries
        .map(|e| Ok((e.clone(), read_log_csv(&layout.root.join(&e.file))?)))
        .collect()
}

/// Generates the configured trials into `<out>/logs` and writes the
/// manifest.
pub fn cmd_gen(cfg: &RunConfig, layout: &Layout) -> Result<Manifest> {
    let trials = generate_dataset(&cfg.plans(), &cfg.vessel, &cfg.disturbance, cfg.seed)?;
    let mut entries = Vec::with_capacity(trials.len());
    for t in &trials {
        let path = layout.log(&t.plan.name);
        write_log_csv(&path, &t.log)?;
        entries.push(ManifestEntry {
            name: t.plan.name.clone(),
            split: t.plan.split,
            file: path.strip_prefix(&layout.root).unwrap_or(&path).to_path_buf(),
            noise_seed: t.seed,
            samples: t.log.len(),
            maneuver: t.plan.maneuver,
        });
    }
    let manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        dt: LOG_DT,
        disturbance: cfg.disturbance,
        disturbance_note: DISTURBANCE_NOTE.to_string(),
        trials: entries,
    };
    write_json(&layout.manifest(), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRow {
    pub name: String,
    pub identified: f64,
    /// Generator-truth value from the configuration.
    pub reference: f64,
    /// Absent when the reference is zero.
    pub rel_err: Option<f64>,
}

impl CoefficientRow {
    fn new(name: &str, identified: f64, reference: f64) -> Self {
        Self {
            name: name.to_string(),
            identified,
            reference,
            rel_err: (reference != 0.0).then(|| (identified - reference).abs() / reference.abs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientReport {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub method: String,
    pub lambda: f64,
    /// Supplied, not identified.
    pub x_udot: f64,
    pub surge_logs: Vec<String>,
    pub swayyaw_logs: Vec<String>,
    /// Surge resistance slots followed by the sway and yaw slots.
    pub coefficients: Vec<CoefficientRow>,
}

impl CoefficientReport {
    fn new(cfg: &RunConfig, identified: &VesselParams, surge_logs: Vec<String>, swayyaw_logs: Vec<String>) -> Self {
        let truth = &cfg.vessel;
        let mut coefficients: Vec<_> = SurgeCoeffs::TERMS
            .iter()
            .zip(identified.surge.identified())
            .zip(truth.surge.identified())
            .map(|((n, a), b)| CoefficientRow::new(n, a, b))
            .collect();
        coefficients.extend(
            identified
                .swayyaw
                .labeled()
                .into_iter()
                .zip(truth.swayyaw.labeled())
                .map(|((n, a), (_, b))| CoefficientRow::new(n, a, b)),
        );
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            method: "ridge".to_string(),
            lambda: cfg.identification.ridge.lambda,
            x_udot: identified.surge.x_udot,
            surge_logs,
            swayyaw_logs,
            coefficients,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub lambda: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub seed: u64,
    pub hybrid_initial_loss: f64,
    pub hybrid_final_loss: f64,
    pub datadriven_initial_loss: f64,
    pub datadriven_final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub ident_method: String,
    pub ident_lambda: f64,
    pub solver: Solver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingMeta>,
}

/// Identified coefficients, and after `train` the two networks with their
/// scaling statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    pub meta: BundleMeta,
    pub surge: SurgeCoeffs,
    pub swayyaw: SwayYawCoeffs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hybrid: Option<ResidualNet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datadriven: Option<ResidualNet>,
}

impl ModelBundle {
    pub fn validate(&self) -> Result<()> {
        let present = [
            self.hybrid.is_some(),
            self.datadriven.is_some(),
            self.meta.training.is_some(),
        ];
        if present.iter().any(|&p| p != present[0]) {
            return Err(Error::InvalidParams(
                "bundle must carry both networks and their training metadata, or none of them".into(),
            ));
        }
        for net in self.hybrid.iter().chain(&self.datadriven) {
            net.validate()?;
        }
        if !(self.surge.identified().iter().all(|c| c.is_finite()) && self.swayyaw.is_finite()) {
            return Err(Error::NonFinite("bundle coefficients"));
        }
        Ok(())
    }

    pub fn params(&self, cfg: &RunConfig) -> VesselParams {
        VesselParams {
            surge: self.surge,
            swayyaw: self.swayyaw,
            ..cfg.vessel
        }
    }

    pub fn model_set(&self, cfg: &RunConfig) -> Result<ModelSet> {
        match (&self.hybrid, &self.datadriven, &self.meta.training) {
            (Some(h), Some(d), Some(t)) => {
                let outcome = |net: &ResidualNet, initial_loss, final_loss| TrainOutcome {
                    net: net.clone(),
                    loss_trace: Vec::new(),
                    initial_loss,
                    final_loss,
                };
                let nets = TrainedNets {
                    hybrid: outcome(h, t.hybrid_initial_loss, t.hybrid_final_loss),
                    datadriven: outcome(d, t.datadriven_initial_loss, t.datadriven_final_loss),
                };
                Ok(ModelSet::new(self.params(cfg), self.meta.solver, &nets))
            }
            _ => Err(Error::MissingArtifact("bundle has no trained networks (run `train` first)".into())),
        }
    }
}

fn load_bundle(layout: &Layout, cfg_hash: &str, force: bool) -> Result<ModelBundle> {
    let path = layout.bundle();
    if !path.exists() {
        return Err(Error::MissingArtifact(format!("{} (run `identify` first)", path.display())));
    }
    let bundle: ModelBundle = read_json(&path)?;
    bundle.validate()?;
    check_hash(&bundle.meta.config_hash, cfg_hash, force)?;
    Ok(bundle)
}

/// Identifies the physical model from the manifest's training logs: surge
/// from all of them, sway and yaw from the random-steering ones.
pub fn cmd_identify(cfg: &RunConfig, layout: &Layout, force: bool) -> Result<(ModelBundle, CoefficientReport)> {
    let hash = cfg.hash();
    let manifest = load_manifest(layout, &hash, force)?;
    let train = load_logs(layout, manifest.split(Split::Train))?;
    let surge: Vec<_> = train.iter().map(|(_, l)| l).collect();
    let random: Vec<_> = train
        .iter()
        .filter(|(e, _)| matches!(e.maneuver.kind, ManeuverKind::Random { .. }))
        .collect();
    if random.is_empty() {
        return Err(Error::MissingArtifact("no random-steering training log in manifest".into()));
    }
    let swayyaw: Vec<_> = random.iter().map(|(_, l)| l).collect();
    let params = identify_vessel(&surge, &swayyaw, &cfg.vessel, &cfg.identification)?;

    let report = CoefficientReport::new(
        cfg,
        &params,
        train.iter().map(|(e, _)| e.name.clone()).collect(),
        random.iter().map(|(e, _)| e.name.clone()).collect(),
    );
    let bundle = ModelBundle {
        meta: BundleMeta {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: hash,
            seed: cfg.seed,
            ident_method: "ridge".to_string(),
            ident_lambda: cfg.identification.ridge.lambda,
            solver: cfg.rollout.solver,
            training: None,
        },
        surge: params.surge,
        swayyaw: params.swayyaw,
        hybrid: None,
        datadriven: None,
    };
    write_json(&layout.coefficients(), &report)?;
    write_json(&layout.bundle(), &bundle)?;
    Ok((bundle, report))
}

/// Trains both networks on the training logs against the identified
/// physical model, and adds them to the bundle.
pub fn cmd_train(cfg: &RunConfig, layout: &Layout, force: bool) -> Result<(ModelBundle, TrainedNets)> {
    let hash = cfg.hash();
    let manifest = load_manifest(layout, &hash, force)?;
    let mut bundle = load_bundle(layout, &hash, force)?;
    let train = load_logs(layout, manifest.split(Split::Train))?;
    let logs: Vec<_> = train.iter().map(|(_, l)| l).collect();
    let physics = PhysicalModel::new(bundle.params(cfg), cfg.rollout.solver);
    let tcfg = cfg.effective_training();
    let nets = train_networks(&logs, &physics, &tcfg)?;

    bundle.meta.config_hash = hash;
    bundle.meta.solver = cfg.rollout.solver;
    bundle.meta.training = Some(TrainingMeta {
        lambda: tcfg.lambda,
        learning_rate: tcfg.learning_rate,
        iterations: tcfg.iterations,
        batch_size: tcfg.batch_size,
        hidden: tcfg.hidden,
        seed: tcfg.seed,
        hybrid_initial_loss: nets.hybrid.initial_loss,
        hybrid_final_loss: nets.hybrid.final_loss,
        datadriven_initial_loss: nets.datadriven.initial_loss,
        datadriven_final_loss: nets.datadriven.final_loss,
    });
    bundle.hybrid = Some(nets.hybrid.net.clone());
    bundle.datadriven = Some(nets.datadriven.net.clone());
    bundle.validate()?;
    write_json(&layout.bundle(), &bundle)?;
    write_loss_trace(
        &layout.loss_trace(),
        &[
            ("hybrid", &nets.hybrid.loss_trace),
            ("datadriven", &nets.datadriven.loss_trace),
        ],
    )?;
    Ok((bundle, nets))
}

/// Replays one log through all three models and writes the aligned
/// per-step CSV. Divergence truncates a model's columns, nothing more.
pub fn rollout_to_csv(path: &Path, models: &ModelSet, log: &TrialLog, velocity_bound: f64) -> Result<[Trajectory; 3]> {
    let params = &models.physical.params;
    let trajs = [
        rollout_log(&models.physical, params, log, velocity_bound),
        rollout_log(&models.hybrid, params, log, velocity_bound),
        rollout_log(&models.datadriven, params, log, velocity_bound),
    ];
    write_trajectories_csv(
        path,
        &Trajectory::from_log(log),
        &[("physical", &trajs[0]), ("hybrid", &trajs[1]), ("datadriven", &trajs[2])],
    )?;
    Ok(trajs)
}

/// Rolls the trained models through the test logs, or through `log` alone
/// when given.
pub fn cmd_rollout(cfg: &RunConfig, layout: &Layout, log: Option<&Path>, force: bool) -> Result<Vec<PathBuf>> {
    let hash = cfg.hash();
    let models = load_bundle(layout, &hash, force)?.model_set(cfg)?;
    let targets: Vec<(String, TrialLog)> = match log {
        Some(path) => {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "log".to_string());
            vec![(name, read_log_csv(path)?)]
        }
        None => {
            let manifest = load_manifest(layout, &hash, force)?;
            load_logs(layout, manifest.split(Split::Test))?
                .into_iter()
                .map(|(e, l)| (e.name, l))
                .collect()
        }
    };
    let mut written = Vec::new();
    for (name, log) in &targets {
        let path = layout.rollout(name);
        rollout_to_csv(&path, &models, log, cfg.rollout.velocity_bound)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTotals {
    pub physical: f64,
    pub hybrid: f64,
    pub datadriven: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub solver: Solver,
    pub velocity_bound: f64,
    pub maneuvers: Vec<ManeuverScore>,
    /// RMSE summed over channels and maneuvers.
    pub total_rmse: ModelTotals,
}

impl Report {
    pub fn new(cfg: &RunConfig, maneuvers: Vec<ManeuverScore>) -> Self {
        let total = |pick: fn(&ManeuverScore) -> [f64; 3]| maneuvers.iter().map(|m| pick(m).iter().sum::<f64>()).sum();
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            solver: cfg.rollout.solver,
            velocity_bound: cfg.rollout.velocity_bound,
            total_rmse: ModelTotals {
                physical: total(|m| m.physical.rmse),
                hybrid: total(|m| m.hybrid.rmse),
                datadriven: total(|m| m.datadriven.rmse),
            },
            maneuvers,
        }
    }

    /// Velocity RMSE and turning-diameter tables for the terminal.
    pub fn tables(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Velocity RMSE (u, v in m/s; r in rad/s)");
        let _ = writeln!(s, "{:<16} {:<11} {:>9} {:>9} {:>9}  status", "maneuver", "model", "u", "v", "r");
        for m in &self.maneuvers {
            for (name, score) in m.models() {
                let status = if score.diverged {
                    format!("diverged after {} of {} samples", score.samples, m.samples)
                } else {
                    "ok".to_string()
                };
                let [u, v, r] = score.rmse;
                let _ = writeln!(s, "{:<16} {:<11} {u:>9.4} {v:>9.4} {r:>9.5}  {status}", m.name, name);
            }
        }
        let t = &self.total_rmse;
        let _ = writeln!(
            s,
            "total            physical {:.4}  hybrid {:.4}  datadriven {:.4}",
            t.physical, t.hybrid, t.datadriven
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "Turning diameter (m) and relative error");
        let _ = writeln!(
            s,
            "{:<16} {:>9} {:>18} {:>18} {:>18}",
            "maneuver", "truth", "physical", "hybrid", "datadriven"
        );
        for m in self.maneuvers.iter().filter(|m| m.truth_diameter.is_some()) {
            let cell = |score: &crate::pipeline::ModelScore| match (score.diameter, score.diameter_rel_err) {
                (Some(d), Some(e)) => format!("{d:.1} ({:.2}%)", 100.0 * e),
                _ => "n/a".to_string(),
            };
            let _ = writeln!(
                s,
                "{:<16} {:>9.1} {:>18} {:>18} {:>18}",
                m.name,
                m.truth_diameter.unwrap_or(f64::NAN),
                cell(&m.physical),
                cell(&m.hybrid),
                cell(&m.datadriven)
            );
        }
        s
    }
}

/// Scores every test log, writes `report.json` and the per-step CSVs.
pub fn cmd_evaluate(cfg: &RunConfig, layout: &Layout, force: bool) -> Result<Report> {
    let hash = cfg.hash();
    let manifest = load_manifest(layout, &hash, force)?;
    let models = load_bundle(layout, &hash, force)?.model_set(cfg)?;
    let mut scores = Vec::new();
    for (entry, log) in load_logs(layout, manifest.split(Split::Test))? {
        let (score, trajs) = evaluate_log(&entry.name, &log, &models, cfg.rollout.velocity_bound, entry.is_turning())?;
        let [phy, hyb, dd] = &trajs;
        write_trajectories_csv(
            &layout.rollout(&entry.name),
            &Trajectory::from_log(&log),
            &[("physical", phy), ("hybrid", hyb), ("datadriven", dd)],
        )?;
        scores.push(score);
    }
    let report = Report::new(cfg, scores);
    write_json(&layout.report(), &report)?;
    Ok(report)
}

/// `gen`, `identify`, `train` and `evaluate` in sequence.
pub fn cmd_pipeline(cfg: &RunConfig, layout: &Layout) -> Result<Report> {
    cmd_gen(cfg, layout)?;
    cmd_identify(cfg, layout, false)?;
    cmd_train(cfg, layout, false)?;
    cmd_evaluate(cfg, layout, false)
}
