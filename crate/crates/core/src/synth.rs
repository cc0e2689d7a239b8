//! Synthetic "truth" trials: the reference physical model driven through a
//! maneuver with a steady current, sinusoidal wave forcing and measurement
//! noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::{LogRow, TrialLog};
use crate::maneuver::{Angle, ControlLaw, ManeuverController, ManeuverKind, ManeuverSpec};
use crate::model::{physical_accel, ControlInput, MotionState, Pose, StateDeriv, VesselParams};
use crate::ode::rk4_step;

/// Logging interval (s).
pub const LOG_DT: f64 = 0.1;
/// Truth integration sub-steps per logging interval.
pub const TRUTH_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSpec {
    /// Earth-frame current speed (m/s).
    pub current_speed: f64,
    /// Direction the current flows toward, earth frame (rad).
    pub current_dir: f64,
    /// Prime acceleration amplitudes of the wave forcing.
    pub wave_amp_v: f64,
    pub wave_amp_r: f64,
    /// rad/s
    pub wave_freq: f64,
    /// Measurement noise standard deviations (m/s, m/s, rad/s).
    pub noise_std_u: f64,
    pub noise_std_v: f64,
    pub noise_std_r: f64,
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        Self {
            current_speed: 0.2,
            current_dir: 1.0,
            wave_amp_v: 0.002,
            wave_amp_r: 0.002,
            wave_freq: 0.8,
            noise_std_u: 0.002,
            noise_std_v: 0.002,
            noise_std_r: 0.0001,
        }
    }
}

impl DisturbanceSpec {
    /// No current, waves or noise.
    pub const NONE: Self = Self {
        current_speed: 0.0,
        current_dir: 0.0,
        wave_amp_v: 0.0,
        wave_amp_r: 0.0,
        wave_freq: 0.0,
        noise_std_u: 0.0,
        noise_std_v: 0.0,
        noise_std_r: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.current_speed,
            self.current_dir,
            self.wave_amp_v,
            self.wave_amp_r,
            self.wave_freq,
            self.noise_std_u,
            self.noise_std_v,
            self.noise_std_r,
        ];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(Error::Config("disturbance values must be finite".into()));
        }
        if self.current_speed < 0.0 {
            return Err(Error::Config("disturbance.current_speed must be >= 0".into()));
        }
        if self.noise_std_u < 0.0 || self.noise_std_v < 0.0 || self.noise_std_r < 0.0 {
            return Err(Error::Config("disturbance noise stds must be >= 0".into()));
        }
        Ok(())
    }

    /// Earth-frame current velocity.
    pub fn current_earth(&self) -> (f64, f64) {
        let (s, c) = self.current_dir.sin_cos();
        (self.current_speed * c, self.current_speed * s)
    }

    /// Current expressed in the body frame at heading `psi`.
    pub fn current_body(&self, psi: f64) -> (f64, f64) {
        let (s, c) = (self.current_dir - psi).sin_cos();
        (self.current_speed * c, self.current_speed * s)
    }

    /// Wave forcing (SI accelerations) at time `t`.
    pub fn wave_accel(&self, params: &VesselParams, t: f64) -> StateDeriv {
        let phase = (self.wave_freq * t).sin();
        params.nondim.deriv_from_prime(&StateDeriv::new(
            0.0,
            self.wave_amp_v * phase,
            self.wave_amp_r * phase,
        ))
    }

    fn has_waves(&self) -> bool {
        self.wave_amp_v != 0.0 || self.wave_amp_r != 0.0
    }
}

/// One truth step of length `dt`: RK4 on the body velocities with wave
/// forcing frozen at the step start, and Euler on the pose using ground
/// velocity (body velocity rotated to earth frame plus the current).
pub fn truth_step(
    state: &MotionState,
    pose: &Pose,
    control: &ControlInput,
    params: &VesselParams,
    dist: &DisturbanceSpec,
    t: f64,
    dt: f64,
) -> (MotionState, Pose) {
    let next = if dist.has_waves() {
        let w = dist.wave_accel(params, t);
        rk4_step(
            |s, c| {
                let d = physical_accel(s, c, params);
                StateDeriv::new(d.du, d.dv + w.dv, d.dr + w.dr)
            },
            state,
            control,
            dt,
        )
    } else {
        rk4_step(|s, c| physical_accel(s, c, params), state, control, dt)
    };
    let (sin, cos) = pose.psi.sin_cos();
    let (cx, cy) = dist.current_earth();
    let pose = Pose::new(
        pose.x + dt * (state.u * cos - state.v * sin + cx),
        pose.y + dt * (state.u * sin + state.v * cos + cy),
        pose.psi + dt * state.r,
    );
    (next, pose)
}

/// Advances `TRUTH_SUBSTEPS` truth steps spanning one logging interval.
fn truth_interval(
    state: MotionState,
    pose: Pose,
    control: &ControlInput,
    params: &VesselParams,
    dist: &DisturbanceSpec,
    t: f64,
) -> (MotionState, Pose) {
    let h = LOG_DT / TRUTH_SUBSTEPS as f64;
    let (mut s, mut p) = (state, pose);
    for i in 0..TRUTH_SUBSTEPS {
        (s, p) = truth_step(&s, &p, control, params, dist, t + i as f64 * h, h);
    }
    (s, p)
}

/// Simulates a maneuver and logs it at 10 Hz. The optional approach phase
/// runs straight at the commanded impeller speed from rest and is not
/// logged. `seed` drives the measurement noise only.
pub fn generate_trial(
    maneuver: &ManeuverSpec,
    params: &VesselParams,
    dist: &DisturbanceSpec,
    seed: u64,
) -> Result<TrialLog> {
    params.validate()?;
    dist.validate()?;
    maneuver.validate(params.delta_max)?;
    if maneuver.duration < 10.0 {
        return Err(Error::Config(format!(
            "maneuver duration must be at least 10 s, got {}",
            maneuver.duration
        )));
    }

    let mut state = MotionState::default();
    let mut pose = Pose::new(0.0, 0.0, maneuver.initial_heading.0);
    let straight = ControlInput::new(0.0, maneuver.n_cmd);
    let approach_steps = (maneuver.approach / LOG_DT).round() as usize;
    for k in 0..approach_steps {
        (state, pose) = truth_interval(state, pose, &straight, params, dist, k as f64 * LOG_DT);
    }
    let t0 = approach_steps as f64 * LOG_DT;

    let steps = (maneuver.duration / LOG_DT).round() as usize;
    let mut law = ManeuverController::new(maneuver, pose.psi, LOG_DT, steps);
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |std: f64| {
        if std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut noise);
            std * z
        } else {
            0.0
        }
    };
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = t0 + k as f64 * LOG_DT;
        let control = law.control(k, pose.psi);
        let (cu, cv) = dist.current_body(pose.psi);
        let measured = MotionState::new(
            state.u + cu + gauss(dist.noise_std_u),
            state.v + cv + gauss(dist.noise_std_v),
            state.r + gauss(dist.noise_std_r),
        );
        rows.push(LogRow::new(k as f64 * LOG_DT, &pose, &measured, &control));
        if k < steps {
            (state, pose) = truth_interval(state, pose, &control, params, dist, t);
            if !state.is_finite() {
                return Err(Error::NonFinite("truth simulation state"));
            }
        }
    }
    TrialLog::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialPlan {
    pub name: String,
    pub split: Split,
    pub maneuver: ManeuverSpec,
}

/// Deterministic 64-bit seed derived from a global seed and a label
/// (FNV-1a over the label, mixed with SplitMix64).
pub fn derive_seed(global: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = global ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const DEFAULT_N_CMD: f64 = 3500.0;

/// Three training runs (random steering, 25° and 15° turns) and four test
/// runs (23° and 30° starboard turns, 20° port turn, zigzag).
pub fn standard_plan(seed: u64) -> Vec<TrialPlan> {
    let turn = |deg: f64| ManeuverSpec {
        kind: ManeuverKind::Turning {
            delta: Angle::from_degrees(deg),
        },
        n_cmd: DEFAULT_N_CMD,
        duration: 400.0,
        approach: 60.0,
        initial_heading: Angle(0.0),
    };
    let plan = |name: &str, split, maneuver| TrialPlan {
        name: name.to_string(),
        split,
        maneuver,
    };
    vec![
        plan(
            "train_random",
            Split::Train,
            ManeuverSpec {
                kind: ManeuverKind::Random {
                    hold: 12.0,
                    amplitude: Angle::from_degrees(30.0),
                    seed: derive_seed(seed, "steering/train_random"),
                    n_spread: 0.0,
                },
                n_cmd: DEFAULT_N_CMD,
                duration: 800.0,
                approach: 0.0,
                initial_heading: Angle(0.0),
            },
        ),
        plan("train_turn_25s", Split::Train, turn(25.0)),
        // A second propeller speed, so the surge fit sees more than one
        // steady-speed operating point.
        plan(
            "train_turn_15s",
            Split::Train,
            ManeuverSpec {
                n_cmd: 3300.0,
                ..turn(15.0)
            },
        ),
        plan("test_turn_23s", Split::Test, turn(23.0)),
        plan("test_turn_30s", Split::Test, turn(30.0)),
        plan("test_turn_20p", Split::Test, turn(-20.0)),
        plan(
            "test_zigzag",
            Split::Test,
            ManeuverSpec {
                kind: ManeuverKind::Zigzag {
                    delta_max: Angle::from_degrees(30.0),
                    psi_switch: Angle::from_degrees(20.0),
                },
                n_cmd: DEFAULT_N_CMD,
                duration: 300.0,
                approach: 60.0,
                initial_heading: Angle(0.0),
            },
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrial {
    pub plan: TrialPlan,
    /// Noise seed.
    pub seed: u64,
    pub log: TrialLog,
}

/// Generates every planned trial, concurrently. Noise seeds are derived
/// from `seed` and the trial name, so train and test never share one.
pub fn generate_dataset(
    plans: &[TrialPlan],
    params: &VesselParams,
    dist: &DisturbanceSpec,
    seed: u64,
) -> Result<Vec<GeneratedTrial>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = plans
            .iter()
            .map(|plan| {
                scope.spawn(move || {
                    let trial_seed = derive_seed(seed, &format!("noise/{}", plan.name));
                    generate_trial(&plan.maneuver, params, dist, trial_seed).map(|log| GeneratedTrial {
                        plan: plan.clone(),
                        seed: trial_seed,
                        log,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial generation panicked"))
            .collect()
    })
}

pub fn standard_dataset(
    params: &VesselParams,
    dist: &DisturbanceSpec,
    seed: u64,
) -> Result<Vec<GeneratedTrial>> {
    generate_dataset(&standard_plan(seed), params, dist, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::Solver;
    use crate::rollout::{PhysicalModel, VelocityModel};
    use std::f64::consts::{PI, TAU};

    fn turn(deg: f64, duration: f64) -> ManeuverSpec {
        ManeuverSpec {
            kind: ManeuverKind::Turning {
                delta: Angle::from_degrees(deg),
            },
            n_cmd: DEFAULT_N_CMD,
            duration,
            approach: 20.0,
            initial_heading: Angle(0.0),
        }
    }

    #[test]
    fn drift_at_rest_equals_current() {
        // constant sway/yaw terms would move the hull, so switch them off
        let mut params = VesselParams::default();
        params.swayyaw = crate::model::SwayYawCoeffs::ZERO;
        let dist = DisturbanceSpec {
            current_dir: 0.7,
            ..DisturbanceSpec::NONE
        }
        .with_current(0.2);
        let mut state = MotionState::default();
        let mut pose = Pose::default();
        let idle = ControlInput::new(0.0, 0.0);
        for k in 0..100 {
            (state, pose) = truth_step(&state, &pose, &idle, &params, &dist, k as f64 * 0.1, 0.1);
        }
        let speed = (pose.x.powi(2) + pose.y.powi(2)).sqrt() / 10.0;
        assert!((speed - 0.2).abs() < 1e-12, "{speed}");
        assert!((pose.y.atan2(pose.x) - 0.7).abs() < 1e-12);
    }

    impl DisturbanceSpec {
        fn with_current(mut self, speed: f64) -> Self {
            self.current_speed = speed;
            self
        }
    }

    #[test]
    fn wave_term_vanishes_at_half_period() {
        let params = VesselParams::default();
        let dist = DisturbanceSpec {
            wave_amp_v: 0.01,
            wave_amp_r: 0.01,
            wave_freq: 0.8,
            ..DisturbanceSpec::NONE
        };
        let w = dist.wave_accel(&params, PI / 0.8);
        assert!(w.dv.abs() < 1e-15 && w.dr.abs() < 1e-15);
        let w = dist.wave_accel(&params, PI / 1.6);
        assert!(w.dv > 0.0);
    }

    #[test]
    fn zero_disturbance_matches_physical_rollout() {
        let params = VesselParams::default();
        let spec = turn(25.0, 30.0);
        let log = generate_trial(&spec, &params, &DisturbanceSpec::NONE, 3).unwrap();
        let model = PhysicalModel::new(params, Solver::Rk4).with_substeps(TRUTH_SUBSTEPS);
        for w in log.rows.windows(2) {
            let next = model.next_velocity(&w[0].state(), w[0].psi, &w[0].control(), LOG_DT);
            assert_eq!(next, w[1].state());
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let params = VesselParams::default();
        let dist = DisturbanceSpec::default();
        let a = generate_trial(&turn(15.0, 20.0), &params, &dist, 11).unwrap();
        let b = generate_trial(&turn(15.0, 20.0), &params, &dist, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ_only_by_noise() {
        let params = VesselParams::default();
        let dist = DisturbanceSpec::default();
        let a = generate_trial(&turn(15.0, 20.0), &params, &dist, 1).unwrap();
        let b = generate_trial(&turn(15.0, 20.0), &params, &dist, 2).unwrap();
        assert_ne!(a, b);
        let n = a.len() as f64;
        let mut sq = [0.0; 3];
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.pose(), rb.pose());
            assert_eq!(ra.control(), rb.control());
            sq[0] += (ra.u - rb.u).powi(2);
            sq[1] += (ra.v - rb.v).powi(2);
            sq[2] += (ra.r - rb.r).powi(2);
        }
        // difference of two independent draws has std σ√2
        let expect = [dist.noise_std_u, dist.noise_std_v, dist.noise_std_r];
        for i in 0..3 {
            let sd = (sq[i] / n).sqrt() / 2f64.sqrt();
            assert!((sd / expect[i] - 1.0).abs() < 0.15, "channel {i}: {sd}");
        }
    }

    #[test]
    fn logged_current_at_rest_traces_circle() {
        let dist = DisturbanceSpec {
            current_dir: 0.3,
            ..DisturbanceSpec::NONE
        }
        .with_current(0.2);
        // sweep the heading by hand with the vessel held still in the water
        let mut design = Vec::new();
        let mut us = Vec::new();
        let mut vs = Vec::new();
        for k in 0..360 {
            let psi = TAU * k as f64 / 360.0;
            let (u, v) = dist.current_body(psi);
            assert!(((u * u + v * v).sqrt() - 0.2).abs() < 1e-12);
            design.push([psi.cos(), psi.sin()]);
            us.push(u);
            vs.push(v);
        }
        for y in [&us, &vs] {
            // least squares on (cos ψ, sin ψ); orthogonal over a full sweep
            let n = design.len() as f64;
            let a = design.iter().zip(y.iter()).map(|(d, y)| d[0] * y).sum::<f64>() * 2.0 / n;
            let b = design.iter().zip(y.iter()).map(|(d, y)| d[1] * y).sum::<f64>() * 2.0 / n;
            let mean = y.iter().sum::<f64>() / n;
            let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
            let ss_res: f64 = design
                .iter()
                .zip(y.iter())
                .map(|(d, y)| (y - a * d[0] - b * d[1]).powi(2))
                .sum();
            assert!(1.0 - ss_res / ss_tot > 0.999);
        }
    }

    #[test]
    fn standard_split() {
        let plan = standard_plan(42);
        assert_eq!(plan.iter().filter(|p| p.split == Split::Train).count(), 3);
        assert_eq!(plan.iter().filter(|p| p.split == Split::Test).count(), 4);
        let seeds: std::collections::HashSet<_> =
            plan.iter().map(|p| derive_seed(42, &format!("noise/{}", p.name))).collect();
        assert_eq!(seeds.len(), plan.len());
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
    }

    #[test]
    fn short_duration_rejected() {
        let params = VesselParams::default();
        assert!(generate_trial(&turn(10.0, 5.0), &params, &DisturbanceSpec::NONE, 0).is_err());
    }
}
