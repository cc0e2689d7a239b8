//! Long-horizon iterative prediction, pose kinematics and trajectory
//! metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::log::TrialLog;
use crate::maneuver::ControlLaw;
use crate::model::{physical_accel, ControlInput, MotionState, Pose, VesselParams};
use crate::ode::Solver;

/// One-step velocity map `(state, ψ, control, dt) → next state`, SI units.
pub trait VelocityModel: Sync {
    fn next_velocity(&self, state: &MotionState, psi: f64, control: &ControlInput, dt: f64) -> MotionState;
}

/// The physical model advanced by a fixed-step solver, optionally with
/// several sub-steps per call.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalModel {
    pub params: VesselParams,
    pub solver: Solver,
    pub substeps: usize,
}

impl PhysicalModel {
    pub fn new(params: VesselParams, solver: Solver) -> Self {
        Self {
            params,
            solver,
            substeps: 1,
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }
}

impl VelocityModel for PhysicalModel {
    fn next_velocity(&self, state: &MotionState, _psi: f64, control: &ControlInput, dt: f64) -> MotionState {
        let h = dt / self.substeps as f64;
        let mut s = *state;
        for _ in 0..self.substeps {
            s = self
                .solver
                .step(|s, c| physical_accel(s, c, &self.params), &s, control, h);
        }
        s
    }
}

/// Euler update of planar kinematics using the body velocities at the start
/// of the step.
pub fn integrate_pose(state: &MotionState, pose: &Pose, dt: f64) -> Pose {
    let (sin, cos) = pose.psi.sin_cos();
    Pose::new(
        pose.x + dt * (state.u * cos - state.v * sin),
        pose.y + dt * (state.u * sin + state.v * cos),
        pose.psi + dt * state.r,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MotionState>,
    pub poses: Vec<Pose>,
    pub controls: Vec<ControlInput>,
    /// Set when the rollout left the velocity bound and was truncated.
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn from_log(log: &TrialLog) -> Self {
        Self {
            times: log.times(),
            states: log.states(),
            poses: log.poses(),
            controls: log.controls(),
            diverged: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOptions {
    pub dt: f64,
    pub steps: usize,
    /// Divergence bound on every prime velocity component (multiples of the
    /// reference speed).
    pub velocity_bound: f64,
}

impl RolloutOptions {
    pub fn new(dt: f64, steps: usize) -> Self {
        Self {
            dt,
            steps,
            velocity_bound: 10.0,
        }
    }
}

/// Closed-loop iteration from `init`. Produces `steps + 1` samples unless
/// the state leaves the bound or turns non-finite, in which case the
/// trajectory stops at the last good sample and `diverged` is set.
pub fn rollout(
    model: &dyn VelocityModel,
    scheme: &crate::model::NondimScheme,
    init_state: MotionState,
    init_pose: Pose,
    law: &mut dyn ControlLaw,
    opts: &RolloutOptions,
) -> Trajectory {
    let mut traj = Trajectory {
        times: Vec::with_capacity(opts.steps + 1),
        states: Vec::with_capacity(opts.steps + 1),
        poses: Vec::with_capacity(opts.steps + 1),
        controls: Vec::with_capacity(opts.steps + 1),
        diverged: false,
    };
    let mut state = init_state;
    let mut pose = init_pose;
    for k in 0..=opts.steps {
        let control = law.control(k, pose.psi);
        traj.times.push(k as f64 * opts.dt);
        traj.states.push(state);
        traj.poses.push(pose);
        traj.controls.push(control);
        if k == opts.steps {
            break;
        }
        let next = model.next_velocity(&state, pose.psi, &control, opts.dt);
        let next_pose = integrate_pose(&state, &pose, opts.dt);
        let bounded = scheme.to_prime(&next).max_abs() <= opts.velocity_bound;
        if !(next.is_finite() && next_pose.psi.is_finite() && bounded) {
            traj.diverged = true;
            break;
        }
        state = next;
        pose = next_pose;
    }
    traj
}

/// Per-channel RMSE `(u, v, r)` between two equally long state series.
pub fn rmse(predicted: &[MotionState], truth: &[MotionState]) -> Result<[f64; 3]> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut acc = [0.0; 3];
    for (p, t) in predicted.iter().zip(truth) {
        acc[0] += (p.u - t.u) * (p.u - t.u);
        acc[1] += (p.v - t.v) * (p.v - t.v);
        acc[2] += (p.r - t.r) * (p.r - t.r);
    }
    let n = predicted.len() as f64;
    Ok(acc.map(|a| (a / n).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

/// Kåsa algebraic circle fit: least squares on
/// `x² + y² + D x + E y + F = 0`. Points are centered first for
/// conditioning.
pub fn fit_circle(points: &[(f64, f64)]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut gram = [0.0; 9];
    let mut rhs = [0.0; 3];
    for &(x, y) in points {
        let (x, y) = (x - mx, y - my);
        let row = [x, y, 1.0];
        let target = -(x * x + y * y);
        for i in 0..3 {
            rhs[i] += row[i] * target;
            for j in 0..3 {
                gram[i * 3 + j] += row[i] * row[j];
            }
        }
    }
    let sol = cholesky(&gram, 3, 1e-12)
        .map_err(|_| Error::DegenerateFit("points are collinear or coincident".into()))?
        .solve(&rhs);
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let r2 = 0.25 * (d * d + e * e) - f;
    if !(r2 > 0.0) {
        return Err(Error::DegenerateFit(format!("negative squared radius {r2}")));
    }
    Ok(Circle {
        cx: mx - 0.5 * d,
        cy: my - 0.5 * e,
        radius: r2.sqrt(),
    })
}

/// Cumulative absolute heading change along the series.
pub fn heading_change(poses: &[Pose]) -> Vec<f64> {
    let mut total = 0.0;
    let mut out = Vec::with_capacity(poses.len());
    for (k, p) in poses.iter().enumerate() {
        if k > 0 {
            total += (p.psi - poses[k - 1].psi).abs();
        }
        out.push(total);
    }
    out
}

/// Steady turning diameter: circle fit over the samples after the first
/// 360° of heading change. Requires at least 540° in total.
pub fn turning_diameter(poses: &[Pose]) -> Result<f64> {
    let cumulative = heading_change(poses);
    let total = cumulative.last().copied().unwrap_or(0.0);
    if total < 3.0 * std::f64::consts::PI {
        return Err(Error::NoSteadyTurn {
            heading_change_deg: total.to_degrees(),
        });
    }
    let points: Vec<(f64, f64)> = poses
        .iter()
        .zip(&cumulative)
        .filter(|(_, c)| **c >= std::f64::consts::TAU)
        .map(|(p, _)| (p.x, p.y))
        .collect();
    Ok(2.0 * fit_circle(&points)?.radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maneuver::Replay;
    use crate::model::SwayYawCoeffs;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn pose_kinematics() {
        let p = integrate_pose(&MotionState::new(1.0, 0.0, 0.0), &Pose::default(), 1.0);
        assert_eq!(p, Pose::new(1.0, 0.0, 0.0));
        let p = integrate_pose(&MotionState::new(0.0, 1.0, 0.0), &Pose::default(), 1.0);
        assert_eq!(p, Pose::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn pose_integration_approaches_circle() {
        // u = 1, r = 0.1: radius 10; error shrinks with dt
        let err = |dt: f64| {
            let s = MotionState::new(1.0, 0.0, 0.1);
            let mut pose = Pose::default();
            let steps = (TAU / 0.1 / dt).round() as usize;
            let mut worst: f64 = 0.0;
            for _ in 0..steps {
                pose = integrate_pose(&s, &pose, dt);
                let rad = (pose.x.powi(2) + (pose.y - 10.0).powi(2)).sqrt();
                worst = worst.max((rad - 10.0).abs());
            }
            worst
        };
        let (coarse, fine) = (err(0.1), err(0.01));
        assert!(fine < 0.1 * coarse * 1.5, "{coarse} {fine}");
        assert!(fine < 0.01);
    }

    #[test]
    fn rmse_cases() {
        let a = vec![MotionState::new(1.0, 2.0, 3.0); 10];
        assert_eq!(rmse(&a, &a).unwrap(), [0.0; 3]);
        let b: Vec<_> = a.iter().map(|s| MotionState::new(s.u + 0.1, s.v, s.r)).collect();
        let e = rmse(&b, &a).unwrap();
        assert!((e[0] - 0.1).abs() < 1e-12 && e[1] == 0.0);
        assert!(matches!(rmse(&a[..3], &a), Err(Error::LengthMismatch { .. })));
    }

    fn circle_poses(radius: f64, step_angle: f64, turns: f64) -> Vec<Pose> {
        let n = (turns * TAU / step_angle).round() as usize;
        (0..=n)
            .map(|k| {
                let th = k as f64 * step_angle;
                Pose::new(3.0 + radius * th.sin(), -7.0 + radius * (1.0 - th.cos()), th)
            })
            .collect()
    }

    #[test]
    fn exact_circle_diameter() {
        let d = turning_diameter(&circle_poses(15.0, 1f64.to_radians(), 3.0)).unwrap();
        assert!((d - 30.0).abs() < 0.01, "{d}");
    }

    #[test]
    fn straight_line_has_no_turn() {
        let poses: Vec<_> = (0..100).map(|k| Pose::new(k as f64, 0.0, 0.0)).collect();
        assert!(matches!(turning_diameter(&poses), Err(Error::NoSteadyTurn { .. })));
        let pts: Vec<_> = (0..10).map(|k| (k as f64, 2.0 * k as f64)).collect();
        assert!(fit_circle(&pts).is_err());
    }

    #[test]
    fn stationary_rollout() {
        let mut params = VesselParams::default();
        params.swayyaw = SwayYawCoeffs::ZERO;
        let model = PhysicalModel::new(params, Solver::Euler);
        let controls = vec![ControlInput::new(0.2, 0.0); 50];
        let traj = rollout(
            &model,
            &params.nondim,
            MotionState::default(),
            Pose::default(),
            &mut Replay(&controls),
            &RolloutOptions::new(0.1, 49),
        );
        assert_eq!(traj.len(), 50);
        assert!(!traj.diverged);
        assert!(traj.states.iter().all(|s| *s == MotionState::default()));
        assert!(traj.poses.iter().all(|p| *p == Pose::default()));
    }

    struct Exploding;

    impl VelocityModel for Exploding {
        fn next_velocity(&self, s: &MotionState, _: f64, _: &ControlInput, _: f64) -> MotionState {
            MotionState::new(s.u * 3.0 + 1.0, s.v, s.r)
        }
    }

    #[test]
    fn divergence_truncates() {
        let scheme = crate::model::NondimScheme::default();
        let traj = rollout(
            &Exploding,
            &scheme,
            MotionState::default(),
            Pose::default(),
            &mut Replay(&[]),
            &RolloutOptions::new(0.1, 100),
        );
        assert!(traj.diverged);
        assert!(traj.len() < 101);
        assert!(traj.states.iter().all(|s| s.is_finite() && s.u <= 50.0));
    }

    #[test]
    fn heading_change_accumulates_absolute_steps() {
        let poses: Vec<_> = [0.0, 0.5, 0.2, 1.0].iter().map(|&p| Pose::new(0.0, 0.0, p)).collect();
        let c = heading_change(&poses);
        assert!((c[3] - 1.6).abs() < 1e-12);
        let _ = PI;
    }
}
