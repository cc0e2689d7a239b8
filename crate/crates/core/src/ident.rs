//! Linear-in-parameters identification of the surge and sway/yaw
//! coefficients from trial logs.
//!
//! Acceleration targets come from central differences of the logged
//! velocities. A sample is usable when it is interior and the control held
//! over the two intervals spanned by its stencil is the same; at a control
//! switch the true acceleration jumps and the difference quotient straddles
//! the jump.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, normal_equations};
use crate::log::TrialLog;
use crate::model::{
    sway_regressors, yaw_regressors, ControlInput, MotionState, NondimScheme, StateDeriv,
    SurgeCoeffs, SwayYawCoeffs, VesselParams, SWAY_TERMS, YAW_TERMS,
};

/// Rows of a linear regression `design · c ≈ targets`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub design: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub term_names: Vec<String>,
}

impl RegressionProblem {
    pub fn new(term_names: &[&str]) -> Self {
        Self {
            design: Vec::new(),
            targets: Vec::new(),
            term_names: term_names.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.term_names.len()
    }

    pub fn nrows(&self) -> usize {
        self.targets.len()
    }

    pub fn push(&mut self, row: &[f64], target: f64) {
        debug_assert_eq!(row.len(), self.ncols());
        self.design.push(row.to_vec());
        self.targets.push(target);
    }

    pub fn extend(&mut self, other: RegressionProblem) {
        debug_assert_eq!(self.term_names, other.term_names);
        self.design.extend(other.design);
        self.targets.extend(other.targets);
    }

    fn validate(&self) -> Result<()> {
        if self.design.len() != self.targets.len() {
            return Err(Error::LengthMismatch {
                left: self.design.len(),
                right: self.targets.len(),
            });
        }
        if self.targets.is_empty() {
            return Err(Error::EmptyProblem(self.term_names.join(", ")));
        }
        if let Some(bad) = self.design.iter().find(|r| r.len() != self.ncols()) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: self.ncols(),
            });
        }
        if !self
            .design
            .iter()
            .flatten()
            .chain(self.targets.iter())
            .all(|x| x.is_finite())
        {
            return Err(Error::NonFinite("regression problem"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub standardize: bool,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentConfig {
    pub ridge: RidgeConfig,
    /// Centered moving-average window applied to velocities before
    /// differencing; 1 disables it.
    pub smooth_window: usize,
    /// Minimum spread of prime surge velocity required by surge
    /// identification.
    pub min_surge_range: f64,
}

impl Default for IdentConfig {
    fn default() -> Self {
        Self {
            ridge: RidgeConfig::default(),
            smooth_window: 1,
            min_surge_range: 0.05,
        }
    }
}

impl IdentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge.lambda >= 0.0 && self.ridge.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "identification.ridge.lambda must be >= 0, got {}",
                self.ridge.lambda
            )));
        }
        if self.smooth_window == 0 || self.smooth_window.is_multiple_of(2) {
            return Err(Error::Config(
                "identification.smooth_window must be an odd positive integer".into(),
            ));
        }
        if !(self.min_surge_range >= 0.0) {
            return Err(Error::Config("identification.min_surge_range must be >= 0".into()));
        }
        Ok(())
    }
}

/// Half-width of the central stencil used at sample `k` of `n`: five points
/// where they fit, three next to the ends, none (one-sided) at the ends.
fn stencil_reach(k: usize, n: usize) -> usize {
    if k >= 2 && k + 2 < n {
        2
    } else if k >= 1 && k + 1 < n {
        1
    } else {
        0
    }
}

fn central_differences(states: &[MotionState], dt: f64) -> Result<Vec<StateDeriv>> {
    let n = states.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let combine = |terms: &[(usize, f64)], h: f64| {
        let f = |g: fn(&MotionState) -> f64| terms.iter().map(|&(i, w)| w * g(&states[i])).sum::<f64>() / h;
        StateDeriv::new(f(|s| s.u), f(|s| s.v), f(|s| s.r))
    };
    let out = (0..n)
        .map(|k| match stencil_reach(k, n) {
            2 => combine(
                &[(k - 2, 1.0), (k - 1, -8.0), (k + 1, 8.0), (k + 2, -1.0)],
                12.0 * dt,
            ),
            1 => combine(&[(k - 1, -1.0), (k + 1, 1.0)], 2.0 * dt),
            _ if k == 0 => combine(&[(0, -1.0), (1, 1.0)], dt),
            _ => combine(&[(n - 2, -1.0), (n - 1, 1.0)], dt),
        })
        .collect();
    Ok(out)
}

/// Velocity derivatives of a log (SI): fourth-order central differences
/// inside, second-order next to the ends and one-sided at the two ends.
/// Output has one entry per sample.
pub fn differentiate_log(log: &TrialLog) -> Result<Vec<StateDeriv>> {
    central_differences(&log.states(), log.dt)
}

/// Centered moving average with a window that shrinks near the ends.
pub fn smooth_states(states: &[MotionState], window: usize) -> Vec<MotionState> {
    if window <= 1 {
        return states.to_vec();
    }
    let half = window / 2;
    let n = states.len();
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(n);
            let m = (hi - lo) as f64;
            let (mut u, mut v, mut r) = (0.0, 0.0, 0.0);
            for s in &states[lo..hi] {
                u += s.u;
                v += s.v;
                r += s.r;
            }
            MotionState::new(u / m, v / m, r / m)
        })
        .collect()
}

/// A log converted to prime quantities with its usable-sample mask.
struct PrimeSamples {
    states: Vec<MotionState>,
    derivs: Vec<StateDeriv>,
    controls: Vec<ControlInput>,
    usable: Vec<bool>,
}

impl PrimeSamples {
    fn new(log: &TrialLog, scheme: &NondimScheme, smooth_window: usize) -> Result<Self> {
        let smoothed = smooth_states(&log.states(), smooth_window);
        let derivs = central_differences(&smoothed, log.dt)?;
        let controls = log.controls();
        let n = log.len();
        let usable = (0..n)
            .map(|k| {
                // every interval the stencil spans must share one control
                let h = stencil_reach(k, n);
                h > 0 && controls[k - h..k + h].iter().all(|c| *c == controls[k])
            })
            .collect();
        Ok(Self {
            states: smoothed.iter().map(|s| scheme.to_prime(s)).collect(),
            derivs: derivs.iter().map(|d| scheme.deriv_to_prime(d)).collect(),
            controls,
            usable,
        })
    }

    fn iter(&self) -> impl Iterator<Item = (&MotionState, &StateDeriv, &ControlInput)> {
        self.states
            .iter()
            .zip(&self.derivs)
            .zip(&self.controls)
            .zip(&self.usable)
            .filter(|(_, ok)| **ok)
            .map(|(((s, d), c), _)| (s, d, c))
    }
}

fn build_channel<const N: usize>(
    log: &TrialLog,
    scheme: &NondimScheme,
    smooth_window: usize,
    names: &[&str; N],
    row: impl Fn(&MotionState, f64) -> [f64; N],
    target: impl Fn(&StateDeriv) -> f64,
) -> Result<RegressionProblem> {
    if log.is_empty() {
        return Err(Error::EmptyProblem("empty log".into()));
    }
    let samples = PrimeSamples::new(log, scheme, smooth_window)?;
    let mut problem = RegressionProblem::new(names);
    for (s, d, c) in samples.iter() {
        problem.push(&row(s, c.delta), target(d));
    }
    if problem.nrows() == 0 {
        return Err(Error::EmptyProblem("no usable samples".into()));
    }
    Ok(problem)
}

/// Sway regression: columns `[v', r', δ, r'³, v'r'δ, u'r', 1]`, target `dv'`.
pub fn build_sway_regressors(log: &TrialLog, scheme: &NondimScheme) -> Result<RegressionProblem> {
    build_sway_regressors_smoothed(log, scheme, 1)
}

pub fn build_sway_regressors_smoothed(
    log: &TrialLog,
    scheme: &NondimScheme,
    smooth_window: usize,
) -> Result<RegressionProblem> {
    build_channel(log, scheme, smooth_window, &SWAY_TERMS, sway_regressors, |d| d.dv)
}

/// Yaw regression: columns `[r', δ, r'³, v'r'δ, u'r', r'δ², v'r'², 1]`,
/// target `dr'`.
pub fn build_yaw_regressors(log: &TrialLog, scheme: &NondimScheme) -> Result<RegressionProblem> {
    build_yaw_regressors_smoothed(log, scheme, 1)
}

pub fn build_yaw_regressors_smoothed(
    log: &TrialLog,
    scheme: &NondimScheme,
    smooth_window: usize,
) -> Result<RegressionProblem> {
    build_channel(log, scheme, smooth_window, &YAW_TERMS, yaw_regressors, |d| d.dr)
}

fn is_intercept(problem: &RegressionProblem, j: usize) -> bool {
    problem.design.iter().all(|row| row[j] == 1.0)
}

fn column_std(problem: &RegressionProblem, j: usize) -> f64 {
    let n = problem.nrows() as f64;
    let mean = problem.design.iter().map(|r| r[j]).sum::<f64>() / n;
    let var = problem
        .design
        .iter()
        .map(|r| (r[j] - mean) * (r[j] - mean))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    var.sqrt()
}

/// Ridge regression `min ‖Xc − y‖² + λ‖c‖²` via Cholesky on the normal
/// equations. With `standardize`, non-intercept columns are scaled to unit
/// standard deviation before solving and the coefficients mapped back.
pub fn fit_ridge(problem: &RegressionProblem, cfg: &RidgeConfig) -> Result<Vec<f64>> {
    problem.validate()?;
    if !(cfg.lambda >= 0.0) {
        return Err(Error::InvalidParams(format!("ridge lambda {}", cfg.lambda)));
    }
    let p = problem.ncols();
    let mut scale = vec![1.0; p];
    for j in 0..p {
        if is_intercept(problem, j) {
            continue;
        }
        let sd = column_std(problem, j);
        if !(sd > 1e-6) {
            return Err(Error::InsufficientExcitation(format!(
                "column `{}` has standard deviation {sd:.3e}",
                problem.term_names[j]
            )));
        }
        if cfg.standardize {
            scale[j] = sd;
        }
    }

    let scaled: Vec<Vec<f64>> = problem
        .design
        .iter()
        .map(|row| row.iter().zip(&scale).map(|(x, s)| x / s).collect())
        .collect();
    let (mut gram, rhs) = normal_equations(&scaled, &problem.targets, p);
    let raw_gram = gram.clone();
    for j in 0..p {
        gram[j * p + j] += cfg.lambda;
    }

    let factor = cholesky(&gram, p, 1e-10).map_err(|j| collinearity_error(problem, &raw_gram, j))?;
    let c = factor.solve(&rhs);
    Ok(c.iter().zip(&scale).map(|(c, s)| c / s).collect())
}

/// Names the columns that column `j` is a combination of.
fn collinearity_error(problem: &RegressionProblem, gram: &[f64], j: usize) -> Error {
    let p = problem.ncols();
    let column = problem.term_names[j].clone();
    if j == 0 {
        return Error::RankDeficient {
            column,
            dependent_on: Vec::new(),
        };
    }
    let lead: Vec<f64> = (0..j)
        .flat_map(|a| (0..j).map(move |b| (a, b)))
        .map(|(a, b)| gram[a * p + b])
        .collect();
    let cross: Vec<f64> = (0..j).map(|a| gram[a * p + j]).collect();
    let dependent_on = match cholesky(&lead, j, 1e-10) {
        Ok(f) => {
            let beta = f.solve(&cross);
            let big = beta.iter().fold(0.0f64, |m, b| m.max(b.abs()));
            beta.iter()
                .enumerate()
                .filter(|(_, b)| b.abs() > 1e-6 * big)
                .map(|(k, _)| problem.term_names[k].clone())
                .collect()
        }
        Err(_) => problem.term_names[..j].to_vec(),
    };
    Error::RankDeficient {
        column,
        dependent_on,
    }
}

/// Identifies the resistance polynomial with `X_udot` and the jet model
/// fixed. Regresses `du'(m' − X_udot') − X_P' − m'v'r'` on `[u', u'², u'³]`.
pub fn identify_surge(
    logs: &[&TrialLog],
    params: &VesselParams,
    cfg: &IdentConfig,
) -> Result<SurgeCoeffs> {
    let m = params.mass_prime();
    let denom = params.surge_denominator();
    let mut problem = RegressionProblem::new(&SurgeCoeffs::TERMS);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for log in logs {
        let samples = PrimeSamples::new(log, &params.nondim, cfg.smooth_window)?;
        for (s, d, c) in samples.iter() {
            let y = d.du * denom - params.thrust_prime(c) - m * s.v * s.r;
            problem.push(&[s.u, s.u * s.u, s.u * s.u * s.u], y);
            lo = lo.min(s.u);
            hi = hi.max(s.u);
        }
    }
    if problem.nrows() == 0 {
        return Err(Error::EmptyProblem("no usable surge samples".into()));
    }
    if !(hi - lo >= cfg.min_surge_range) || hi - lo == 0.0 {
        return Err(Error::InsufficientExcitation(format!(
            "surge velocity range {:.4} (prime) below {}",
            (hi - lo).max(0.0),
            cfg.min_surge_range
        )));
    }
    let c = fit_ridge(&problem, &cfg.ridge)?;
    Ok(SurgeCoeffs {
        x_udot: params.surge.x_udot,
        x_u: c[0],
        x_uu: c[1],
        x_uuu: c[2],
    })
}

/// Identifies the sway and yaw channels separately and stacks all logs.
pub fn identify_sway_yaw(
    logs: &[&TrialLog],
    scheme: &NondimScheme,
    cfg: &IdentConfig,
) -> Result<SwayYawCoeffs> {
    let mut sway = RegressionProblem::new(&SWAY_TERMS);
    let mut yaw = RegressionProblem::new(&YAW_TERMS);
    for log in logs {
        sway.extend(build_sway_regressors_smoothed(log, scheme, cfg.smooth_window)?);
        yaw.extend(build_yaw_regressors_smoothed(log, scheme, cfg.smooth_window)?);
    }
    let cs = fit_ridge(&sway, &cfg.ridge)?;
    let cy = fit_ridge(&yaw, &cfg.ridge)?;
    let mut s = [0.0; 7];
    let mut y = [0.0; 8];
    s.copy_from_slice(&cs);
    y.copy_from_slice(&cy);
    Ok(SwayYawCoeffs::from_parts(s, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::LogRow;
    use crate::model::Pose;

    fn log_from(velocities: impl Fn(f64) -> MotionState, controls: impl Fn(usize) -> ControlInput, n: usize) -> TrialLog {
        let rows = (0..n)
            .map(|k| {
                let t = k as f64 * 0.1;
                LogRow::new(t, &Pose::default(), &velocities(t), &controls(k))
            })
            .collect();
        TrialLog::new(rows).unwrap()
    }

    #[test]
    fn differences_of_polynomials() {
        let c = |_| ControlInput::default();
        let constant = log_from(|_| MotionState::new(1.0, 2.0, 3.0), c, 10);
        for d in differentiate_log(&constant).unwrap() {
            assert_eq!((d.du, d.dv, d.dr), (0.0, 0.0, 0.0));
        }
        let linear = log_from(|t| MotionState::new(t, 0.0, 0.0), c, 10);
        for d in differentiate_log(&linear).unwrap() {
            assert!((d.du - 1.0).abs() < 1e-12);
        }
        let quad = log_from(|t| MotionState::new(t * t, 0.0, 0.0), c, 10);
        let d = differentiate_log(&quad).unwrap();
        assert_eq!(d.len(), 10);
        for (k, dk) in d.iter().enumerate().take(9).skip(1) {
            let t = k as f64 * 0.1;
            assert!((dk.du - 2.0 * t).abs() < 1e-12, "{k}: {}", dk.du);
        }
        // the five-point interior is exact up to quartics
        let quartic = log_from(|t| MotionState::new(0.0, t.powi(4), t.powi(3)), c, 10);
        let d = differentiate_log(&quartic).unwrap();
        for (k, dk) in d.iter().enumerate().take(8).skip(2) {
            let t = k as f64 * 0.1;
            assert!((dk.dv - 4.0 * t.powi(3)).abs() < 1e-12, "{k}: {}", dk.dv);
            assert!((dk.dr - 3.0 * t * t).abs() < 1e-12, "{k}: {}", dk.dr);
        }
    }

    #[test]
    fn differentiate_needs_three_samples() {
        let log = log_from(|t| MotionState::new(t, 0.0, 0.0), |_| ControlInput::default(), 2);
        assert!(matches!(
            differentiate_log(&log),
            Err(Error::TooFewSamples { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn regressor_rows() {
        let scheme = NondimScheme::new(1.0, 1.0, 1000.0).unwrap();
        let rest = log_from(|_| MotionState::default(), |_| ControlInput::default(), 5);
        let sway = build_sway_regressors(&rest, &scheme).unwrap();
        assert_eq!(sway.ncols(), 7);
        assert_eq!(sway.design[0], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);

        let moving = log_from(
            |_| MotionState::new(1.0, 0.1, 0.05),
            |_| ControlInput::new(0.2, 0.0),
            5,
        );
        let yaw = build_yaw_regressors(&moving, &scheme).unwrap();
        assert_eq!(yaw.ncols(), 8);
        let expect = [0.05, 0.2, 1.25e-4, 1e-3, 0.05, 0.002, 2.5e-4, 1.0];
        for (a, b) in yaw.design[0].iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn control_switches_are_skipped() {
        let scheme = NondimScheme::default();
        let log = log_from(
            |t| MotionState::new(t, 0.0, 0.0),
            |k| ControlInput::new(if k < 5 { 0.0 } else { 0.1 }, 0.0),
            10,
        );
        // interior samples 1..=8, minus the three whose stencils straddle
        // the switch before k = 5
        assert_eq!(build_sway_regressors(&log, &scheme).unwrap().nrows(), 5);
    }

    fn synthetic_problem(coeffs: &[f64], rows: usize) -> RegressionProblem {
        let names: Vec<String> = (0..coeffs.len()).map(|i| format!("c{i}")).collect();
        let names_ref: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut p = RegressionProblem::new(&names_ref);
        for k in 0..rows {
            let x = k as f64 * 0.37;
            let row: Vec<f64> = (0..coeffs.len())
                .map(|j| if j == 0 { 1.0 } else { (x * (j as f64 + 0.3)).sin() * j as f64 })
                .collect();
            let y = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
            p.push(&row, y);
        }
        p
    }

    #[test]
    fn ridge_recovers_exact_coefficients() {
        let truth = [0.5, -2.0, 0.003, 7.0];
        let p = synthetic_problem(&truth, 200);
        for standardize in [true, false] {
            let c = fit_ridge(&p, &RidgeConfig { lambda: 0.0, standardize }).unwrap();
            for (a, b) in c.iter().zip(truth) {
                assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn ridge_shrinks_to_zero() {
        let p = synthetic_problem(&[0.5, -2.0, 0.003, 7.0], 200);
        let c = fit_ridge(&p, &RidgeConfig { lambda: 1e12, standardize: true }).unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-6), "{c:?}");
    }

    #[test]
    fn ridge_names_collinear_columns() {
        let mut p = RegressionProblem::new(&["a", "b", "a_plus_b"]);
        for k in 0..20 {
            let (a, b) = ((k as f64).sin(), (k as f64 * 0.7).cos());
            p.push(&[a, b, a + b], a - b);
        }
        match fit_ridge(&p, &RidgeConfig { lambda: 0.0, standardize: true }) {
            Err(Error::RankDeficient { column, dependent_on }) => {
                assert_eq!(column, "a_plus_b");
                assert_eq!(dependent_on, vec!["a".to_string(), "b".to_string()]);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        // ridge makes it solvable
        assert!(fit_ridge(&p, &RidgeConfig { lambda: 1e-3, standardize: true }).is_ok());
    }

    #[test]
    fn ridge_rejects_flat_columns() {
        let mut p = RegressionProblem::new(&["x", "flat"]);
        for k in 0..10 {
            p.push(&[k as f64, 0.5], 1.0);
        }
        assert!(matches!(
            fit_ridge(&p, &RidgeConfig::default()),
            Err(Error::InsufficientExcitation(_))
        ));
        let empty = RegressionProblem::new(&["x"]);
        assert!(matches!(fit_ridge(&empty, &RidgeConfig::default()), Err(Error::EmptyProblem(_))));
    }

    #[test]
    fn surge_rejects_zero_speed() {
        let params = VesselParams::default();
        let log = log_from(|_| MotionState::default(), |_| ControlInput::default(), 50);
        assert!(matches!(
            identify_surge(&[&log], &params, &IdentConfig::default()),
            Err(Error::InsufficientExcitation(_))
        ));
    }
}
