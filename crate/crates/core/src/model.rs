//! Simplified 3-DOF maneuvering model.
//!
//! Surge is a resistance polynomial plus water-jet thrust; sway and yaw are
//! lumped polynomials whose coefficients absorb the inertia terms. All
//! hydrodynamic coefficients live in the prime system defined by
//! [`NondimScheme`]: velocities over `U`, yaw rate times `L/U`, forces over
//! `½ρL²U²`, mass over `½ρL³`, time over `L/U`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Body-frame velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionState {
    /// Surge velocity (m/s).
    pub u: f64,
    /// Sway velocity (m/s).
    pub v: f64,
    /// Yaw rate (rad/s).
    pub r: f64,
}

impl MotionState {
    pub const fn new(u: f64, v: f64, r: f64) -> Self {
        Self { u, v, r }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.r.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.r]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// `self + h * d`, component-wise.
    pub fn advanced(&self, d: &StateDeriv, h: f64) -> Self {
        Self::new(self.u + h * d.du, self.v + h * d.dv, self.r + h * d.dr)
    }

    pub fn max_abs(&self) -> f64 {
        self.u.abs().max(self.v.abs()).max(self.r.abs())
    }
}

/// Earth-frame position and heading. Heading is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    /// North (m).
    pub x: f64,
    /// East (m).
    pub y: f64,
    /// Heading (rad), not reduced modulo 2π.
    pub psi: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, psi: f64) -> Self {
        Self { x, y, psi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Steering angle (rad).
    pub delta: f64,
    /// Impeller speed (rpm).
    pub n: f64,
}

impl ControlInput {
    pub const fn new(delta: f64, n: f64) -> Self {
        Self { delta, n }
    }
}

/// Time derivative of [`MotionState`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateDeriv {
    pub du: f64,
    pub dv: f64,
    pub dr: f64,
}

impl StateDeriv {
    pub const fn new(du: f64, dv: f64, dr: f64) -> Self {
        Self { du, dv, dr }
    }

    pub fn is_finite(&self) -> bool {
        self.du.is_finite() && self.dv.is_finite() && self.dr.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondimScheme {
    /// Reference length `L` (m).
    pub length: f64,
    /// Reference speed `U` (m/s).
    pub ref_speed: f64,
    /// Water density (kg/m³).
    pub rho: f64,
}

impl Default for NondimScheme {
    fn default() -> Self {
        Self {
            length: 7.5,
            ref_speed: 5.0,
            rho: 1000.0,
        }
    }
}

impl NondimScheme {
    pub fn new(length: f64, ref_speed: f64, rho: f64) -> Result<Self> {
        let s = Self {
            length,
            ref_speed,
            rho,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("length", self.length),
            ("ref_speed", self.ref_speed),
            ("rho", self.rho),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "nondim.{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_prime(&self, s: &MotionState) -> MotionState {
        MotionState::new(
            s.u / self.ref_speed,
            s.v / self.ref_speed,
            s.r * self.length / self.ref_speed,
        )
    }

    pub fn from_prime(&self, s: &MotionState) -> MotionState {
        MotionState::new(
            s.u * self.ref_speed,
            s.v * self.ref_speed,
            s.r * self.ref_speed / self.length,
        )
    }

    /// Converts a prime-space derivative (w.r.t. prime time `tU/L`) to SI.
    pub fn deriv_from_prime(&self, d: &StateDeriv) -> StateDeriv {
        let lin = self.ref_speed * self.ref_speed / self.length;
        let ang = lin / self.length;
        StateDeriv::new(d.du * lin, d.dv * lin, d.dr * ang)
    }

    pub fn deriv_to_prime(&self, d: &StateDeriv) -> StateDeriv {
        let lin = self.ref_speed * self.ref_speed / self.length;
        let ang = lin / self.length;
        StateDeriv::new(d.du / lin, d.dv / lin, d.dr / ang)
    }

    /// `½ρL²U²`
    pub fn force_scale(&self) -> f64 {
        0.5 * self.rho * self.length * self.length * self.ref_speed * self.ref_speed
    }

    /// `½ρL³`
    pub fn mass_scale(&self) -> f64 {
        0.5 * self.rho * self.length.powi(3)
    }
}

/// Surge added mass and resistance polynomial, all prime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeCoeffs {
    pub x_udot: f64,
    pub x_u: f64,
    pub x_uu: f64,
    pub x_uuu: f64,
}

impl SurgeCoeffs {
    pub const REFERENCE: Self = Self {
        x_udot: -0.0072,
        x_u: -0.04130,
        x_uu: 0.01600,
        x_uuu: -0.00022,
    };

    /// Slot names of the identified resistance terms.
    pub const TERMS: [&'static str; 3] = ["X_u", "X_uu", "X_uuu"];

    pub fn resistance(&self, u: f64) -> f64 {
        self.x_u * u + self.x_uu * u * u + self.x_uuu * u * u * u
    }

    pub fn identified(&self) -> [f64; 3] {
        [self.x_u, self.x_uu, self.x_uuu]
    }
}

impl Default for SurgeCoeffs {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// Lumped sway (`v_*`) and yaw (`r_*`) polynomial coefficients, all prime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwayYawCoeffs {
    pub v_v: f64,
    pub v_r: f64,
    pub v_delta: f64,
    pub v_rrr: f64,
    pub v_vrdelta: f64,
    pub v_ur: f64,
    pub v_0: f64,
    pub r_r: f64,
    pub r_delta: f64,
    pub r_rrr: f64,
    pub r_vrdelta: f64,
    pub r_ur: f64,
    pub r_rdd: f64,
    pub r_vrr: f64,
    pub r_0: f64,
}

pub const SWAY_TERMS: [&str; 7] = ["Y_v", "Y_r", "Y_delta", "Y_rrr", "Y_vrdelta", "Y_ur", "Y_0"];
pub const YAW_TERMS: [&str; 8] = [
    "R_r",
    "R_delta",
    "R_rrr",
    "R_vrdelta",
    "R_ur",
    "R_rdeltadelta",
    "R_vrr",
    "R_0",
];

impl SwayYawCoeffs {
    pub const ZERO: Self = Self::from_parts([0.0; 7], [0.0; 8]);

    /// Coefficients of the reference 7.5 m water-jet USV.
    pub const REFERENCE: Self = Self::from_parts(
        [-0.10667, -0.00304, 0.10280, -4.54642, 2.15718, 0.00020, 0.00183],
        [
            -0.86381, 0.23587, -3.09984, -3.33673, 0.12056, 0.07598, 9.66080, 0.00227,
        ],
    );

    pub const fn from_parts(sway: [f64; 7], yaw: [f64; 8]) -> Self {
        Self {
            v_v: sway[0],
            v_r: sway[1],
            v_delta: sway[2],
            v_rrr: sway[3],
            v_vrdelta: sway[4],
            v_ur: sway[5],
            v_0: sway[6],
            r_r: yaw[0],
            r_delta: yaw[1],
            r_rrr: yaw[2],
            r_vrdelta: yaw[3],
            r_ur: yaw[4],
            r_rdd: yaw[5],
            r_vrr: yaw[6],
            r_0: yaw[7],
        }
    }

    pub fn sway(&self) -> [f64; 7] {
        [
            self.v_v,
            self.v_r,
            self.v_delta,
            self.v_rrr,
            self.v_vrdelta,
            self.v_ur,
            self.v_0,
        ]
    }

    pub fn yaw(&self) -> [f64; 8] {
        [
            self.r_r,
            self.r_delta,
            self.r_rrr,
            self.r_vrdelta,
            self.r_ur,
            self.r_rdd,
            self.r_vrr,
            self.r_0,
        ]
    }

    /// All 15 coefficients as `(slot name, value)`, sway first.
    pub fn labeled(&self) -> Vec<(&'static str, f64)> {
        SWAY_TERMS
            .iter()
            .copied()
            .zip(self.sway())
            .chain(YAW_TERMS.iter().copied().zip(self.yaw()))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.sway().iter().chain(self.yaw().iter()).all(|c| c.is_finite())
    }
}

impl Default for SwayYawCoeffs {
    fn default() -> Self {
        Self::REFERENCE
    }
}

impl std::ops::Add for SwayYawCoeffs {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut sway = self.sway();
        let mut yaw = self.yaw();
        sway.iter_mut().zip(rhs.sway()).for_each(|(a, b)| *a += b);
        yaw.iter_mut().zip(rhs.yaw()).for_each(|(a, b)| *a += b);
        Self::from_parts(sway, yaw)
    }
}

/// Sway monomials `[v, r, δ, r³, vrδ, ur, 1]` evaluated at a prime state.
pub fn sway_regressors(s: &MotionState, delta: f64) -> [f64; 7] {
    let (u, v, r) = (s.u, s.v, s.r);
    [v, r, delta, r * r * r, v * r * delta, u * r, 1.0]
}

/// Yaw monomials `[r, δ, r³, vrδ, ur, rδ², vr², 1]` evaluated at a prime state.
pub fn yaw_regressors(s: &MotionState, delta: f64) -> [f64; 8] {
    let (u, v, r) = (s.u, s.v, s.r);
    [
        r,
        delta,
        r * r * r,
        v * r * delta,
        u * r,
        r * delta * delta,
        v * r * r,
        1.0,
    ]
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetParams {
    /// Momentum utilization factor.
    pub alpha: f64,
    /// Nozzle area (m²).
    pub area: f64,
    /// Slope of nozzle velocity vs impeller speed (m/s per rpm).
    pub a: f64,
    /// Offset of nozzle velocity (m/s).
    pub b: f64,
    pub jet_count: u32,
}

impl Default for JetParams {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            area: 0.016,
            a: 0.0075,
            b: -7.0,
            jet_count: 1,
        }
    }
}

impl JetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "jet.alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.area.is_finite() && self.area > 0.0) {
            return Err(Error::InvalidParams(format!(
                "jet.area must be positive, got {}",
                self.area
            )));
        }
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidParams("jet.a and jet.b must be finite".into()));
        }
        if self.jet_count == 0 {
            return Err(Error::InvalidParams("jet.jet_count must be at least 1".into()));
        }
        Ok(())
    }

    /// Nozzle velocity, clamped at zero (no reverse thrust).
    pub fn nozzle_velocity(&self, n: f64) -> f64 {
        (self.a * n + self.b).max(0.0)
    }
}

/// Total jet thrust along the body x-axis (N).
pub fn jet_thrust(control: &ControlInput, jet: &JetParams, rho: f64) -> f64 {
    let vj = jet.nozzle_velocity(control.n);
    f64::from(jet.jet_count) * jet.alpha * rho * jet.area * vj * vj * control.delta.cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VesselParams {
    /// Displacement mass (kg).
    pub mass: f64,
    pub surge: SurgeCoeffs,
    pub swayyaw: SwayYawCoeffs,
    pub jet: JetParams,
    pub nondim: NondimScheme,
    /// Steering limit (rad).
    pub delta_max: f64,
}

impl Default for VesselParams {
    /// The reference 7.5 m, 3000 kg water-jet USV with its identified
    /// coefficients.
    fn default() -> Self {
        Self {
            mass: 3000.0,
            surge: SurgeCoeffs::REFERENCE,
            swayyaw: SwayYawCoeffs::REFERENCE,
            jet: JetParams::default(),
            nondim: NondimScheme::default(),
            delta_max: 30f64.to_radians(),
        }
    }
}

impl VesselParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidParams(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        self.nondim.validate()?;
        self.jet.validate()?;
        if !(self.delta_max.is_finite() && self.delta_max > 0.0) {
            return Err(Error::InvalidParams(format!(
                "delta_max must be positive, got {}",
                self.delta_max
            )));
        }
        let s = &self.surge;
        if ![s.x_udot, s.x_u, s.x_uu, s.x_uuu].iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParams("surge coefficients must be finite".into()));
        }
        if !self.swayyaw.is_finite() {
            return Err(Error::InvalidParams(
                "sway/yaw coefficients must be finite".into(),
            ));
        }
        let denom = self.surge_denominator();
        if !(denom > 0.0) {
            return Err(Error::InvalidParams(format!(
                "m' - X_udot' must be positive, got {denom}"
            )));
        }
        Ok(())
    }

    pub fn mass_prime(&self) -> f64 {
        self.mass / self.nondim.mass_scale()
    }

    /// `m' - X_udot'`
    pub fn surge_denominator(&self) -> f64 {
        self.mass_prime() - self.surge.x_udot
    }

    /// Jet thrust in prime units.
    pub fn thrust_prime(&self, control: &ControlInput) -> f64 {
        jet_thrust(control, &self.jet, self.nondim.rho) / self.nondim.force_scale()
    }
}

/// Prime surge acceleration.
pub fn surge_accel(s: &MotionState, control: &ControlInput, params: &VesselParams) -> f64 {
    let m = params.mass_prime();
    let hull = params.surge.resistance(s.u);
    (hull + params.thrust_prime(control) + m * s.v * s.r) / params.surge_denominator()
}

/// Prime sway and yaw accelerations.
pub fn sway_yaw_accel(s: &MotionState, control: &ControlInput, c: &SwayYawCoeffs) -> (f64, f64) {
    (
        dot(&c.sway(), &sway_regressors(s, control.delta)),
        dot(&c.yaw(), &yaw_regressors(s, control.delta)),
    )
}

/// Prime-space right-hand side.
pub fn physical_rhs_prime(
    s: &MotionState,
    control: &ControlInput,
    params: &VesselParams,
) -> StateDeriv {
    let du = surge_accel(s, control, params);
    let (dv, dr) = sway_yaw_accel(s, control, &params.swayyaw);
    StateDeriv::new(du, dv, dr)
}

/// SI right-hand side without input checks, for use inside integrators.
pub fn physical_accel(s: &MotionState, control: &ControlInput, params: &VesselParams) -> StateDeriv {
    let scheme = &params.nondim;
    scheme.deriv_from_prime(&physical_rhs_prime(&scheme.to_prime(s), control, params))
}

/// SI right-hand side; rejects non-finite inputs.
pub fn physical_rhs(
    s: &MotionState,
    control: &ControlInput,
    params: &VesselParams,
) -> Result<StateDeriv> {
    if !s.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if !(control.delta.is_finite() && control.n.is_finite()) {
        return Err(Error::NonFinite("control"));
    }
    Ok(physical_accel(s, control, params))
}
