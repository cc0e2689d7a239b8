//! Maneuver definitions and the steering laws that realize them.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::ControlInput;

/// An angle in radians. Deserializes from a bare number (radians) or a
/// string with an explicit unit, e.g. `"23deg"` or `"0.4rad"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(pub f64);

impl Angle {
    pub fn from_degrees(deg: f64) -> Self {
        Angle(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

impl std::str::FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (num, to_rad): (&str, fn(f64) -> f64) = if let Some(n) = s.strip_suffix("deg") {
            (n, f64::to_radians)
        } else if let Some(n) = s.strip_suffix("rad") {
            (n, |x| x)
        } else {
            (s, |x| x)
        };
        num.trim()
            .parse::<f64>()
            .map(|x| Angle(to_rad(x)))
            .map_err(|_| format!("invalid angle `{s}` (expected e.g. `23deg` or `0.4rad`)"))
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct AngleVisitor;

        impl Visitor<'_> for AngleVisitor {
            type Value = Angle;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or a string such as \"23deg\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                Ok(Angle(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(AngleVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ManeuverKind {
    /// Constant steering; negative angles turn to port.
    Turning { delta: Angle },
    /// Heading-triggered switching between `±delta_max`.
    Zigzag { delta_max: Angle, psi_switch: Angle },
    /// Piecewise-constant steering drawn uniformly from `±amplitude`. With
    /// `n_spread > 0` each segment also draws its impeller speed from
    /// `n_cmd·[1 − n_spread, 1]`.
    Random {
        hold: f64,
        amplitude: Angle,
        seed: u64,
        #[serde(default)]
        n_spread: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverSpec {
    pub kind: ManeuverKind,
    /// Impeller speed held throughout (rpm).
    pub n_cmd: f64,
    /// Logged duration (s).
    pub duration: f64,
    /// Unlogged straight run at `n_cmd` before the maneuver (s); zero starts
    /// from rest.
    #[serde(default)]
    pub approach: f64,
    #[serde(default)]
    pub initial_heading: Angle,
}

impl ManeuverSpec {
    pub fn validate(&self, delta_max: f64) -> Result<()> {
        let too_big = |a: Angle| a.0.abs() > delta_max + 1e-12;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Config(format!("maneuver duration must be positive, got {}", self.duration)));
        }
        if !(self.n_cmd >= 0.0 && self.n_cmd.is_finite()) {
            return Err(Error::Config(format!("maneuver n_cmd must be >= 0, got {}", self.n_cmd)));
        }
        if !(self.approach >= 0.0 && self.approach.is_finite()) {
            return Err(Error::Config("maneuver approach must be >= 0".into()));
        }
        match self.kind {
            ManeuverKind::Turning { delta } if too_big(delta) => Err(Error::Config(format!(
                "turning delta {:.2} deg exceeds steering limit",
                delta.degrees()
            ))),
            ManeuverKind::Zigzag { delta_max: d, psi_switch } => {
                if too_big(d) || !(d.0 > 0.0) {
                    return Err(Error::Config("zigzag delta_max must lie in (0, steering limit]".into()));
                }
                if !(psi_switch.0 > 0.0) {
                    return Err(Error::Config("zigzag psi_switch must be positive".into()));
                }
                Ok(())
            }
            ManeuverKind::Random {
                hold,
                amplitude,
                n_spread,
                ..
            } => {
                if !(0.0..1.0).contains(&n_spread) {
                    return Err(Error::Config("random n_spread must lie in [0, 1)".into()));
                }
                if too_big(amplitude) || !(amplitude.0 >= 0.0) {
                    return Err(Error::Config("random amplitude must lie in [0, steering limit]".into()));
                }
                if !(hold > 0.0) {
                    return Err(Error::Config("random hold interval must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Zigzag switching law. Keeps the current command until the heading
/// deviation crosses the threshold on the side the rudder is driving toward.
pub fn zigzag_controller(
    psi: f64,
    psi_ref: f64,
    current_delta: f64,
    delta_max: f64,
    psi_switch: f64,
    n: f64,
) -> ControlInput {
    let dev = psi - psi_ref;
    let delta = if current_delta > 0.0 && dev >= psi_switch {
        -delta_max
    } else if current_delta == 0.0 || (current_delta < 0.0 && dev <= -psi_switch) {
        delta_max
    } else {
        current_delta
    };
    ControlInput::new(delta, n)
}

/// Piecewise-constant steering with segments of `hold` seconds; segment
/// boundaries fall on multiples of the hold interval. Impeller speed is
/// `n` throughout unless `n_spread > 0`.
pub fn random_steering_sequence(
    hold: f64,
    amplitude: f64,
    seed: u64,
    n: f64,
    n_spread: f64,
    dt: f64,
    steps: usize,
) -> Vec<ControlInput> {
    let per_segment = ((hold / dt).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut delta, mut speed) = (0.0, n);
    (0..steps)
        .map(|k| {
            if k % per_segment == 0 {
                delta = if amplitude > 0.0 {
                    rng.random_range(-amplitude..=amplitude)
                } else {
                    0.0
                };
                if n_spread > 0.0 {
                    speed = n * (1.0 - n_spread * rng.random::<f64>());
                }
            }
            ControlInput::new(delta, speed)
        })
        .collect()
}

/// Source of the control applied over step `k`.
pub trait ControlLaw {
    fn control(&mut self, k: usize, psi: f64) -> ControlInput;
}

/// Replays a recorded control sequence; holds the last entry past its end.
pub struct Replay<'a>(pub &'a [ControlInput]);

impl ControlLaw for Replay<'_> {
    fn control(&mut self, k: usize, _psi: f64) -> ControlInput {
        self.0
            .get(k)
            .or(self.0.last())
            .copied()
            .unwrap_or_default()
    }
}

/// Closed-loop controller for a [`ManeuverSpec`].
pub struct ManeuverController {
    spec: ManeuverSpec,
    psi_ref: f64,
    current: f64,
    sequence: Vec<ControlInput>,
}

impl ManeuverController {
    pub fn new(spec: &ManeuverSpec, psi_ref: f64, dt: f64, steps: usize) -> Self {
        let sequence = match spec.kind {
            ManeuverKind::Random {
                hold,
                amplitude,
                seed,
                n_spread,
            } => random_steering_sequence(hold, amplitude.0, seed, spec.n_cmd, n_spread, dt, steps + 1),
            _ => Vec::new(),
        };
        Self {
            spec: *spec,
            psi_ref,
            current: 0.0,
            sequence,
        }
    }
}

impl ControlLaw for ManeuverController {
    fn control(&mut self, k: usize, psi: f64) -> ControlInput {
        let n = self.spec.n_cmd;
        match self.spec.kind {
            ManeuverKind::Turning { delta } => ControlInput::new(delta.0, n),
            ManeuverKind::Zigzag {
                delta_max,
                psi_switch,
            } => {
                let c = zigzag_controller(psi, self.psi_ref, self.current, delta_max.0, psi_switch.0, n);
                self.current = c.delta;
                c
            }
            ManeuverKind::Random { .. } => Replay(&self.sequence).control(k, psi),
        }
    }
}
