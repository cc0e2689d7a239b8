//! The 10 Hz trial record shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlInput, MotionState, Pose};

/// Column order of the CSV representation.
pub const LOG_HEADER: [&str; 9] = ["t", "x", "y", "psi", "u", "v", "r", "delta", "n"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub delta: f64,
    pub n: f64,
}

impl LogRow {
    pub fn new(t: f64, pose: &Pose, state: &MotionState, control: &ControlInput) -> Self {
        Self {
            t,
            x: pose.x,
            y: pose.y,
            psi: pose.psi,
            u: state.u,
            v: state.v,
            r: state.r,
            delta: control.delta,
            n: control.n,
        }
    }

    pub fn state(&self) -> MotionState {
        MotionState::new(self.u, self.v, self.r)
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.psi)
    }

    /// Control applied from this sample to the next.
    pub fn control(&self) -> ControlInput {
        ControlInput::new(self.delta, self.n)
    }

    fn values(&self) -> [f64; 9] {
        [
            self.t, self.x, self.y, self.psi, self.u, self.v, self.r, self.delta, self.n,
        ]
    }
}

/// Uniformly sampled time series of pose, measured velocities and control.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub dt: f64,
    pub rows: Vec<LogRow>,
}

impl TrialLog {
    /// Builds a log and checks uniform sampling and finiteness.
    pub fn new(rows: Vec<LogRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: rows.len(),
            });
        }
        let dt = rows[1].t - rows[0].t;
        let log = Self { dt, rows };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::NonUniformSampling {
                row: 1,
                expected: self.dt,
                found: self.dt,
            });
        }
        let t0 = self.rows[0].t;
        for (i, row) in self.rows.iter().enumerate() {
            if !row.values().iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("trial log row"));
            }
            let expected = t0 + i as f64 * self.dt;
            if (row.t - expected).abs() > 1e-6 * self.dt.max(1.0) {
                return Err(Error::NonUniformSampling {
                    row: i,
                    expected: expected - if i > 0 { self.rows[i - 1].t } else { 0.0 },
                    found: row.t - if i > 0 { self.rows[i - 1].t } else { 0.0 },
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn states(&self) -> Vec<MotionState> {
        self.rows.iter().map(LogRow::state).collect()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.rows.iter().map(LogRow::pose).collect()
    }

    pub fn controls(&self) -> Vec<ControlInput> {
        self.rows.iter().map(LogRow::control).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}
