//! Fixed-step explicit integrators for the velocity ODE. Control is held
//! constant across a step.

use serde::{Deserialize, Serialize};

use crate::model::{ControlInput, MotionState, StateDeriv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Euler,
    Rk4,
}

impl Solver {
    pub fn step<F>(self, rhs: F, state: &MotionState, control: &ControlInput, dt: f64) -> MotionState
    where
        F: Fn(&MotionState, &ControlInput) -> StateDeriv,
    {
        match self {
            Solver::Euler => euler_step(rhs, state, control, dt),
            Solver::Rk4 => rk4_step(rhs, state, control, dt),
        }
    }
}

pub fn euler_step<F>(rhs: F, state: &MotionState, control: &ControlInput, dt: f64) -> MotionState
where
    F: Fn(&MotionState, &ControlInput) -> StateDeriv,
{
    if dt == 0.0 {
        return *state;
    }
    state.advanced(&rhs(state, control), dt)
}

pub fn rk4_step<F>(rhs: F, state: &MotionState, control: &ControlInput, dt: f64) -> MotionState
where
    F: Fn(&MotionState, &ControlInput) -> StateDeriv,
{
    if dt == 0.0 {
        return *state;
    }
    let k1 = rhs(state, control);
    let k2 = rhs(&state.advanced(&k1, 0.5 * dt), control);
    let k3 = rhs(&state.advanced(&k2, 0.5 * dt), control);
    let k4 = rhs(&state.advanced(&k3, dt), control);
    let blend = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * b + 2.0 * c + d) / 6.0;
    let slope = StateDeriv::new(
        blend(k1.du, k2.du, k3.du, k4.du),
        blend(k1.dv, k2.dv, k3.dv, k4.dv),
        blend(k1.dr, k2.dr, k3.dr, k4.dr),
    );
    state.advanced(&slope, dt)
}
