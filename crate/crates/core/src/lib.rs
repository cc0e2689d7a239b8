//! Grey-box maneuvering models for a water-jet surface vessel.
//!
//! A simplified 3-DOF physical model ([`model`]) is identified from trial
//! logs by ridge regression ([`ident`]); a small feed-forward network
//! ([`net`]) learns the residual between the physical one-step prediction
//! and the measured next state, using the heading's cosine and sine as extra
//! features. [`rollout`] iterates any of the models over long horizons and
//! scores them; [`synth`] produces disturbed "truth" trials to train and
//! test against; [`cli`] wires it all into reproducible runs.

pub mod cli;
pub mod config;
pub mod error;
pub mod ident;
pub mod io;
mod linalg;
pub mod log;
pub mod maneuver;
pub mod model;
pub mod net;
pub mod ode;
pub mod pipeline;
pub mod rollout;
pub mod synth;

pub use error::{Error, Result};
