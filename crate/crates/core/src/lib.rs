//! Simulation and optimization of a leaky-coaxial-cable pinching-antenna
//! downlink whose slot apertures can be continuously adjusted.

pub mod analysis;
pub mod baselines;
pub mod channel;
pub mod dynamic_opt;
pub mod error;
pub mod harness;
pub mod kvfile;
pub mod metrics;
pub mod scenario;
pub mod static_opt;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
