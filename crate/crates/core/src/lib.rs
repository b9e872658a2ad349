//! Randomized systematic-scan Glauber dynamics for the Curie-Weiss
//! (complete-graph) Ising model.
//!
//! - [`model`]: parameters, configurations and the scan step.
//! - [`couplings`]: grand/monotone coupling, rematching, two-coordinate coupling.
//! - [`kernels`]: exact lumped and full-configuration kernels, stationary laws, TV profiles.
//! - [`estimators`]: fast magnetization simulation, TV bounds, hitting times, fits.
//! - [`checks`]: exact-kernel statistics behind the property suite; [`bands`] holds its tolerances.
//! - [`harness`]: experiment scenarios and result files.

pub mod bands;
pub mod checks;
pub mod couplings;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod kernels;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use model::{Mode, ModelParams, SpinConfig};
pub use rng::RngStream;
