//! Age of Information (AoI) and monitor state-error analysis for N sensors
//! sharing a zero-buffer exponential server while observing M Markov-modulated
//! processes.
//!
//! The crate is split along the analysis pipeline:
//!
//! - [`model`] holds the system description and derived rates,
//! - [`aoi`] evaluates closed-form average ages,
//! - [`error`] builds the per-process embedded chain and its error ratio,
//! - [`sim`] is a discrete-event simulator used as ground truth,
//! - [`opt`] solves the sensing-probability allocation problem.

pub mod aoi;
pub mod error;
mod extended;
mod linalg;
pub mod model;
pub mod opt;
pub mod sim;

pub use extended::Extended;
pub use model::{DerivedRates, ModelError, ProcessModel, StationaryDistribution, SystemConfig};

/// Crate-wide error, used by front ends that chain several modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    ErrorRatio(#[from] error::ErrorRatioError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Opt(#[from] opt::OptError),
}
