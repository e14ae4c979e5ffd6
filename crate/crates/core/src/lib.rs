//! Differentially private learning-analytics pipelines.
//!
//! Three places to inject noise around an ℓ2-regularized logistic
//! regression classifier (input perturbation, objective perturbation, and
//! PATE-style noisy voting), each audited with a shadow-model membership
//! inference attack. The [`experiment`] module sweeps the privacy budget and
//! reports Utility Loss, Privacy Leakage and True Revealed Records.

pub mod audit;
pub mod data;
pub mod dp_pipelines;
mod error;
pub mod experiment;
pub mod mechanisms;
pub mod model;

pub use error::{Error, Result};
