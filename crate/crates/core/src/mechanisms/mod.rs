//! ε-DP primitives: privacy budget, sensitivity, the Laplace and Gaussian
//! mechanisms, seeded random streams, and an empirical checker for the
//! neighbouring-dataset bound `Pr[M(D) ∈ S] ≤ e^ε · Pr[M(D') ∈ S]`.

mod budget;
mod dp_check;
mod gaussian;
mod laplace;
mod rng;

pub use budget::{NoiseKind, Norm, PrivacyBudget, Sensitivity, DEFAULT_DELTA};
pub use dp_check::{empirical_dp_check, DpCheckConfig, DpCheckReport};
pub use gaussian::{gaussian_sigma, sample_gaussian};
pub use laplace::{laplace_scale, sample_laplace};
pub use rng::RngState;
