//! Laplace mechanism.
//!
//! For a query with L1 sensitivity `S`, adding `Lap(0, b)` noise with
//! `b = S / ε` gives ε-DP. Samples are drawn by inverse CDF:
//!
//! ```text
//! u ~ U(-1/2, 1/2)
//! x = -b · sign(u) · ln(1 - 2|u|)
//! ```

use super::{Norm, PrivacyBudget, RngState, Sensitivity};
use crate::{Error, Result};

pub fn laplace_scale(sensitivity: Sensitivity, budget: PrivacyBudget) -> Result<f64> {
    if sensitivity.norm() != Norm::L1 {
        return Err(Error::invalid("sensitivity", "Laplace calibration needs L1 sensitivity"));
    }
    if sensitivity.value() <= 0.0 {
        return Err(Error::invalid("sensitivity", "must be positive for noise calibration"));
    }
    if !budget.is_pure() {
        return Err(Error::invalid("delta", "Laplace mechanism is pure ε-DP; delta must be 0"));
    }
    Ok(sensitivity.value() / budget.epsilon())
}

pub fn sample_laplace(scale: f64, rng: &mut RngState) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("scale", format!("must be positive and finite, got {scale}")));
    }
    Ok(scale * standard_laplace(rng))
}

/// One draw from Lap(0, 1).
pub(crate) fn standard_laplace(rng: &mut RngState) -> f64 {
    let u = rng.open_unit() - 0.5;
    -u.signum() * (-2.0 * u.abs()).ln_1p()
}
