use ndarray::{Array2, ArrayView2};

use crate::mechanisms::{gaussian_sigma, sample_gaussian, PrivacyBudget, RngState, Sensitivity};
use crate::{Error, Result};

const RANGE_SLACK: f64 = 1e-9;

/// Per-cell Gaussian noise for [0, 1]-normalized features.
///
/// Each cell has sensitivity 1, so σ is `gaussian_sigma(1, ε, δ)`. Noised
/// cells are not clipped back into range.
pub fn input_perturb(features: ArrayView2<f64>, budget: PrivacyBudget, rng: &mut RngState) -> Result<Array2<f64>> {
    if let Some(bad) = features.iter().find(|&&x| !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&x)) {
        return Err(Error::invalid("features", format!("input perturbation needs cells in [0, 1], found {bad}")));
    }
    let sigma = input_sigma(budget)?;
    let mut out = features.to_owned();
    for x in out.iter_mut() {
        *x += sample_gaussian(sigma, rng)?;
    }
    Ok(out)
}

pub fn input_sigma(budget: PrivacyBudget) -> Result<f64> {
    gaussian_sigma(Sensitivity::l2(1.0)?, budget)
}
