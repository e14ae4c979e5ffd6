//! Gaussian mechanism with the classical calibration
//! `σ = (S / ε) · sqrt(2 · ln(1.25 / δ))` for L2 sensitivity `S`.

use rand_distr::{Distribution, StandardNormal};

use super::{Norm, PrivacyBudget, RngState, Sensitivity};
use crate::{Error, Result};

pub fn gaussian_sigma(sensitivity: Sensitivity, budget: PrivacyBudget) -> Result<f64> {
    if sensitivity.norm() != Norm::L2 {
        return Err(Error::invalid("sensitivity", "Gaussian calibration needs L2 sensitivity"));
    }
    if sensitivity.value() <= 0.0 {
        return Err(Error::invalid("sensitivity", "must be positive for noise calibration"));
    }
    if budget.is_pure() {
        return Err(Error::invalid("delta", "Gaussian mechanism requires delta > 0"));
    }
    let delta = budget.delta();
    Ok(sensitivity.value() / budget.epsilon() * (2.0 * (1.25 / delta).ln()).sqrt())
}

pub fn sample_gaussian(sigma: f64, rng: &mut RngState) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive and finite, got {sigma}")));
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(sigma * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma(s: f64, eps: f64, delta: f64) -> f64 {
        gaussian_sigma(Sensitivity::l2(s).unwrap(), PrivacyBudget::new(eps, delta).unwrap()).unwrap()
    }

    #[test]
    fn sigma_examples() {
        // sqrt(2 ln 125000) = 4.844805...
        let base = sigma(1.0, 1.0, 1e-5);
        assert!((base - 4.8448).abs() < 1e-3, "{base}");
        assert_eq!(sigma(2.0, 1.0, 1e-5), 2.0 * base);
        assert!((sigma(1.0, 100.0, 1e-5) - 0.048448).abs() < 1e-5);
    }

    #[test]
    fn sigma_homogeneity() {
        let base = sigma(1.0, 1.0, 1e-5);
        assert_eq!(sigma(2.0, 1.0, 1e-5), 2.0 * base);
        assert_eq!(sigma(0.5, 1.0, 1e-5), 0.5 * base);
        assert_eq!(sigma(1.0, 2.0, 1e-5), 0.5 * base);
        assert_eq!(sigma(1.0, 0.5, 1e-5), 2.0 * base);
    }

    #[test]
    fn sigma_errors() {
        let s = Sensitivity::l2(1.0).unwrap();
        assert!(gaussian_sigma(s, PrivacyBudget::pure(1.0).unwrap()).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        let b = PrivacyBudget::new(1.0, 1e-5).unwrap();
        assert!(gaussian_sigma(Sensitivity::l1(1.0).unwrap(), b).is_err());
        assert!(gaussian_sigma(Sensitivity::l2(0.0).unwrap(), b).is_err());
    }

    #[test]
    fn sample_spread_matches_sigma() {
        let mut rng = RngState::from_seed(2);
        let n = 50_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_gaussian(3.0, &mut rng).unwrap()).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var.sqrt() - 3.0).abs() < 0.05);
        assert!(sample_gaussian(0.0, &mut rng).is_err());
    }
}
