//! Objective perturbation for ℓ2-regularized logistic regression.
//!
//! A random linear term `(1/n) bᵀw` is added to the training objective, with
//! `‖b‖ ~ Gamma(d, 2/ε')` and a uniformly random direction. `ε'` is what
//! remains of ε after paying for the loss curvature `c = 1/4`:
//!
//! ```text
//! ε' = ε − 2 ln(1 + c / (n λ))
//! ```
//!
//! When that is not positive the regularization is raised by
//! `Δ = c / (n (e^{ε/4} − 1)) − λ` and `ε' = ε / 2`. Rows must satisfy
//! `‖x‖₂ ≤ 1`. Rows that do not are taken to be [0, 1]-normalized and mapped
//! through the fixed transform `x' = (2/√d)(x − 1/2)`, which bounds the norm
//! without looking at the data; centring keeps the unregularized bias from
//! fighting the weights during descent. The returned model is mapped back to
//! the original features.

use ndarray::{Array1, ArrayView2};
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;

use crate::mechanisms::{PrivacyBudget, RngState};
use crate::model::{train_perturbed, LogisticModel, Perturbation, TrainConfig};
use crate::{Error, Result};

/// Curvature bound of the logistic loss.
pub const LOGISTIC_CURVATURE: f64 = 0.25;

/// Details of the noise drawn for one objective-perturbed model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveNoise {
    pub epsilon_prime: f64,
    pub extra_l2: f64,
    pub b_norm: f64,
    /// Affine map `x' = feature_scale · (x − feature_shift)` applied before
    /// training.
    pub feature_scale: f64,
    pub feature_shift: f64,
}

/// `ε − 2 ln(1 + c/(nλ))` with `c = 1/4`.
pub fn perturbed_epsilon(epsilon: f64, n: usize, lambda: f64) -> f64 {
    epsilon - 2.0 * (LOGISTIC_CURVATURE / (n as f64 * lambda)).ln_1p()
}

/// Effective ε' and extra ℓ2 weight Δ (0 unless the augmentation branch is
/// taken).
pub fn privacy_split(epsilon: f64, n: usize, lambda: f64) -> (f64, f64) {
    let eps_prime = perturbed_epsilon(epsilon, n, lambda);
    if eps_prime > 0.0 {
        (eps_prime, 0.0)
    } else {
        let delta = LOGISTIC_CURVATURE / (n as f64 * (epsilon / 4.0).exp_m1()) - lambda;
        (epsilon / 2.0, delta.max(0.0))
    }
}

pub fn objective_perturb_train(
    features: ArrayView2<f64>,
    labels: &[u8],
    budget: PrivacyBudget,
    config: &TrainConfig,
    rng: &mut RngState,
) -> Result<(LogisticModel, ObjectiveNoise)> {
    let (n, d) = features.dim();
    if n == 0 {
        return Err(Error::Empty("objective perturbation needs at least one row".into()));
    }
    if d == 0 {
        return Err(Error::invalid("features", "objective perturbation needs at least one column"));
    }
    if config.lambda.is_nan() || config.lambda <= 0.0 {
        return Err(Error::invalid("lambda", "objective perturbation needs lambda > 0"));
    }
    if !budget.is_pure() {
        return Err(Error::invalid("delta", "objective perturbation is pure ε-DP; delta must be 0"));
    }

    let max_norm = features
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0f64, f64::max);
    let (feature_scale, feature_shift) = if max_norm <= 1.0 {
        (1.0, 0.0)
    } else {
        if features.iter().any(|x| !(-1e-9..=1.0 + 1e-9).contains(x)) {
            return Err(Error::invalid(
                "features",
                format!("row norm {max_norm} exceeds 1 and cells leave [0, 1]; normalize features first"),
            ));
        }
        (2.0 / (d as f64).sqrt(), 0.5)
    };

    let (epsilon_prime, extra_l2) = privacy_split(budget.epsilon(), n, config.lambda);
    let b_norm = Gamma::new(d as f64, 2.0 / epsilon_prime)
        .map_err(|e| Error::invalid("epsilon", e.to_string()))?
        .sample(rng);
    let direction = random_unit_vector(d, rng);
    let linear = direction * b_norm;

    let scaled = (&features - feature_shift) * feature_scale;
    let perturbation = Perturbation {
        linear: Some(linear),
        extra_l2,
    };
    let mut model = train_perturbed(scaled.view(), labels, config, &perturbation)?;
    model.undo_affine(feature_scale, feature_shift);
    Ok((
        model,
        ObjectiveNoise {
            epsilon_prime,
            extra_l2,
            b_norm,
            feature_scale,
            feature_shift,
        },
    ))
}

fn random_unit_vector(d: usize, rng: &mut RngState) -> Array1<f64> {
    loop {
        let v: Array1<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.dot(&v).sqrt();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn epsilon_prime_example() {
        // c/(nλ) = 0.25/(10000 · 1e-4) = 0.25
        let e = perturbed_epsilon(1.0, 10_000, 1e-4);
        assert!((e - (1.0 - 2.0 * 1.25f64.ln())).abs() < 1e-15);
        assert!((e - 0.5537).abs() < 1e-4);
    }

    #[test]
    fn augmentation_branch() {
        let (eps_prime, delta) = privacy_split(0.01, 100, 1e-4);
        assert_eq!(eps_prime, 0.005);
        assert!(delta > 0.0);
        let (eps_prime, delta) = privacy_split(10.0, 10_000, 1e-4);
        assert!(eps_prime > 0.0 && delta == 0.0);
    }

    #[test]
    fn unit_vector_has_unit_norm() {
        let mut rng = RngState::from_seed(3);
        for d in [1, 2, 7, 40] {
            let v = random_unit_vector(d, &mut rng);
            assert!((v.dot(&v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_epsilon_still_trains() {
        let x = array![[0.1, 0.9], [0.8, 0.2], [0.9, 0.1], [0.2, 0.7], [0.5, 0.5], [0.3, 0.6]];
        let y = [0, 1, 1, 0, 1, 0];
        let (model, noise) = objective_perturb_train(
            x.view(),
            &y,
            PrivacyBudget::pure(1e-3).unwrap(),
            &TrainConfig::default(),
            &mut RngState::from_seed(1),
        )
        .unwrap();
        assert!(noise.extra_l2 > 0.0);
        assert!(model.weights().iter().all(|w| w.is_finite()));
        assert!(model.final_objective().is_finite());
    }

    #[test]
    fn precondition_errors() {
        let x = array![[0.1, 0.9], [0.8, 0.2]];
        let y = [0, 1];
        let mut rng = RngState::from_seed(1);
        let pure = PrivacyBudget::pure(1.0).unwrap();
        let no_reg = TrainConfig { lambda: 0.0, ..TrainConfig::default() };
        assert!(objective_perturb_train(x.view(), &y, pure, &no_reg, &mut rng).is_err());
        let approx = PrivacyBudget::new(1.0, 1e-5).unwrap();
        assert!(objective_perturb_train(x.view(), &y, approx, &TrainConfig::default(), &mut rng).is_err());
        let empty = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(objective_perturb_train(empty.view(), &[], pure, &TrainConfig::default(), &mut rng).is_err());
        let wide = ndarray::Array2::<f64>::zeros((2, 0));
        assert!(objective_perturb_train(wide.view(), &y, pure, &TrainConfig::default(), &mut rng).is_err());
    }
}
