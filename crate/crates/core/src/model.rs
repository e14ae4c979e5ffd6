//! ℓ2-regularized binary logistic regression trained by full-batch gradient
//! descent with step halving.
//!
//! The objective, with labels mapped to `y ∈ {-1, +1}`, is
//!
//! ```text
//! J(w, b) = (1/n) Σ log(1 + exp(-y_i (w·x_i + b))) + (λ/2) ‖w‖²
//! ```
//!
//! The bias is not regularized. Objective perturbation reuses the same
//! trainer with an extra linear term `(1/n) rᵀw` and extra ℓ2 weight.

use std::path::Path;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Halvings tried per epoch before giving up on finding a descent step.
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda() -> f64 {
    1e-4
}

fn default_epochs() -> usize {
    100
}

fn default_learning_rate() -> f64 {
    0.5
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", format!("must be non-negative, got {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", format!("must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    weights: Array1<f64>,
    bias: f64,
    config: TrainConfig,
    final_objective: f64,
}

/// JSON form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelDocument {
    weights: Vec<f64>,
    bias: f64,
    lambda: f64,
    epochs: usize,
    seed: u64,
    #[serde(default = "default_learning_rate")]
    learning_rate: f64,
    #[serde(default)]
    final_objective: f64,
}

impl LogisticModel {
    /// Model with the given parameters, e.g. for hand-built test fixtures.
    pub fn from_parameters(weights: Vec<f64>, bias: f64) -> Self {
        Self {
            weights: Array1::from(weights),
            bias,
            config: TrainConfig::default(),
            final_objective: 0.0,
        }
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn final_objective(&self) -> f64 {
        self.final_objective
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// The same model with every weight and the bias negated.
    pub fn negated(&self) -> Self {
        Self {
            weights: -&self.weights,
            bias: -self.bias,
            ..self.clone()
        }
    }

    /// Maps a model trained on `x' = scale · (x − shift)` back to `x`.
    pub(crate) fn undo_affine(&mut self, scale: f64, shift: f64) {
        self.weights *= scale;
        self.bias -= shift * self.weights.sum();
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            weights: self.weights.to_vec(),
            bias: self.bias,
            lambda: self.config.lambda,
            epochs: self.config.epochs,
            seed: self.config.seed,
            learning_rate: self.config.learning_rate,
            final_objective: self.final_objective,
        };
        serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        Ok(Self {
            weights: Array1::from(doc.weights),
            bias: doc.bias,
            config: TrainConfig {
                lambda: doc.lambda,
                epochs: doc.epochs,
                learning_rate: doc.learning_rate,
                seed: doc.seed,
            },
            final_objective: doc.final_objective,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn score(&self, x: ArrayView1<f64>) -> f64 {
        self.weights.dot(&x) + self.bias
    }
}

/// Extra terms added to the base objective.
#[derive(Debug, Clone, Default)]
pub(crate) struct Perturbation {
    /// Vector `r` of the linear term `(1/n) rᵀw`.
    pub linear: Option<Array1<f64>>,
    /// Added to λ.
    pub extra_l2: f64,
}

/// Objective value and gradient at `(weights, bias)`.
pub fn objective_and_gradient(
    features: ArrayView2<f64>,
    labels: &[u8],
    weights: ArrayView1<f64>,
    bias: f64,
    lambda: f64,
) -> (f64, Array1<f64>, f64) {
    evaluate(features, labels, weights, bias, lambda, None, true)
}

fn evaluate(
    features: ArrayView2<f64>,
    labels: &[u8],
    weights: ArrayView1<f64>,
    bias: f64,
    lambda: f64,
    linear: Option<&Array1<f64>>,
    with_gradient: bool,
) -> (f64, Array1<f64>, f64) {
    let n = labels.len() as f64;
    let scores = features.dot(&weights) + bias;
    let mut loss = 0.0;
    // coefficient of x_i in the gradient of the mean loss
    let mut coef = Array1::<f64>::zeros(labels.len());
    for (i, (&s, &y)) in scores.iter().zip(labels).enumerate() {
        let y = if y == 1 { 1.0 } else { -1.0 };
        let margin = y * s;
        loss += softplus(-margin);
        coef[i] = -y * sigmoid(-margin) / n;
    }
    let mut value = loss / n + 0.5 * lambda * weights.dot(&weights);
    if let Some(r) = linear {
        value += r.dot(&weights) / n;
    }
    if !with_gradient {
        return (value, Array1::zeros(0), 0.0);
    }
    let mut grad_w = features.t().dot(&coef) + lambda * &weights;
    if let Some(r) = linear {
        grad_w.scaled_add(1.0 / n, r);
    }
    let grad_b = coef.sum();
    (value, grad_w, grad_b)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn train(features: ArrayView2<f64>, labels: &[u8], config: &TrainConfig) -> Result<LogisticModel> {
    train_perturbed(features, labels, config, &Perturbation::default())
}

pub(crate) fn train_perturbed(
    features: ArrayView2<f64>,
    labels: &[u8],
    config: &TrainConfig,
    perturbation: &Perturbation,
) -> Result<LogisticModel> {
    config.validate()?;
    let (n, d) = features.dim();
    if n != labels.len() {
        return Err(Error::invalid("labels", format!("{} labels for {n} rows", labels.len())));
    }
    if n < 2 {
        return Err(Error::Degenerate(format!("training needs at least 2 rows, got {n}")));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid("labels", "must be 0 or 1"));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("features", "contain non-finite values"));
    }
    if let Some(r) = &perturbation.linear {
        if r.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: r.len() });
        }
    }

    let lambda = config.lambda + perturbation.extra_l2;
    let linear = perturbation.linear.as_ref();
    let mut weights = Array1::<f64>::zeros(d);
    let mut bias = 0.0;
    let (mut value, mut grad_w, mut grad_b) = evaluate(features, labels, weights.view(), bias, lambda, linear, true);

    // The first epoch starts from the base step; later ones first try twice
    // the last accepted step, so the step can grow where curvature is low.
    let mut last_step = 0.5 * config.learning_rate;
    for _ in 0..config.epochs {
        let mut step = 2.0 * last_step;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let candidate_w = &weights - &(step * &grad_w);
            let candidate_b = bias - step * grad_b;
            let (candidate, _, _) = evaluate(features, labels, candidate_w.view(), candidate_b, lambda, linear, false);
            if candidate <= value {
                weights = candidate_w;
                bias = candidate_b;
                last_step = step;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        (value, grad_w, grad_b) = evaluate(features, labels, weights.view(), bias, lambda, linear, true);
    }

    if !value.is_finite() {
        return Err(Error::Degenerate("training diverged to a non-finite objective".into()));
    }
    Ok(LogisticModel {
        weights,
        bias,
        config: config.clone(),
        final_objective: value,
    })
}

pub fn predict_proba(model: &LogisticModel, features: ArrayView2<f64>) -> Result<Vec<f64>> {
    check_dim(model, features)?;
    Ok(features.rows().into_iter().map(|x| sigmoid(model.score(x))).collect())
}

/// Probability of class 1 for a single row.
pub fn predict_proba_row(model: &LogisticModel, row: ArrayView1<f64>) -> Result<f64> {
    if row.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: row.len() });
    }
    Ok(sigmoid(model.score(row)))
}

/// Label 1 iff the probability reaches `threshold` (ties go to 1).
pub fn predict(model: &LogisticModel, features: ArrayView2<f64>, threshold: f64) -> Result<Vec<u8>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("threshold", format!("must lie strictly between 0 and 1, got {threshold}")));
    }
    Ok(predict_proba(model, features)?
        .into_iter()
        .map(|p| u8::from(p >= threshold))
        .collect())
}

pub fn accuracy(predicted: &[u8], actual: &[u8]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::invalid(
            "predictions",
            format!("{} predictions for {} labels", predicted.len(), actual.len()),
        ));
    }
    if predicted.is_empty() {
        return Err(Error::Empty("accuracy of zero predictions".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / predicted.len() as f64)
}

fn check_dim(model: &LogisticModel, features: ArrayView2<f64>) -> Result<()> {
    if features.ncols() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: features.ncols() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn separable_pair() {
        let x = array![[0.0], [1.0]];
        let y = [0, 1];
        let m = train(x.view(), &y, &TrainConfig::default()).unwrap();
        let pred = predict(&m, x.view(), 0.5).unwrap();
        assert_eq!(accuracy(&pred, &y).unwrap(), 1.0);
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [0.9, 0.2], [0.1, 0.7]];
        let y = [0, 1, 1, 0];
        let config = TrainConfig { lambda: 1e6, ..TrainConfig::default() };
        let m = train(x.view(), &y, &config).unwrap();
        assert!(m.weights().dot(&m.weights()).sqrt() < 1e-2);
    }

    #[test]
    fn training_errors() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(train(x.view(), &[1, 1], &TrainConfig::default()), Err(Error::Degenerate(_))));
        let bad = array![[0.0], [f64::NAN]];
        assert!(train(bad.view(), &[0, 1], &TrainConfig::default()).is_err());
        let one = array![[0.0]];
        assert!(train(one.view(), &[0], &TrainConfig::default()).is_err());
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train(x.view(), &[0, 1], &cfg).is_err());
    }

    #[test]
    fn zero_model_is_half() {
        let m = LogisticModel::from_parameters(vec![0.0; 3], 0.0);
        let x = Array2::from_elem((4, 3), 0.7);
        assert!(predict_proba(&m, x.view()).unwrap().iter().all(|&p| p == 0.5));
        assert_eq!(predict(&m, x.view(), 0.5).unwrap(), vec![1; 4]);
    }

    #[test]
    fn saturated_bias() {
        let m = LogisticModel::from_parameters(vec![0.0], 50.0);
        let p = predict_proba(&m, array![[3.0]].view()).unwrap()[0];
        assert!(p > 1.0 - 1e-9);
    }

    #[test]
    fn negated_model_is_complement() {
        let m = LogisticModel::from_parameters(vec![0.3, -1.2], 0.4);
        let x = array![[0.1, 0.9], [2.0, -1.0], [0.0, 0.0]];
        let p = predict_proba(&m, x.view()).unwrap();
        let q = predict_proba(&m.negated(), x.view()).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn threshold_rule() {
        // p = sigmoid(ln 1.5) = 0.6
        let m = LogisticModel::from_parameters(vec![0.0], 1.5f64.ln());
        let x = array![[1.0]];
        assert_eq!(predict(&m, x.view(), 0.9).unwrap(), vec![0]);
        assert_eq!(predict(&m, x.view(), 0.5).unwrap(), vec![1]);
        assert!(predict(&m, x.view(), 1.0).is_err());
        assert!(predict(&m, x.view(), 0.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let m = LogisticModel::from_parameters(vec![0.0; 2], 0.0);
        assert!(matches!(
            predict_proba(&m, array![[1.0, 2.0, 3.0]].view()),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[0, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &[1, 1, 1, 1]).unwrap(), 0.5);
        assert!(accuracy(&[1], &[1, 0]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = array![[0.0, 0.2], [1.0, 0.4], [0.3, 0.9], [0.8, 0.1]];
        let m = train(x.view(), &[0, 1, 0, 1], &TrainConfig::default()).unwrap();
        let back = LogisticModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let doc: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        for key in ["weights", "bias", "lambda", "epochs", "seed"] {
            assert!(doc.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
