use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// δ used for Gaussian calibration when none is configured.
pub const DEFAULT_DELTA: f64 = 1e-5;

/// An (ε, δ) privacy budget. δ = 0 is pure ε-DP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive and finite, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::invalid("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    /// Pure ε-DP budget (δ = 0), as required by the Laplace mechanism.
    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

/// Maximum change of a query output when one record changes, measured in
/// the norm matching the mechanism (L1 for Laplace, L2 for Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    value: f64,
    norm: Norm,
}

impl Sensitivity {
    pub fn new(value: f64, norm: Norm) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::invalid("sensitivity", format!("must be non-negative and finite, got {value}")));
        }
        Ok(Self { value, norm })
    }

    pub fn l1(value: f64) -> Result<Self> {
        Self::new(value, Norm::L1)
    }

    pub fn l2(value: f64) -> Result<Self> {
        Self::new(value, Norm::L2)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Laplace,
    Gaussian,
}
