//! The three insertion points for noise: on the training inputs
//! (Gaussian), inside the training objective (Laplace-style ERM noise), and
//! on the released predictions (noisy teacher votes).

mod input;
mod objective;
mod pate;

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

pub use input::{input_perturb, input_sigma};
pub use objective::{
    objective_perturb_train, perturbed_epsilon, privacy_split, ObjectiveNoise, LOGISTIC_CURVATURE,
};
pub use pate::{
    noisy_argmax, noisy_vote_fraction, pate_predict, pate_train, vote_noise_scale, TeacherEnsemble,
    DEFAULT_NUM_TEACHERS,
};

use crate::data::{Dataset, FourWaySplit};
use crate::mechanisms::{NoiseKind, PrivacyBudget, RngState};
use crate::model::{predict, predict_proba_row, train, LogisticModel, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpMethod {
    InputPerturbation,
    ObjectivePerturbation,
    PredictionPerturbation,
}

impl DpMethod {
    pub const ALL: [DpMethod; 3] = [
        DpMethod::InputPerturbation,
        DpMethod::ObjectivePerturbation,
        DpMethod::PredictionPerturbation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DpMethod::InputPerturbation => "input_perturbation",
            DpMethod::ObjectivePerturbation => "objective_perturbation",
            DpMethod::PredictionPerturbation => "prediction_perturbation",
        }
    }

    /// Gaussian for input perturbation, Laplace for the other two.
    pub fn noise_kind(self) -> NoiseKind {
        match self {
            DpMethod::InputPerturbation => NoiseKind::Gaussian,
            DpMethod::ObjectivePerturbation | DpMethod::PredictionPerturbation => NoiseKind::Laplace,
        }
    }

    /// Budget for this method at `epsilon`: δ is kept only for the Gaussian
    /// mechanism.
    pub fn budget(self, epsilon: f64, delta: f64) -> Result<PrivacyBudget> {
        match self.noise_kind() {
            NoiseKind::Gaussian => PrivacyBudget::new(epsilon, delta),
            NoiseKind::Laplace => PrivacyBudget::pure(epsilon),
        }
    }
}

impl fmt::Display for DpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DpMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DpMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid("method", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Model(LogisticModel),
    Ensemble(TeacherEnsemble),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ArtifactMetadata {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra_l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_teachers: Option<usize>,
    /// Noisy-vote queries answered by the ensemble so far.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries: Option<usize>,
    /// ε summed over all answered queries (linear composition); reported,
    /// not enforced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composed_epsilon: Option<f64>,
}

/// Output of one private pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateModelArtifact {
    method: DpMethod,
    budget: PrivacyBudget,
    payload: Payload,
    noise_kind: NoiseKind,
    metadata: ArtifactMetadata,
}

impl PrivateModelArtifact {
    pub fn method(&self) -> DpMethod {
        self.method
    }

    pub fn budget(&self) -> PrivacyBudget {
        self.budget
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    pub fn metadata(&self) -> &ArtifactMetadata {
        &self.metadata
    }

    /// Released labels for `features`. The ensemble draws fresh vote noise
    /// and each row it answers is counted toward the composed ε.
    pub fn predict(&mut self, features: ArrayView2<f64>, rng: &mut RngState) -> Result<Vec<u8>> {
        match &self.payload {
            Payload::Model(m) => predict(m, features, 0.5),
            Payload::Ensemble(e) => {
                let labels = pate_predict(e, features, self.budget, rng)?;
                self.count_queries(features.nrows());
                Ok(labels)
            }
        }
    }

    /// Released probability of class 1 for one row: the model probability,
    /// or the noisy vote fraction for an ensemble.
    pub fn release_probability(&mut self, row: ArrayView1<f64>, rng: &mut RngState) -> Result<f64> {
        match &self.payload {
            Payload::Model(m) => predict_proba_row(m, row),
            Payload::Ensemble(e) => {
                let p = noisy_vote_fraction(e, row, self.budget, rng)?;
                self.count_queries(1);
                Ok(p)
            }
        }
    }

    fn count_queries(&mut self, k: usize) {
        let q = self.metadata.queries.unwrap_or(0) + k;
        self.metadata.queries = Some(q);
        self.metadata.composed_epsilon = Some(q as f64 * self.budget.epsilon());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    pub num_teachers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            num_teachers: DEFAULT_NUM_TEACHERS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub artifact: PrivateModelArtifact,
    /// Released labels on victim_train rows.
    pub train_predictions: Vec<u8>,
    /// Released labels on victim_test rows.
    pub test_predictions: Vec<u8>,
}

fn check_budget(method: DpMethod, budget: PrivacyBudget) -> Result<()> {
    match (method.noise_kind(), budget.is_pure()) {
        (NoiseKind::Gaussian, true) => Err(Error::invalid(
            "delta",
            "input perturbation uses the Gaussian mechanism and needs delta > 0",
        )),
        (NoiseKind::Laplace, false) => Err(Error::invalid(
            "delta",
            format!("{method} uses the Laplace mechanism and needs delta = 0"),
        )),
        _ => Ok(()),
    }
}

/// Trains a private artifact for `method` on the given rows.
pub fn build_artifact(
    method: DpMethod,
    train_x: ArrayView2<f64>,
    train_y: &[u8],
    budget: PrivacyBudget,
    config: &PipelineConfig,
    rng: &RngState,
) -> Result<PrivateModelArtifact> {
    check_budget(method, budget)?;
    let mut metadata = ArtifactMetadata {
        seed: rng.seed(),
        ..ArtifactMetadata::default()
    };
    let payload = match method {
        DpMethod::InputPerturbation => {
            metadata.sigma = Some(input_sigma(budget)?);
            let noisy = input_perturb(train_x, budget, &mut rng.child("input-noise"))?;
            Payload::Model(train(noisy.view(), train_y, &config.train)?)
        }
        DpMethod::ObjectivePerturbation => {
            let (model, noise) =
                objective_perturb_train(train_x, train_y, budget, &config.train, &mut rng.child("objective-noise"))?;
            metadata.b_norm = Some(noise.b_norm);
            metadata.epsilon_prime = Some(noise.epsilon_prime);
            metadata.extra_l2 = Some(noise.extra_l2);
            Payload::Model(model)
        }
        DpMethod::PredictionPerturbation => {
            let ensemble = pate_train(train_x, train_y, config.num_teachers, &config.train, &mut rng.child("partition"))?;
            metadata.num_teachers = Some(ensemble.num_teachers());
            metadata.queries = Some(0);
            metadata.composed_epsilon = Some(0.0);
            Payload::Ensemble(ensemble)
        }
    };
    Ok(PrivateModelArtifact {
        method,
        budget,
        payload,
        noise_kind: method.noise_kind(),
        metadata,
    })
}

/// Trains the private artifact for `method` on victim_train and releases
/// labels for both victim parts.
pub fn run_pipeline(
    method: DpMethod,
    dataset: &Dataset,
    split: &FourWaySplit,
    budget: PrivacyBudget,
    config: &PipelineConfig,
    rng: &RngState,
) -> Result<PipelineOutput> {
    let (train_x, train_y) = dataset.subset(&split.victim_train);
    let (test_x, _) = dataset.subset(&split.victim_test);
    let mut artifact = build_artifact(method, train_x.view(), &train_y, budget, config, rng)?;
    let train_predictions = artifact.predict(train_x.view(), &mut rng.child("release-train"))?;
    let test_predictions = artifact.predict(test_x.view(), &mut rng.child("release-test"))?;
    Ok(PipelineOutput {
        artifact,
        train_predictions,
        test_predictions,
    })
}
