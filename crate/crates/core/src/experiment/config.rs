use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{AttackConfig, DEFAULT_SIGNIFICANCE};
use crate::data::{
    load_csv, preprocess, synth_generate, Dataset, SynthParams, TabularSchema, DEFAULT_INNER_TRAIN_FRACTION,
};
use crate::dp_pipelines::{DpMethod, PipelineConfig, DEFAULT_NUM_TEACHERS};
use crate::mechanisms::DEFAULT_DELTA;
use crate::model::TrainConfig;
use crate::{Error, Result};

/// `data_path` value selecting the built-in generator.
pub const SYNTH_SOURCE: &str = "synth";

pub const DEFAULT_EPSILONS: [f64; 7] = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0];

/// Resolved experiment configuration, read from JSON. Omitted fields take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CSV path, or `"synth"` to use the generator in `synth`.
    pub data_path: String,
    #[serde(default)]
    pub schema_path: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthParams>,
    #[serde(default = "default_methods")]
    pub methods: Vec<DpMethod>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_num_teachers")]
    pub num_teachers: usize,
    #[serde(default = "default_inner_train_fraction")]
    pub inner_train_fraction: f64,
    #[serde(default)]
    pub train: TrainConfig,
    /// Level of the test deciding whether the attack acts.
    #[serde(default = "default_attack_significance")]
    pub attack_significance: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Fill the wall_time_seconds column of results.csv. Off by default so
    /// that results.csv is reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_methods() -> Vec<DpMethod> {
    DpMethod::ALL.to_vec()
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_seeds() -> Vec<u64> {
    (1..=5).collect()
}

fn default_num_teachers() -> usize {
    DEFAULT_NUM_TEACHERS
}

fn default_inner_train_fraction() -> f64 {
    DEFAULT_INNER_TRAIN_FRACTION
}

fn default_attack_significance() -> f64 {
    DEFAULT_SIGNIFICANCE
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("dp-la-out")
}

impl ExperimentConfig {
    /// Defaults on synthetic data from `synth`.
    pub fn synthetic(synth: SynthParams) -> Self {
        Self {
            data_path: SYNTH_SOURCE.into(),
            schema_path: None,
            synth: Some(synth),
            methods: default_methods(),
            epsilons: default_epsilons(),
            delta: default_delta(),
            seeds: default_seeds(),
            master_seed: 0,
            num_teachers: default_num_teachers(),
            inner_train_fraction: default_inner_train_fraction(),
            train: TrainConfig::default(),
            attack_significance: default_attack_significance(),
            output_dir: default_output_dir(),
            threads: None,
            record_wall_time: false,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. A relative `schema_path` or `data_path` is
    /// resolved against the config file's directory.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if config.data_path != SYNTH_SOURCE && Path::new(&config.data_path).is_relative() {
            config.data_path = base.join(&config.data_path).to_string_lossy().into_owned();
        }
        if let Some(schema) = config.schema_path.as_mut() {
            if schema.is_relative() {
                *schema = base.join(&*schema);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data_path == SYNTH_SOURCE {
            if self.synth.is_none() {
                return Err(Error::invalid("synth", "data_path is \"synth\" but no generator parameters were given"));
            }
        } else if self.schema_path.is_none() {
            return Err(Error::invalid("schema_path", "required when reading a CSV"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "must not be empty"));
        }
        let mut sorted = self.methods.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.methods.len() {
            return Err(Error::invalid("methods", "contains duplicates"));
        }
        if self.epsilons.is_empty() {
            return Err(Error::invalid("epsilons", "must not be empty"));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid("epsilons", "every epsilon must be positive and finite"));
        }
        if self.epsilons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("epsilons", "must be strictly increasing"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) && self.methods.contains(&DpMethod::InputPerturbation) {
            return Err(Error::invalid("delta", "input perturbation needs 0 < delta < 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds", "must not be empty"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::invalid("seeds", "contains duplicates"));
        }
        if self.num_teachers < 2 {
            return Err(Error::invalid("num_teachers", "must be at least 2"));
        }
        if !(self.inner_train_fraction > 0.0 && self.inner_train_fraction < 1.0) {
            return Err(Error::invalid("inner_train_fraction", "must lie strictly between 0 and 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads", "must be positive"));
        }
        self.attack_config().validate()
    }

    pub fn attack_config(&self) -> AttackConfig {
        AttackConfig {
            train: self.train.clone(),
            significance: self.attack_significance,
        }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            train: self.train.clone(),
            num_teachers: self.num_teachers,
        }
    }

    /// Loads and preprocesses the configured data.
    pub fn load_dataset(&self) -> Result<Dataset> {
        if self.data_path == SYNTH_SOURCE {
            let params = self.synth.as_ref().ok_or_else(|| Error::invalid("synth", "missing parameters"))?;
            let (table, schema) = synth_generate(params)?;
            preprocess(&table, &schema)
        } else {
            let schema_path = self
                .schema_path
                .as_ref()
                .ok_or_else(|| Error::invalid("schema_path", "required when reading a CSV"))?;
            let schema = TabularSchema::from_json_file(schema_path)?;
            let table = load_csv(&self.data_path, &schema)?;
            preprocess(&table, &schema)
        }
    }

    /// SHA-256 over the canonical JSON of every field that can influence
    /// results. Output location, thread count and timing are excluded.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            for key in ["output_dir", "threads", "record_wall_time"] {
                map.remove(key);
            }
        }
        // serde_json maps are ordered by key, so this is canonical
        let canonical = serde_json::to_string(&value).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
