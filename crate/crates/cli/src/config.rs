//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use renoir::data::{gen_blobs, gen_two_moons, load_csv};
use renoir::distributions::NoiseSpec;
use renoir::net::{train, RandomizedNet, TrainConfig, DEFAULT_LEAKY_SLOPE};
use renoir::rng::derive_seed;
use renoir::{AttackSpec, Dataset, Error, NoiseModel, Result};

/// Child-seed indices under the master seed.
pub mod seeds {
    pub const DATA: u64 = 0;
    pub const INIT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const TEST: u64 = 3;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    Blobs {
        n: usize,
        centers: Vec<Vec<f64>>,
        spread: f64,
    },
    Moons {
        n: usize,
        noise_sd: f64,
    },
    Csv {
        path: PathBuf,
    },
}

fn default_slope() -> f64 {
    DEFAULT_LEAKY_SLOPE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
    /// Number of layers before the noise; 0 injects at the input.
    #[serde(default)]
    pub noise_layer_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseConfig {
    Spec(NoiseSpec),
    None(String),
}

fn default_momentum() -> f64 {
    0.9
}
fn default_batch() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    pub epochs: usize,
    pub lr_schedule: Vec<(usize, f64)>,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_mc() -> usize {
    1000
}

/// A full experiment. The master seed is mandatory; every other seed derives from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub noise: NoiseConfig,
    pub training: TrainingSpec,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default)]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parse and check that referenced files exist. Relative dataset paths
    /// resolve against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: 0,
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if let DatasetSpec::Csv { path } = &mut cfg.dataset {
            if path.is_relative() {
                *path = base.join(&*path);
            }
            if !path.exists() {
                return Err(Error::param(
                    "dataset.path",
                    format!("{} does not exist", path.display()),
                ));
            }
        }
        if let NoiseConfig::None(s) = &cfg.noise {
            if s != "none" {
                return Err(Error::param(
                    "noise",
                    format!("expected a noise spec or \"none\", got `{s}`"),
                ));
            }
        }
        if cfg.mc_samples == 0 {
            return Err(Error::param("mc_samples", "must be >= 1"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(&serde_json::to_value(self)?)?))
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let seed = derive_seed(self.seed, seeds::DATA);
        match &self.dataset {
            DatasetSpec::Blobs { n, centers, spread } => gen_blobs(*n, centers, *spread, seed),
            DatasetSpec::Moons { n, noise_sd } => gen_two_moons(*n, *noise_sd, seed),
            DatasetSpec::Csv { path } => load_csv(path),
        }
    }

    /// Fresh draw from the same generator; a CSV dataset is its own test set.
    pub fn test_dataset(&self) -> Result<Dataset> {
        let seed = derive_seed(self.seed, seeds::TEST);
        match &self.dataset {
            DatasetSpec::Blobs { n, centers, spread } => gen_blobs(*n, centers, *spread, seed),
            DatasetSpec::Moons { n, noise_sd } => gen_two_moons(*n, *noise_sd, seed),
            DatasetSpec::Csv { path } => load_csv(path),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            lr_schedule: self.training.lr_schedule.clone(),
            momentum: self.training.momentum,
            batch_size: self.training.batch_size,
            seed: derive_seed(self.seed, seeds::TRAIN),
        }
    }

    /// Untrained network for `data`. A noise spec without `dim` takes the
    /// width at the injection point.
    pub fn initial_net(&self, data: &Dataset) -> Result<RandomizedNet> {
        let mut widths = vec![data.dim()];
        widths.extend(&self.model.hidden);
        widths.push(data.num_classes());
        let init = derive_seed(self.seed, seeds::INIT);
        let skeleton = RandomizedNet::mlp(&widths, self.model.leaky_slope, None, 0, init)?;
        let noise = match &self.noise {
            NoiseConfig::None(_) => None,
            NoiseConfig::Spec(spec) => {
                let mut spec = spec.clone();
                if spec.dim.is_none() && spec.cov.is_none() {
                    spec.dim = Some(width_at(&skeleton, self.model.noise_layer_index)?);
                }
                Some(NoiseModel::try_from(spec)?)
            }
        };
        RandomizedNet::new(skeleton.layers().to_vec(), noise, self.model.noise_layer_index)
    }

    pub fn train(&self, data: &Dataset) -> Result<(RandomizedNet, Vec<f64>)> {
        train(&self.initial_net(data)?, data, &self.train_config())
    }
}

fn width_at(net: &RandomizedNet, index: usize) -> Result<usize> {
    if index > net.layers().len() {
        return Err(Error::param("model.noise_layer_index", "exceeds the number of layers"));
    }
    let mut width = net.input_dim();
    for layer in &net.layers()[..index] {
        if let renoir::Layer::Linear(l) = layer {
            width = l.out_dim();
        }
    }
    Ok(width)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
