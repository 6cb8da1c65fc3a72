//! Experiment configuration files: TOML, strict about unknown keys, defaults
//! filled on parse, lossless round-trip.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::densenet::{MnistTrainConfig, VALID_ROTATIONS};
use crate::error::{Error, Result};
use crate::gridworld::GridExperimentConfig;

use super::toy::ToyProtocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Toy,
    Prop3,
    Gridworld,
    Mnist,
    Highdim,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Toy => "toy",
            ExperimentKind::Prop3 => "prop3",
            ExperimentKind::Gridworld => "gridworld",
            ExperimentKind::Mnist => "mnist",
            ExperimentKind::Highdim => "highdim",
        }
    }
}

/// Toy sweep parameters plus how many example trajectories to write out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub steps: usize,
    pub alpha: f64,
    pub level: f64,
    pub inits: usize,
    pub init_low: f64,
    pub init_high: f64,
    /// Trajectories written per (scenario, arm) cell; summaries cover all runs.
    pub traj_examples: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        let p = ToyProtocol::default();
        Self {
            steps: p.steps,
            alpha: p.alpha,
            level: p.level,
            inits: p.inits,
            init_low: p.init_low,
            init_high: p.init_high,
            traj_examples: 5,
        }
    }
}

impl ToyConfig {
    pub fn protocol(&self) -> ToyProtocol {
        ToyProtocol {
            steps: self.steps,
            alpha: self.alpha,
            level: self.level,
            inits: self.inits,
            init_low: self.init_low,
            init_high: self.init_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop3Config {
    pub a: f64,
    pub n_per_segment: usize,
}

impl Default for Prop3Config {
    fn default() -> Self {
        Self {
            a: 1.0,
            n_per_segment: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HighdimConfig {
    pub dims: Vec<usize>,
    pub n: usize,
    pub sigma: f64,
}

impl Default for HighdimConfig {
    fn default() -> Self {
        Self {
            dims: vec![10, 100, 1000, 10_000],
            n: 1000,
            sigma: 1.0,
        }
    }
}

/// The harness-level rotated-digits run: training settings plus data source
/// and how many seeded repetitions to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistRunConfig {
    pub train: MnistTrainConfig,
    /// Fraction of the training set used, taken as a prefix.
    pub train_frac: f64,
    pub data_dir: String,
    /// Number of independent runs; run `i` uses rng stream `i`.
    pub runs: usize,
}

impl Default for MnistRunConfig {
    fn default() -> Self {
        Self {
            train: MnistTrainConfig::default(),
            train_frac: 1.0,
            data_dir: "data/mnist".to_string(),
            runs: 1,
        }
    }
}

/// A whole experiment file: the kind tag, master seed, output directory, and
/// exactly one kind-specific block (or none, meaning all defaults).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy: Option<ToyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop3: Option<Prop3Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gridworld: Option<GridExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mnist: Option<MnistRunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highdim: Option<HighdimConfig>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: 0,
            out_dir: None,
            toy: None,
            prop3: None,
            gridworld: None,
            mnist: None,
            highdim: None,
        }
    }

    /// Ensures the block layout matches the kind and all values are in range.
    pub fn validate(&self) -> Result<()> {
        let blocks = [
            ("toy", self.toy.is_some()),
            ("prop3", self.prop3.is_some()),
            ("gridworld", self.gridworld.is_some()),
            ("mnist", self.mnist.is_some()),
            ("highdim", self.highdim.is_some()),
        ];
        for (name, present) in blocks {
            if present && name != self.kind.name() {
                return Err(Error::Config(format!(
                    "config of kind `{}` must not carry a [{}] block",
                    self.kind.name(),
                    name
                )));
            }
        }
        match self.kind {
            ExperimentKind::Toy => {
                let c = self.toy.clone().unwrap_or_default();
                require(c.steps >= 1, "toy.steps must be at least 1")?;
                require(c.alpha > 0.0 && c.alpha.is_finite(), "toy.alpha must be positive")?;
                require(c.level > 0.0 && c.level.is_finite(), "toy.level must be positive")?;
                require(c.inits >= 1, "toy.inits must be at least 1")?;
                require(c.init_low < c.init_high, "toy.init_low must be below toy.init_high")?;
            }
            ExperimentKind::Prop3 => {
                let c = self.prop3.clone().unwrap_or_default();
                require(c.a != 0.0 && c.a.is_finite(), "prop3.a must be nonzero")?;
                require(
                    c.n_per_segment >= 1000,
                    "prop3.n_per_segment must be at least 1000",
                )?;
            }
            ExperimentKind::Gridworld => {
                let c = self.gridworld.clone().unwrap_or_default();
                require(c.pairs >= 1, "gridworld.pairs must be at least 1")?;
                require(!c.methods.is_empty(), "gridworld.methods must be non-empty")?;
                require(
                    !c.temperatures.is_empty(),
                    "gridworld.temperatures must be non-empty",
                )?;
                require(
                    c.temperatures.iter().all(|t| *t >= 0.0 && t.is_finite()),
                    "gridworld.temperatures must be non-negative",
                )?;
                require(
                    (0.0..1.0).contains(&c.gen.wall_prob),
                    "gridworld.gen.wall_prob must be in [0, 1)",
                )?;
                require(c.trainer.steps >= 1, "gridworld.trainer.steps must be at least 1")?;
                require(
                    c.trainer.eval_every >= 1,
                    "gridworld.trainer.eval_every must be at least 1",
                )?;
                require(
                    c.trainer.lr > 0.0,
                    "gridworld.trainer.lr must be positive",
                )?;
                require(
                    (0.0..=1.0).contains(&c.trainer.gamma),
                    "gridworld.trainer.gamma must be in [0, 1]",
                )?;
                require(
                    c.trainer.dynamics.kill_prob > 0.0,
                    "gridworld.trainer.dynamics.kill_prob must be positive",
                )?;
            }
            ExperimentKind::Mnist => {
                let c = self.mnist.clone().unwrap_or_default();
                require(
                    VALID_ROTATIONS.contains(&c.train.rotation),
                    "mnist.train.rotation must be one of 0, 45, 90, 135, 180",
                )?;
                require(c.train.epochs >= 1, "mnist.train.epochs must be at least 1")?;
                require(c.train.batch >= 1, "mnist.train.batch must be at least 1")?;
                require(
                    c.train_frac > 0.0 && c.train_frac <= 1.0,
                    "mnist.train_frac must be in (0, 1]",
                )?;
                require(c.runs >= 1, "mnist.runs must be at least 1")?;
                c.train.gate.validate()?;
            }
            ExperimentKind::Highdim => {
                let c = self.highdim.clone().unwrap_or_default();
                require(!c.dims.is_empty(), "highdim.dims must be non-empty")?;
                require(
                    c.dims.iter().all(|d| *d >= 1),
                    "highdim.dims must be at least 1",
                )?;
                require(c.n >= 1, "highdim.n must be at least 1")?;
                require(
                    c.sigma >= 0.0 && c.sigma.is_finite(),
                    "highdim.sigma must be non-negative",
                )?;
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn require(cond: bool, message: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(message.to_string()))
    }
}

/// Parses and validates a config from TOML text.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Parses and validates a config file; errors carry the path and, for parse
/// errors, the offending line.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}
