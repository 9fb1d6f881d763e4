use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contract::PAConfig;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::ppo::TrainerConfig;

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

fn default_window() -> f64 {
    0.05
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

/// One experiment: a game, a trainer, a principal objective and a seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub iterations: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Trailing fraction of iterations averaged into the reported metrics.
    #[serde(default = "default_window")]
    pub eval_window_fraction: f64,
    /// Relative paths are resolved against the output root.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub game: PAConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    pub objective: ObjectiveSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid experiment name {:?}", self.name)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::Config(format!("seeds must be distinct, got {:?}", self.seeds)));
        }
        if !(self.eval_window_fraction > 0.0 && self.eval_window_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "eval_window_fraction must be in (0, 1], got {}",
                self.eval_window_fraction
            )));
        }
        self.game.validate()?;
        self.trainer.validate()?;
        self.objective.validate()?;
        if self.trainer.episode_length != self.game.env.episode_length {
            return Err(Error::Config(format!(
                "trainer episode_length {} differs from game horizon {}",
                self.trainer.episode_length, self.game.env.episode_length
            )));
        }
        Ok(())
    }

    /// Trainer settings for one seed.
    pub fn trainer_for(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            seed,
            ..self.trainer.clone()
        }
    }

    /// Snapshot that reproduces a single seed of this experiment.
    pub fn for_seed(&self, seed: u64) -> Self {
        Self {
            seeds: vec![seed],
            ..self.clone()
        }
    }

    pub fn resolve_output_dir(&self, root: Option<&Path>) -> PathBuf {
        match root {
            Some(root) if self.output_dir.is_relative() => root.join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Number of trailing rows averaged for `rows` logged iterations.
    pub fn eval_window(&self, rows: usize) -> usize {
        eval_window(self.eval_window_fraction, rows)
    }
}

pub(crate) fn eval_window(fraction: f64, rows: usize) -> usize {
    if rows == 0 {
        0
    } else {
        ((fraction * rows as f64).ceil() as usize).clamp(1, rows)
    }
}
