use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::DEFAULT_HIDDEN;

/// PPO settings for the principal and the agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub lr_principal: f64,
    pub lr_agent: f64,
    pub entropy_cost_principal: f64,
    pub entropy_cost_agent: f64,
    pub gae_lambda: f64,
    pub kl_beta0_principal: f64,
    pub kl_beta0_agent: f64,
    pub kl_target: f64,
    pub clip_eps: f64,
    pub baseline_coef: f64,
    /// Timesteps per iteration, a whole number of episodes.
    pub batch_size: usize,
    pub episode_length: usize,
    pub gamma: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    /// Initial log standard deviation of the principal's contract policy.
    pub init_log_std_principal: f64,
    /// Global gradient-norm clip per minibatch step; `None` disables it.
    pub max_grad_norm: Option<f64>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            lr_principal: 2e-4,
            lr_agent: 5e-4,
            entropy_cost_principal: 1e-5,
            entropy_cost_agent: 1e-3,
            gae_lambda: 0.95,
            kl_beta0_principal: 1.0,
            kl_beta0_agent: 0.0,
            kl_target: 1e-2,
            clip_eps: 0.2,
            baseline_coef: 0.5,
            batch_size: 1600,
            episode_length: 100,
            gamma: 1.0,
            epochs_per_update: 4,
            minibatch_size: 400,
            seed: 0,
            hidden: DEFAULT_HIDDEN.to_vec(),
            init_log_std_principal: -1.6,
            max_grad_norm: None,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.episode_length == 0 || self.batch_size == 0 || !self.batch_size.is_multiple_of(self.episode_length) {
            return bad(format!(
                "batch_size ({}) must be a positive multiple of episode_length ({})",
                self.batch_size, self.episode_length
            ));
        }
        if self.minibatch_size == 0 || self.minibatch_size > self.batch_size {
            return bad(format!(
                "minibatch_size ({}) must be in 1..={}",
                self.minibatch_size, self.batch_size
            ));
        }
        if self.epochs_per_update == 0 {
            return bad("epochs_per_update must be positive".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden sizes must be positive, got {:?}", self.hidden));
        }
        for (name, v) in [
            ("lr_principal", self.lr_principal),
            ("lr_agent", self.lr_agent),
            ("entropy_cost_principal", self.entropy_cost_principal),
            ("entropy_cost_agent", self.entropy_cost_agent),
            ("kl_beta0_principal", self.kl_beta0_principal),
            ("kl_beta0_agent", self.kl_beta0_agent),
            ("kl_target", self.kl_target),
            ("clip_eps", self.clip_eps),
            ("baseline_coef", self.baseline_coef),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]".into());
        }
        if let Some(c) = self.max_grad_norm {
            if !(c > 0.0) {
                return bad(format!("max_grad_norm must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn episodes_per_batch(&self) -> usize {
        self.batch_size / self.episode_length
    }
}
