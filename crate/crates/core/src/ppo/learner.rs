use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::config::TrainerConfig;
use super::gae::{compute_gae, normalize};
use super::loss::{mean_kl, ppo_loss_and_grad, LossCoefs, Minibatch};
use super::optim::Adam;
use crate::error::{Error, Result};
use crate::nets::{Action, ActionSample, Dist, Gaussian, PolicyParams};

/// Rollout storage for one learner, laid out episode-major.
#[derive(Debug, Clone)]
pub struct TrajectoryBatch {
    pub obs: Array2<f64>,
    pub actions: Vec<Action>,
    pub log_probs: Vec<f64>,
    pub dists: Vec<Dist>,
    pub entropies: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TrajectoryBatch {
    pub fn new(len: usize, obs_dim: usize) -> Self {
        let placeholder = Dist::Gaussian(Gaussian { mean: 0.0, std: 1.0 });
        Self {
            obs: Array2::zeros((len, obs_dim)),
            actions: vec![Action::Discrete(0); len],
            log_probs: vec![0.0; len],
            dists: vec![placeholder; len],
            entropies: vec![0.0; len],
            rewards: vec![0.0; len],
            values: vec![0.0; len],
            dones: vec![false; len],
            advantages: vec![0.0; len],
            returns: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn record(&mut self, idx: usize, obs: &[f64], sample: ActionSample, reward: f64, done: bool) {
        self.obs.row_mut(idx).assign(&ndarray::ArrayView1::from(obs));
        self.actions[idx] = sample.action;
        self.log_probs[idx] = sample.log_prob;
        self.entropies[idx] = sample.entropy;
        self.values[idx] = sample.value;
        self.dists[idx] = sample.dist;
        self.rewards[idx] = reward;
        self.dones[idx] = done;
    }

    /// Fills advantages (normalized) and returns.
    pub fn finish(&mut self, gamma: f64, lambda: f64) -> Result<()> {
        let (mut adv, ret) = compute_gae(&self.rewards, &self.values, &self.dones, gamma, lambda)?;
        normalize(&mut adv);
        self.advantages = adv;
        self.returns = ret;
        Ok(())
    }

    pub fn mean_entropy(&self) -> f64 {
        self.entropies.iter().sum::<f64>() / self.len().max(1) as f64
    }

    fn gather(&self, idx: &[usize]) -> OwnedMinibatch {
        OwnedMinibatch {
            obs: self.obs.select(Axis(0), idx),
            actions: idx.iter().map(|&i| self.actions[i]).collect(),
            log_probs: idx.iter().map(|&i| self.log_probs[i]).collect(),
            dists: idx.iter().map(|&i| self.dists[i].clone()).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
        }
    }
}

struct OwnedMinibatch {
    obs: Array2<f64>,
    actions: Vec<Action>,
    log_probs: Vec<f64>,
    dists: Vec<Dist>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
}

impl OwnedMinibatch {
    fn view(&self) -> Minibatch<'_> {
        Minibatch {
            obs: self.obs.view(),
            actions: &self.actions,
            old_log_probs: &self.log_probs,
            old_dists: &self.dists,
            advantages: &self.advantages,
            returns: &self.returns,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    /// KL(behavior || updated policy) measured on the whole batch.
    pub kl: f64,
    pub mean_loss: f64,
    pub clip_fraction: f64,
    /// Penalty coefficient in effect for the next update.
    pub kl_beta: f64,
}

/// A policy with its optimizer state and adaptive KL coefficient.
#[derive(Debug, Clone)]
pub struct Learner {
    pub name: String,
    pub params: PolicyParams,
    pub adam: Adam,
    pub kl_beta: f64,
    pub entropy_cost: f64,
    adapt_kl: bool,
}

impl Learner {
    /// KL adaptation runs only when the initial coefficient is positive.
    pub fn new(name: impl Into<String>, params: PolicyParams, lr: f64, kl_beta0: f64, entropy_cost: f64) -> Self {
        let adam = Adam::new(&params, lr);
        Self {
            name: name.into(),
            params,
            adam,
            kl_beta: kl_beta0,
            entropy_cost,
            adapt_kl: kl_beta0 > 0.0,
        }
    }

    /// Several epochs of shuffled minibatch PPO on `batch`, then KL adaptation.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &TrajectoryBatch,
        cfg: &TrainerConfig,
        iteration: usize,
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let coefs = LossCoefs {
            clip_eps: cfg.clip_eps,
            kl_beta: self.kl_beta,
            entropy_cost: self.entropy_cost,
            baseline_coef: cfg.baseline_coef,
        };
        let mut order: Vec<usize> = (0..batch.len()).collect();
        let mut loss_sum = 0.0;
        let mut clip_sum = 0.0;
        let mut steps = 0usize;
        for _ in 0..cfg.epochs_per_update {
            order.shuffle(rng);
            for chunk in order.chunks(cfg.minibatch_size) {
                let mb = batch.gather(chunk);
                let (stats, mut grad) = ppo_loss_and_grad(&self.params, &mb.view(), &coefs);
                let gnorm = grad.norm();
                if !stats.loss.is_finite() || !gnorm.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        learner: self.name.clone(),
                        iteration,
                        detail: format!("{stats:?}, gradient norm {gnorm}"),
                    });
                }
                if let Some(max) = cfg.max_grad_norm {
                    if gnorm > max {
                        grad.scale(max / gnorm);
                    }
                }
                self.adam.step(&mut self.params, &grad);
                loss_sum += stats.loss;
                clip_sum += stats.clip_fraction;
                steps += 1;
            }
        }
        let kl = mean_kl(&self.params, batch.obs.view(), &batch.dists);
        if self.adapt_kl {
            if kl > 1.5 * cfg.kl_target {
                self.kl_beta *= 1.5;
            } else if kl < cfg.kl_target / 1.5 {
                self.kl_beta /= 1.5;
            }
        }
        Ok(UpdateStats {
            kl,
            mean_loss: loss_sum / steps.max(1) as f64,
            clip_fraction: clip_sum / steps.max(1) as f64,
            kl_beta: self.kl_beta,
        })
    }
}
