//! Proximal policy optimization for the principal and the agents.

pub mod config;
pub mod gae;
pub mod learner;
pub mod loss;
pub mod optim;
pub mod trainer;

pub use config::TrainerConfig;
pub use gae::compute_gae;
pub use learner::{Learner, TrajectoryBatch, UpdateStats};
pub use loss::{clipped_surrogate, mean_kl, ppo_loss, ppo_loss_and_grad, LossCoefs, LossStats, Minibatch};
pub use optim::Adam;
pub use trainer::{train, CoinTrainer, Rollout, UpdateSummary, AGENT_NAMES};
