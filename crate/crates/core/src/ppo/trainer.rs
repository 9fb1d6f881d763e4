//! Policy-gradient training of the principal and both agents on the Coin Game.
//!
//! Each iteration collects a batch of whole episodes under frozen policy
//! snapshots, then updates every learner independently on its own rewards:
//! agents on their contractual payments, the principal on its objective.

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainerConfig;
use super::learner::{Learner, TrajectoryBatch, UpdateStats};
use crate::contract::{ContractGame, Decision, PAConfig, WealthLedger};
use crate::env::{GridState, N_AGENTS};
use crate::error::{Error, Result};
use crate::metrics::{MetricSet, MetricsRow};
use crate::nets::{checkpoint, ActionSample, PolicyParams};
use crate::objectives::{principal_reward, ObjectiveSpec};

pub const AGENT_NAMES: [&str; N_AGENTS] = ["red", "blue"];

/// Experience from one iteration.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub principal: Option<TrajectoryBatch>,
    pub agents: [TrajectoryBatch; N_AGENTS],
    /// Final wealth of each episode.
    pub ledgers: Vec<WealthLedger>,
    pub mean_alpha: f64,
    /// Fraction of raw contract draws that fell outside the contract space.
    pub clip_rate: f64,
    pub reject_rate: [f64; N_AGENTS],
}

impl Rollout {
    /// Episode-averaged wealth of red, blue and the principal.
    pub fn mean_wealth(&self) -> [f64; N_AGENTS + 1] {
        let n = self.ledgers.len() as f64;
        let mut w = [0.0; N_AGENTS + 1];
        for l in &self.ledgers {
            for (acc, x) in w.iter_mut().zip(l.parties()) {
                *acc += x;
            }
        }
        w.map(|x| x / n)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateSummary {
    pub principal: Option<UpdateStats>,
    pub agents: [UpdateStats; N_AGENTS],
}

pub struct CoinTrainer {
    game: ContractGame,
    cfg: TrainerConfig,
    objective: ObjectiveSpec,
    principal: Option<Learner>,
    agents: [Learner; N_AGENTS],
    iteration: usize,
    rng: ChaCha8Rng,
}

impl CoinTrainer {
    pub fn new(game: PAConfig, cfg: TrainerConfig, objective: ObjectiveSpec) -> Result<Self> {
        cfg.validate()?;
        objective.validate()?;
        if cfg.episode_length != game.env.episode_length {
            return Err(Error::Config(format!(
                "trainer episode_length {} differs from game horizon {}",
                cfg.episode_length, game.env.episode_length
            )));
        }
        let game = ContractGame::new(game)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pc = *game.config();
        let principal = objective.principal_learns().then(|| {
            let params = PolicyParams::gaussian(
                pc.principal_obs_len(),
                &cfg.hidden,
                cfg.init_log_std_principal,
                &mut rng,
            );
            Learner::new(
                "principal",
                params,
                cfg.lr_principal,
                cfg.kl_beta0_principal,
                cfg.entropy_cost_principal,
            )
        });
        let agents = AGENT_NAMES.map(|name| {
            let params =
                PolicyParams::categorical(pc.agent_obs_len(), Decision::COUNT, &cfg.hidden, &mut rng);
            Learner::new(name, params, cfg.lr_agent, cfg.kl_beta0_agent, cfg.entropy_cost_agent)
        });
        Ok(Self {
            game,
            cfg,
            objective,
            principal,
            agents,
            iteration: 0,
            rng,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    pub fn game(&self) -> &ContractGame {
        &self.game
    }

    pub fn principal(&self) -> Option<&Learner> {
        self.principal.as_ref()
    }

    pub fn agents(&self) -> &[Learner; N_AGENTS] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [Learner; N_AGENTS] {
        &mut self.agents
    }

    pub fn principal_mut(&mut self) -> Option<&mut Learner> {
        self.principal.as_mut()
    }

    /// Per-episode stream: the same `(seed, iteration, episode)` always
    /// replays the same randomness.
    fn episode_rng(&self, episode: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let n = self.cfg.episodes_per_batch();
        rng.set_stream(1 + (self.iteration * n + episode) as u64);
        rng
    }

    /// Plays one batch of episodes in lockstep under the current policies.
    pub fn collect(&self) -> Result<Rollout> {
        let pc = *self.game.config();
        let n_eps = self.cfg.episodes_per_batch();
        let horizon = self.cfg.episode_length;
        let len = n_eps * horizon;
        let p_dim = pc.principal_obs_len();
        let a_dim = pc.agent_obs_len();

        let mut rngs: Vec<ChaCha8Rng> = (0..n_eps).map(|e| self.episode_rng(e)).collect();
        let mut states: Vec<GridState> = rngs.iter_mut().map(|r| self.game.reset(r)).collect();
        let mut ledgers = vec![WealthLedger::default(); n_eps];

        let mut principal_batch = self.principal.as_ref().map(|_| TrajectoryBatch::new(len, p_dim));
        let mut agent_batches = [TrajectoryBatch::new(len, a_dim), TrajectoryBatch::new(len, a_dim)];
        let mut p_obs = Array2::<f64>::zeros((n_eps, p_dim));
        let mut a_obs = Array2::<f64>::zeros((n_eps, a_dim));

        let mut alpha_sum = 0.0;
        let mut clipped = 0usize;
        let mut rejects = [0usize; N_AGENTS];

        for t in 0..horizon {
            for (e, s) in states.iter().enumerate() {
                let row = p_obs.row_mut(e).into_slice().expect("contiguous row");
                self.game.coin_game().observe_into(s, row);
            }
            let (alphas, p_samples): (Vec<f64>, Option<Vec<ActionSample>>) = match &self.principal {
                Some(p) => {
                    let samples = p.params.sample_batch(p_obs.view(), &mut rngs);
                    let alphas = samples
                        .iter()
                        .map(|s| s.contract(pc.contract_lo, pc.contract_hi))
                        .collect();
                    (alphas, Some(samples))
                }
                None => {
                    let a = self.objective.fixed_alpha().expect("non-learning principal");
                    (vec![a; n_eps], None)
                }
            };
            for e in 0..n_eps {
                let s = &states[e];
                let row = a_obs.row_mut(e).into_slice().expect("contiguous row");
                self.game.agent_observation_into(s, alphas[e], row);
            }
            let red = self.agents[0].params.sample_batch(a_obs.view(), &mut rngs);
            let blue = self.agents[1].params.sample_batch(a_obs.view(), &mut rngs);

            let mut p_samples = p_samples.map(Vec::into_iter);
            for (e, (r_sample, b_sample)) in red.into_iter().zip(blue).enumerate() {
                let idx = e * horizon + t;
                let done = t + 1 == horizon;
                let decisions = [
                    decision(&r_sample)?,
                    decision(&b_sample)?,
                ];
                let (next, step) = self.game.contract_step(
                    &states[e],
                    alphas[e],
                    decisions,
                    &mut ledgers[e],
                    &mut rngs[e],
                )?;
                states[e] = next;

                alpha_sum += alphas[e];
                for (i, d) in decisions.iter().enumerate() {
                    if !d.is_act() {
                        rejects[i] += 1;
                    }
                }
                agent_batches[0].record(idx, a_obs.row(e).as_slice().unwrap(), r_sample, step.agent_payments[0], done);
                agent_batches[1].record(idx, a_obs.row(e).as_slice().unwrap(), b_sample, step.agent_payments[1], done);

                if let (Some(batch), Some(samples)) = (principal_batch.as_mut(), p_samples.as_mut()) {
                    let sample = samples.next().expect("one principal sample per episode");
                    let raw = sample.action.continuous();
                    if raw < pc.contract_lo || raw > pc.contract_hi {
                        clipped += 1;
                    }
                    let reward = principal_reward(&self.objective, &step.principal_view(), &ledgers[e]);
                    batch.record(idx, p_obs.row(e).as_slice().unwrap(), sample, reward, done);
                }
            }
        }
        let total = len as f64;
        Ok(Rollout {
            principal: principal_batch,
            agents: agent_batches,
            ledgers,
            mean_alpha: alpha_sum / total,
            clip_rate: clipped as f64 / total,
            reject_rate: rejects.map(|r| r as f64 / total),
        })
    }

    /// Computes advantages and runs the PPO update for every learner.
    pub fn update(&mut self, rollout: &mut Rollout) -> Result<UpdateSummary> {
        let (gamma, lambda) = (self.cfg.gamma, self.cfg.gae_lambda);
        let mut summary = UpdateSummary::default();
        if let (Some(learner), Some(batch)) = (self.principal.as_mut(), rollout.principal.as_mut()) {
            batch.finish(gamma, lambda)?;
            summary.principal = Some(learner.update(batch, &self.cfg, self.iteration, &mut self.rng)?);
        }
        for (i, learner) in self.agents.iter_mut().enumerate() {
            let batch = &mut rollout.agents[i];
            batch.finish(gamma, lambda)?;
            summary.agents[i] = learner.update(batch, &self.cfg, self.iteration, &mut self.rng)?;
        }
        Ok(summary)
    }

    /// One collect-and-update cycle; returns the log row for it.
    pub fn iterate(&mut self) -> Result<MetricsRow> {
        let mut rollout = self.collect()?;
        let summary = self.update(&mut rollout)?;
        let row = self.metrics_row(&rollout, &summary);
        self.iteration += 1;
        Ok(row)
    }

    fn metrics_row(&self, rollout: &Rollout, summary: &UpdateSummary) -> MetricsRow {
        let [red, blue, principal] = rollout.mean_wealth();
        let mut row = MetricsRow {
            iteration: self.iteration,
            seed: self.cfg.seed,
            objective: self.objective.name().to_string(),
            lambda: self.objective.lambda(),
            mean_alpha: rollout.mean_alpha,
            reject_rate_red: rollout.reject_rate[0],
            reject_rate_blue: rollout.reject_rate[1],
            wealth_red: red,
            wealth_blue: blue,
            wealth_principal: principal,
            welfare: 0.0,
            one_minus_gini: None,
            rawlsian: 0.0,
            aie: None,
            kl_principal: summary.principal.map_or(0.0, |s| s.kl),
            entropy_red: rollout.agents[0].mean_entropy(),
            entropy_blue: rollout.agents[1].mean_entropy(),
        };
        let m = MetricSet::of(&row.parties(self.objective.principal_in_metrics()));
        row.welfare = m.welfare;
        row.one_minus_gini = m.one_minus_gini;
        row.rawlsian = m.rawlsian;
        row.aie = m.aie;
        row
    }

    /// Writes `principal.ckpt` (when learning) and one checkpoint per agent.
    pub fn save_checkpoints(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if let Some(p) = &self.principal {
            checkpoint::save(&p.params, &dir.join("principal.ckpt"))?;
        }
        for (name, a) in AGENT_NAMES.iter().zip(&self.agents) {
            checkpoint::save(&a.params, &dir.join(format!("agent_{name}.ckpt")))?;
        }
        Ok(())
    }
}

fn decision(sample: &ActionSample) -> Result<Decision> {
    let idx = sample.action.discrete();
    Decision::from_index(idx).ok_or_else(|| Error::Config(format!("agent action index {idx} out of range")))
}

/// Runs `iterations` training iterations, handing each log row to `on_row`.
pub fn train(
    game: PAConfig,
    cfg: TrainerConfig,
    objective: ObjectiveSpec,
    iterations: usize,
    mut on_row: impl FnMut(&MetricsRow),
) -> Result<(CoinTrainer, Vec<MetricsRow>)> {
    let mut trainer = CoinTrainer::new(game, cfg, objective)?;
    let mut rows = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let row = trainer.iterate()?;
        on_row(&row);
        rows.push(row);
    }
    Ok((trainer, rows))
}
