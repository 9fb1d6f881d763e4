//! Principal-agent layer on top of the Coin Game.
//!
//! Each step the principal offers one linear contract share `alpha` to both
//! agents. An acting agent earns `alpha * theta * r - cost`; a rejecting agent
//! stays put and earns nothing. The principal keeps `(1 - alpha) * theta * r`
//! from every acting agent. The action cost is destroyed, not transferred.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{AgentMove, CoinGame, EnvConfig, GridState, MoveAction, N_AGENTS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PAConfig {
    pub env: EnvConfig,
    /// Hidden agent types, red then blue.
    pub types: [f64; N_AGENTS],
    pub action_cost: f64,
    pub contract_lo: f64,
    pub contract_hi: f64,
}

impl Default for PAConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            types: [1.25, 0.75],
            action_cost: 0.01,
            contract_lo: 0.0,
            contract_hi: 1.0,
        }
    }
}

impl PAConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if !(0.0 <= self.contract_lo && self.contract_lo <= self.contract_hi && self.contract_hi <= 1.0)
        {
            return Err(Error::Config(format!(
                "contract bounds must satisfy 0 <= lo <= hi <= 1, got [{}, {}]",
                self.contract_lo, self.contract_hi
            )));
        }
        if self.types.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::Config(format!("types must be positive, got {:?}", self.types)));
        }
        if !(self.action_cost >= 0.0) {
            return Err(Error::Config(format!(
                "action_cost must be non-negative, got {}",
                self.action_cost
            )));
        }
        Ok(())
    }

    pub fn principal_obs_len(&self) -> usize {
        self.env.obs_len()
    }

    pub fn agent_obs_len(&self) -> usize {
        self.env.obs_len() + 1
    }
}

/// An agent's response to the offered contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Act(MoveAction),
    Reject,
}

impl Decision {
    /// Index into the six-way agent action space; reject is 5.
    pub const REJECT_INDEX: usize = 5;
    pub const COUNT: usize = 6;

    pub fn from_index(i: usize) -> Option<Self> {
        if i == Self::REJECT_INDEX {
            Some(Decision::Reject)
        } else {
            MoveAction::from_index(i).map(Decision::Act)
        }
    }

    pub fn index(self) -> usize {
        match self {
            Decision::Act(m) => m.index(),
            Decision::Reject => Self::REJECT_INDEX,
        }
    }

    pub fn is_act(self) -> bool {
        matches!(self, Decision::Act(_))
    }

    fn as_move(self) -> AgentMove {
        match self {
            Decision::Act(m) => AgentMove::Move(m),
            Decision::Reject => AgentMove::Inactive,
        }
    }
}

/// The part of a step the principal is allowed to see: the contract it
/// offered and, for each acting agent, the fused contribution `theta * r`.
/// Types never cross this boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalView {
    pub alpha: f64,
    pub contributions: [Option<f64>; N_AGENTS],
}

impl PrincipalView {
    pub fn acting_contributions(&self) -> impl Iterator<Item = f64> + '_ {
        self.contributions.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractStep {
    pub alpha: f64,
    pub decisions: [Decision; N_AGENTS],
    pub raw_rewards: [f64; N_AGENTS],
    pub agent_payments: [f64; N_AGENTS],
    pub principal_income: f64,
    contributions: [Option<f64>; N_AGENTS],
}

impl ContractStep {
    /// Settles one step of raw rewards under a linear contract.
    pub fn settle(
        alpha: f64,
        decisions: [Decision; N_AGENTS],
        raw_rewards: [f64; N_AGENTS],
        types: &[f64; N_AGENTS],
        cost: f64,
    ) -> Self {
        let mut contributions = [None; N_AGENTS];
        let mut agent_payments = [0.0; N_AGENTS];
        let mut principal_income = 0.0;
        for i in 0..N_AGENTS {
            if decisions[i].is_act() {
                let contribution = types[i] * raw_rewards[i];
                contributions[i] = Some(contribution);
                agent_payments[i] = alpha * contribution - cost;
                principal_income += (1.0 - alpha) * contribution;
            }
        }
        Self {
            alpha,
            decisions,
            raw_rewards,
            agent_payments,
            principal_income,
            contributions,
        }
    }

    pub fn principal_view(&self) -> PrincipalView {
        PrincipalView {
            alpha: self.alpha,
            contributions: self.contributions,
        }
    }

    /// Principal's share of agent `i`'s contribution (0 if it rejected).
    pub fn principal_share(&self, i: usize) -> f64 {
        self.contributions[i].map_or(0.0, |c| (1.0 - self.alpha) * c)
    }
}

/// Cumulative per-episode wealth. Principal wealth is always the
/// unregularized net surplus, whatever objective the principal learns.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WealthLedger {
    pub agent_wealth: [f64; N_AGENTS],
    pub principal_wealth: f64,
}

impl WealthLedger {
    pub fn record(&mut self, step: &ContractStep) {
        for (w, p) in self.agent_wealth.iter_mut().zip(step.agent_payments) {
            *w += p;
        }
        self.principal_wealth += step.principal_income;
    }

    /// Red, blue, principal.
    pub fn parties(&self) -> [f64; N_AGENTS + 1] {
        [self.agent_wealth[0], self.agent_wealth[1], self.principal_wealth]
    }

    pub fn welfare(&self) -> f64 {
        self.parties().iter().sum()
    }
}

/// The Coin Game wrapped with types, costs and contracts.
#[derive(Debug, Clone)]
pub struct ContractGame {
    config: PAConfig,
    game: CoinGame,
}

impl ContractGame {
    pub fn new(config: PAConfig) -> Result<Self> {
        config.validate()?;
        let game = CoinGame::new(config.env)?;
        Ok(Self { config, game })
    }

    pub fn config(&self) -> &PAConfig {
        &self.config
    }

    pub fn coin_game(&self) -> &CoinGame {
        &self.game
    }

    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> GridState {
        self.game.reset(rng)
    }

    pub fn contract_step<R: Rng + ?Sized>(
        &self,
        state: &GridState,
        alpha: f64,
        decisions: [Decision; N_AGENTS],
        ledger: &mut WealthLedger,
        rng: &mut R,
    ) -> Result<(GridState, ContractStep)> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::ContractOutOfRange(alpha));
        }
        let moves = [decisions[0].as_move(), decisions[1].as_move()];
        let (next, raw) = self.game.step(state, moves, rng)?;
        let step = ContractStep::settle(
            alpha,
            decisions,
            raw,
            &self.config.types,
            self.config.action_cost,
        );
        ledger.record(&step);
        Ok((next, step))
    }

    pub fn principal_observation(&self, state: &GridState) -> Vec<f64> {
        self.game.observe(state)
    }

    /// Grid observation followed by the offered contract share.
    pub fn agent_observation(&self, state: &GridState, alpha: f64) -> Vec<f64> {
        let mut obs = vec![0.0; self.config.agent_obs_len()];
        self.agent_observation_into(state, alpha, &mut obs);
        obs
    }

    pub fn agent_observation_into(&self, state: &GridState, alpha: f64, out: &mut [f64]) {
        let n = self.config.env.obs_len();
        self.game.observe_into(state, &mut out[..n]);
        out[n] = alpha;
    }
}
