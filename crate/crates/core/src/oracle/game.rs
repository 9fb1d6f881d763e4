use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What happens after a joint action in a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    pub state: usize,
    /// One augmented action index per agent; index `actions[i]` means reject.
    pub joint: Vec<usize>,
    /// Raw (pre-type) reward per agent.
    pub rewards: Vec<f64>,
    pub next: Vec<usize>,
    pub probs: Vec<f64>,
}

/// Serialized form of a finite-horizon principal-agent game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularGameSpec {
    pub n_states: usize,
    pub horizon: usize,
    /// Move actions per agent, reject excluded.
    pub actions: Vec<usize>,
    pub types: Vec<f64>,
    pub cost: f64,
    /// Initial state distribution.
    pub initial: Vec<f64>,
    #[serde(default)]
    pub contract_grid: Vec<f64>,
    pub outcomes: Vec<OutcomeSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rewards: Vec<f64>,
    pub next: Vec<(usize, f64)>,
}

/// A validated tabular game with a dense `(state, joint action)` table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularGame {
    pub n_states: usize,
    pub horizon: usize,
    pub actions: Vec<usize>,
    pub types: Vec<f64>,
    pub cost: f64,
    pub initial: Vec<f64>,
    pub contract_grid: Vec<f64>,
    table: Vec<Vec<Option<Outcome>>>,
}

const PROB_TOL: f64 = 1e-12;

impl TabularGame {
    pub fn from_spec(spec: TabularGameSpec) -> Result<Self> {
        let bad = |m: String| Err(Error::TabularGame(m));
        let n_agents = spec.actions.len();
        if n_agents == 0 || spec.n_states == 0 || spec.horizon == 0 {
            return bad("need at least one agent, one state and a positive horizon".into());
        }
        if spec.types.len() != n_agents || spec.types.iter().any(|t| !(*t > 0.0)) {
            return bad(format!("need one positive type per agent, got {:?}", spec.types));
        }
        if !(spec.cost >= 0.0) {
            return bad(format!("cost must be non-negative, got {}", spec.cost));
        }
        check_distribution("initial", &spec.initial, spec.n_states)?;

        let radix: Vec<usize> = spec.actions.iter().map(|a| a + 1).collect();
        let n_joint: usize = radix.iter().product();
        let mut table = vec![vec![None; n_joint]; spec.n_states];
        for o in spec.outcomes {
            if o.state >= spec.n_states {
                return bad(format!("outcome state {} out of range", o.state));
            }
            if o.joint.len() != n_agents || o.joint.iter().zip(&radix).any(|(a, r)| a >= r) {
                return bad(format!("bad joint action {:?} in state {}", o.joint, o.state));
            }
            if o.rewards.len() != n_agents || o.rewards.iter().any(|r| !(*r >= 0.0)) {
                return bad(format!(
                    "rewards must be non-negative, one per agent: {:?}",
                    o.rewards
                ));
            }
            if o.next.len() != o.probs.len() || o.next.iter().any(|&s| s >= spec.n_states) {
                return bad(format!("bad successor list in state {}", o.state));
            }
            let total: f64 = o.probs.iter().sum();
            if (total - 1.0).abs() > PROB_TOL || o.probs.iter().any(|p| *p < 0.0) {
                return bad(format!(
                    "successor probabilities in state {} sum to {total}",
                    o.state
                ));
            }
            let j = joint_index(&o.joint, &radix);
            let slot = &mut table[o.state][j];
            if slot.is_some() {
                return bad(format!("duplicate outcome for state {} joint {:?}", o.state, o.joint));
            }
            *slot = Some(Outcome {
                rewards: o.rewards,
                next: o.next.into_iter().zip(o.probs).collect(),
            });
        }
        for (s, row) in table.iter().enumerate() {
            if let Some(j) = row.iter().position(Option::is_none) {
                return bad(format!(
                    "missing outcome for state {s} joint {:?}",
                    joint_actions(j, &radix)
                ));
            }
        }
        Ok(Self {
            n_states: spec.n_states,
            horizon: spec.horizon,
            actions: spec.actions,
            types: spec.types,
            cost: spec.cost,
            initial: spec.initial,
            contract_grid: spec.contract_grid,
            table,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.actions.len()
    }

    /// Augmented action count for agent `i` (moves plus reject).
    pub fn n_choices(&self, i: usize) -> usize {
        self.actions[i] + 1
    }

    pub fn reject(&self, i: usize) -> usize {
        self.actions[i]
    }

    pub fn outcome(&self, state: usize, joint: &[usize]) -> &Outcome {
        let radix: Vec<usize> = self.actions.iter().map(|a| a + 1).collect();
        self.table[state][joint_index(joint, &radix)]
            .as_ref()
            .expect("validated table is dense")
    }

    /// Contract payment minus cost for agent `i`, zero on reject.
    pub fn payment(&self, i: usize, action: usize, alpha: f64, raw_reward: f64) -> f64 {
        if action == self.reject(i) {
            0.0
        } else {
            alpha * self.types[i] * raw_reward - self.cost
        }
    }
}

fn check_distribution(what: &str, p: &[f64], n: usize) -> Result<()> {
    let total: f64 = p.iter().sum();
    if p.len() != n || p.iter().any(|x| *x < 0.0) || (total - 1.0).abs() > PROB_TOL {
        return Err(Error::TabularGame(format!(
            "{what} must be a distribution over {n} entries, got {p:?}"
        )));
    }
    Ok(())
}

fn joint_index(joint: &[usize], radix: &[usize]) -> usize {
    joint.iter().zip(radix).fold(0, |acc, (a, r)| acc * r + a)
}

fn joint_actions(mut idx: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for k in (0..radix.len()).rev() {
        out[k] = idx % radix[k];
        idx /= radix[k];
    }
    out
}

/// Deterministic contract share per `(t, state)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSchedule {
    /// `alpha[t][s]`.
    pub alpha: Vec<Vec<f64>>,
}

impl ContractSchedule {
    pub fn constant(alpha: f64, game: &TabularGame) -> Self {
        Self {
            alpha: vec![vec![alpha; game.n_states]; game.horizon],
        }
    }

    pub fn at(&self, t: usize, s: usize) -> f64 {
        self.alpha[t][s]
    }

    pub fn validate(&self, game: &TabularGame) -> Result<()> {
        if self.alpha.len() != game.horizon || self.alpha.iter().any(|r| r.len() != game.n_states) {
            return Err(Error::TabularGame(format!(
                "contract schedule must be {} x {}",
                game.horizon, game.n_states
            )));
        }
        if self.alpha.iter().flatten().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::TabularGame("contract shares must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Fixed stochastic policy of a non-focal agent: `probs[t][s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticPolicy {
    pub probs: Vec<Vec<Vec<f64>>>,
}

impl StochasticPolicy {
    pub fn uniform(game: &TabularGame, agent: usize) -> Self {
        let k = game.n_choices(agent);
        Self {
            probs: vec![vec![vec![1.0 / k as f64; k]; game.n_states]; game.horizon],
        }
    }

    pub fn validate(&self, game: &TabularGame, agent: usize) -> Result<()> {
        if self.probs.len() != game.horizon {
            return Err(Error::TabularGame(format!("policy of agent {agent} has wrong horizon")));
        }
        for row in &self.probs {
            if row.len() != game.n_states {
                return Err(Error::TabularGame(format!("policy of agent {agent} has wrong state count")));
            }
            for p in row {
                check_distribution("opponent policy", p, game.n_choices(agent))?;
            }
        }
        Ok(())
    }
}

/// Deterministic policy of the focal agent: `action[t][s]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurePolicy {
    pub action: Vec<Vec<usize>>,
}

impl PurePolicy {
    pub fn constant(action: usize, game: &TabularGame) -> Self {
        Self {
            action: vec![vec![action; game.n_states]; game.horizon],
        }
    }
}

/// Focal agent plus fixed policies for everyone else.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<'a> {
    pub game: &'a TabularGame,
    pub schedule: &'a ContractSchedule,
    pub focal: usize,
    /// Indexed by agent; the focal entry is ignored.
    pub opponents: Vec<StochasticPolicy>,
}

impl<'a> Scenario<'a> {
    pub fn new(
        game: &'a TabularGame,
        schedule: &'a ContractSchedule,
        focal: usize,
        opponents: Vec<StochasticPolicy>,
    ) -> Result<Self> {
        if focal >= game.n_agents() {
            return Err(Error::TabularGame(format!("focal agent {focal} out of range")));
        }
        if opponents.len() != game.n_agents() {
            return Err(Error::TabularGame("need one (possibly unused) policy per agent".into()));
        }
        schedule.validate(game)?;
        for (i, p) in opponents.iter().enumerate() {
            if i != focal {
                p.validate(game, i)?;
            }
        }
        Ok(Self {
            game,
            schedule,
            focal,
            opponents,
        })
    }

    /// Single-agent game: no opponents to specify.
    pub fn solo(game: &'a TabularGame, schedule: &'a ContractSchedule) -> Result<Self> {
        let opponents = (0..game.n_agents()).map(|i| StochasticPolicy::uniform(game, i)).collect();
        Self::new(game, schedule, 0, opponents)
    }

    /// Distribution over the opponents' joint play at `(t, s)`, as
    /// `(full joint action with focal slot = focal_action, probability)`.
    pub fn joint_profiles(&self, t: usize, s: usize, focal_action: usize) -> Vec<(Vec<usize>, f64)> {
        let mut profiles = vec![(vec![0; self.game.n_agents()], 1.0)];
        for i in 0..self.game.n_agents() {
            if i == self.focal {
                for (j, _) in profiles.iter_mut() {
                    j[i] = focal_action;
                }
                continue;
            }
            let probs = &self.opponents[i].probs[t][s];
            profiles = profiles
                .into_iter()
                .flat_map(|(j, p)| {
                    probs.iter().enumerate().filter(|(_, q)| **q > 0.0).map(move |(a, q)| {
                        let mut j = j.clone();
                        j[i] = a;
                        (j, p * q)
                    })
                })
                .collect();
        }
        profiles
    }

    /// Expected payment plus continuation value of `action` at `(t, s)`,
    /// using `next_values` for time `t + 1`.
    pub fn q_value(&self, t: usize, s: usize, action: usize, next_values: &[f64]) -> f64 {
        let alpha = self.schedule.at(t, s);
        self.joint_profiles(t, s, action)
            .iter()
            .map(|(joint, p)| {
                let o = self.game.outcome(s, joint);
                let pay = self.game.payment(self.focal, action, alpha, o.rewards[self.focal]);
                let cont: f64 = o.next.iter().map(|&(s2, q)| q * next_values[s2]).sum();
                p * (pay + cont)
            })
            .sum()
    }
}
