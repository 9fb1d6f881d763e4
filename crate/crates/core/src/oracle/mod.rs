//! Exact solver for small finite-horizon principal-agent games.
//!
//! The principal is replaced by a deterministic contract schedule and all
//! but one agent by fixed stochastic policies, which leaves a finite MDP for
//! the focal agent. Backward induction gives its best response; the
//! remaining checks look at individual rationality of arbitrary policies
//! and limited liability of a contract grid.

mod game;
mod solve;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use game::{
    ContractSchedule, Outcome, OutcomeSpec, PurePolicy, Scenario, StochasticPolicy, TabularGame, TabularGameSpec,
};
pub use solve::{
    backward_induction, check_ir, check_ll, corrupt_values, greedy_policy_from_values, monte_carlo, occupancy,
    policy_evaluation, sample_return, ExactSolution, IrViolation, BELLMAN_TOL, IR_TOL,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Constant { alpha: f64 },
    Table { table: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpponentSpec {
    pub agent: usize,
    /// `probs[t][s][a]`.
    pub probs: Vec<Vec<Vec<f64>>>,
}

/// Input file of the `oracle` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFile {
    pub game: TabularGameSpec,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub focal: usize,
    /// Agents not listed here play uniformly at random.
    #[serde(default)]
    pub opponents: Vec<OpponentSpec>,
    /// Magnitude of the additive value noise for the estimation-error check.
    #[serde(default)]
    pub noise: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub monte_carlo_rollouts: usize,
}

impl OracleFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseCheck {
    pub magnitude: f64,
    pub policy: PurePolicy,
    pub violations: Vec<IrViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCheck {
    pub rollouts: usize,
    pub mean: f64,
    pub std_error: f64,
    pub within_3_se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub initial_value: f64,
    pub bellman_residual: f64,
    pub solution: ExactSolution,
    pub best_response_ir_violations: Vec<IrViolation>,
    pub limited_liability: bool,
    pub noise: Option<NoiseCheck>,
    pub monte_carlo: Option<MonteCarloCheck>,
}

impl OracleReport {
    /// True when every exact check holds. Noise-induced violations are an
    /// expected finding, not a failure.
    pub fn ok(&self) -> bool {
        self.bellman_residual <= BELLMAN_TOL
            && self.best_response_ir_violations.is_empty()
            && self.limited_liability
            && self.monte_carlo.as_ref().is_none_or(|m| m.within_3_se)
    }
}

pub fn run_oracle(file: OracleFile) -> Result<OracleReport> {
    let contract_grid = file.game.contract_grid.clone();
    let game = TabularGame::from_spec(file.game)?;
    let schedule = match file.schedule {
        ScheduleSpec::Constant { alpha } => ContractSchedule::constant(alpha, &game),
        ScheduleSpec::Table { table } => ContractSchedule { alpha: table },
    };
    let mut opponents: Vec<StochasticPolicy> =
        (0..game.n_agents()).map(|i| StochasticPolicy::uniform(&game, i)).collect();
    for o in file.opponents {
        if o.agent >= game.n_agents() || o.agent == file.focal {
            return Err(Error::TabularGame(format!("bad opponent index {}", o.agent)));
        }
        opponents[o.agent] = StochasticPolicy { probs: o.probs };
    }
    let scenario = Scenario::new(&game, &schedule, file.focal, opponents)?;
    let solution = backward_induction(&scenario);
    let best_response_ir_violations = check_ir(&scenario, &solution.best);

    let mut grid = contract_grid;
    grid.extend(schedule.alpha.iter().flatten());
    let limited_liability = check_ll(&grid);

    let mut rng = ChaCha8Rng::seed_from_u64(file.seed);
    let noise = file.noise.map(|magnitude| {
        let noisy = corrupt_values(&solution.values, magnitude, &mut rng);
        let policy = greedy_policy_from_values(&scenario, &noisy);
        let violations = check_ir(&scenario, &policy);
        NoiseCheck {
            magnitude,
            policy,
            violations,
        }
    });
    let initial_value = solution.initial_value(&game.initial);
    let monte_carlo = (file.monte_carlo_rollouts > 1).then(|| {
        let (mean, std_error) = monte_carlo(&scenario, &solution.best, file.monte_carlo_rollouts, &mut rng);
        MonteCarloCheck {
            rollouts: file.monte_carlo_rollouts,
            mean,
            std_error,
            within_3_se: (mean - initial_value).abs() <= 3.0 * std_error + 1e-12,
        }
    });
    Ok(OracleReport {
        initial_value,
        bellman_residual: solution.bellman_residual(),
        solution,
        best_response_ir_violations,
        limited_liability,
        noise,
        monte_carlo,
    })
}
