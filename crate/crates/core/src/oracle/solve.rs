use rand::Rng;
use serde::Serialize;

use super::game::{PurePolicy, Scenario};

/// Bellman-consistency tolerance checked by [`ExactSolution::bellman_residual`].
pub const BELLMAN_TOL: f64 = 1e-10;
/// An acting step is an IR violation when its exact Q value is below this.
pub const IR_TOL: f64 = -1e-12;

/// Exact best-response values for the focal agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSolution {
    /// `values[t][s]` for `t` in `0..=horizon`; the last row is zero.
    pub values: Vec<Vec<f64>>,
    /// `q[t][s][a]` over augmented actions.
    pub q: Vec<Vec<Vec<f64>>>,
    pub best: PurePolicy,
}

impl ExactSolution {
    /// Largest `|V_t(s) - max_a Q_t(s, a)|` over the table.
    pub fn bellman_residual(&self) -> f64 {
        self.q
            .iter()
            .zip(&self.values)
            .flat_map(|(qt, vt)| {
                qt.iter().zip(vt).map(|(qs, v)| {
                    let m = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (m - v).abs()
                })
            })
            .fold(0.0, f64::max)
    }

    /// Expected value from the initial distribution.
    pub fn initial_value(&self, initial: &[f64]) -> f64 {
        initial.iter().zip(&self.values[0]).map(|(p, v)| p * v).sum()
    }
}

/// Index of the largest value; ties prefer `reject`, then the lowest index.
fn argmax_reject_first(q: &[f64], reject: usize) -> usize {
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if q[reject] == best {
        return reject;
    }
    q.iter().position(|v| *v == best).expect("non-empty action set")
}

pub fn backward_induction(scenario: &Scenario) -> ExactSolution {
    let game = scenario.game;
    let (h, n) = (game.horizon, game.n_states);
    let k = game.n_choices(scenario.focal);
    let reject = game.reject(scenario.focal);
    let mut values = vec![vec![0.0; n]; h + 1];
    let mut q = vec![vec![vec![0.0; k]; n]; h];
    let mut action = vec![vec![reject; n]; h];
    for t in (0..h).rev() {
        for s in 0..n {
            for a in 0..k {
                q[t][s][a] = scenario.q_value(t, s, a, &values[t + 1]);
            }
            let a = argmax_reject_first(&q[t][s], reject);
            action[t][s] = a;
            values[t][s] = q[t][s][a];
        }
    }
    ExactSolution {
        values,
        q,
        best: PurePolicy { action },
    }
}

/// Exact value table `[t][s]` of a fixed focal policy.
pub fn policy_evaluation(scenario: &Scenario, policy: &PurePolicy) -> Vec<Vec<f64>> {
    let game = scenario.game;
    let mut values = vec![vec![0.0; game.n_states]; game.horizon + 1];
    for t in (0..game.horizon).rev() {
        for s in 0..game.n_states {
            values[t][s] = scenario.q_value(t, s, policy.action[t][s], &values[t + 1]);
        }
    }
    values
}

/// Probability of being in each state at each time under `policy`.
pub fn occupancy(scenario: &Scenario, policy: &PurePolicy) -> Vec<Vec<f64>> {
    let game = scenario.game;
    let mut occ = vec![vec![0.0; game.n_states]; game.horizon];
    occ[0].clone_from(&game.initial);
    for t in 0..game.horizon - 1 {
        for s in 0..game.n_states {
            let mass = occ[t][s];
            if mass == 0.0 {
                continue;
            }
            for (joint, p) in scenario.joint_profiles(t, s, policy.action[t][s]) {
                for &(s2, q) in &game.outcome(s, &joint).next {
                    occ[t + 1][s2] += mass * p * q;
                }
            }
        }
    }
    occ
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrViolation {
    pub t: usize,
    pub state: usize,
    pub action: usize,
    /// Expected payment plus continuation value of the chosen action.
    pub value: f64,
}

/// Reachable `(t, s)` where the policy acts although doing so has a negative
/// expected return under the policy's own exact continuation values.
pub fn check_ir(scenario: &Scenario, policy: &PurePolicy) -> Vec<IrViolation> {
    let game = scenario.game;
    let reject = game.reject(scenario.focal);
    let values = policy_evaluation(scenario, policy);
    let occ = occupancy(scenario, policy);
    let mut out = Vec::new();
    for t in 0..game.horizon {
        for s in 0..game.n_states {
            let a = policy.action[t][s];
            if a == reject || occ[t][s] <= 0.0 {
                continue;
            }
            let value = scenario.q_value(t, s, a, &values[t + 1]);
            if value < IR_TOL {
                out.push(IrViolation { t, state: s, action: a, value });
            }
        }
    }
    out
}

/// Limited liability holds when no contract share is negative.
pub fn check_ll(grid: &[f64]) -> bool {
    grid.iter().all(|a| *a >= 0.0)
}

/// `values + U(-magnitude, magnitude)` entry-wise; the terminal row stays zero.
pub fn corrupt_values<R: Rng + ?Sized>(values: &[Vec<f64>], magnitude: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let last = values.len() - 1;
    values
        .iter()
        .enumerate()
        .map(|(t, row)| {
            row.iter()
                .map(|v| {
                    if t == last || magnitude == 0.0 {
                        *v
                    } else {
                        v + rng.gen_range(-magnitude..magnitude)
                    }
                })
                .collect()
        })
        .collect()
}

/// One-step lookahead policy against an estimated value table.
pub fn greedy_policy_from_values(scenario: &Scenario, values: &[Vec<f64>]) -> PurePolicy {
    let game = scenario.game;
    let k = game.n_choices(scenario.focal);
    let reject = game.reject(scenario.focal);
    let action = (0..game.horizon)
        .map(|t| {
            (0..game.n_states)
                .map(|s| {
                    let q: Vec<f64> = (0..k).map(|a| scenario.q_value(t, s, a, &values[t + 1])).collect();
                    argmax_reject_first(&q, reject)
                })
                .collect()
        })
        .collect();
    PurePolicy { action }
}

fn sample_index<R: Rng + ?Sized>(probs: impl IntoIterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.into_iter().enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// One simulated episode return of the focal agent under `policy`.
pub fn sample_return<R: Rng + ?Sized>(scenario: &Scenario, policy: &PurePolicy, rng: &mut R) -> f64 {
    let game = scenario.game;
    let mut s = sample_index(game.initial.iter().copied(), rng);
    let mut total = 0.0;
    for t in 0..game.horizon {
        let mut joint = vec![0; game.n_agents()];
        for (i, slot) in joint.iter_mut().enumerate() {
            *slot = if i == scenario.focal {
                policy.action[t][s]
            } else {
                sample_index(scenario.opponents[i].probs[t][s].iter().copied(), rng)
            };
        }
        let o = game.outcome(s, &joint);
        let a = joint[scenario.focal];
        total += game.payment(scenario.focal, a, scenario.schedule.at(t, s), o.rewards[scenario.focal]);
        s = o.next[sample_index(o.next.iter().map(|(_, p)| *p), rng)].0;
    }
    total
}

/// Mean and standard error of `n` simulated returns.
pub fn monte_carlo<R: Rng + ?Sized>(scenario: &Scenario, policy: &PurePolicy, n: usize, rng: &mut R) -> (f64, f64) {
    let xs: Vec<f64> = (0..n).map(|_| sample_return(scenario, policy, rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    (mean, (var / n as f64).sqrt())
}
