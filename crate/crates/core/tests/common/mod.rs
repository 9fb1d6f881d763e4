//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use pacoin_core::nets::{Action, Dist, PolicyParams};
use pacoin_core::oracle::{ContractSchedule, OracleFile, PurePolicy, StochasticPolicy, TabularGame};
use pacoin_core::ppo::{ppo_loss, ppo_loss_and_grad, LossCoefs, Minibatch};
use rand::Rng;

pub const TWO_STATE: &str = include_str!("../../../../configs/oracle/two_state.toml");
pub const TWO_AGENT: &str = include_str!("../../../../configs/oracle/two_agent.toml");

/// `1 - sum_i sum_j |w_i - w_j| / (2 n^2 mean)`, written out longhand.
pub fn gini_reference(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    let mut total = 0.0;
    let mut abs = 0.0;
    for i in 0..w.len() {
        total += w[i];
        for j in 0..w.len() {
            abs += (w[i] - w[j]).abs();
        }
    }
    let mu = total / n;
    1.0 - abs / (2.0 * n * n * mu)
}

/// `A_t = sum_k (gamma lambda)^k delta_{t+k}` summed explicitly per episode.
pub fn gae_reference(r: &[f64], v: &[f64], done: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    let n = r.len();
    let mut end = vec![n - 1; n];
    let mut e = n - 1;
    for t in (0..n).rev() {
        if done[t] {
            e = t;
        }
        end[t] = e;
    }
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            let mut w = 1.0;
            for k in t..=end[t] {
                let next = if k == end[t] { 0.0 } else { v[k + 1] };
                acc += w * (r[k] + gamma * next - v[k]);
                w *= gamma * lambda;
            }
            acc
        })
        .collect()
}

pub struct OwnedBatch {
    pub obs: Array2<f64>,
    pub actions: Vec<Action>,
    pub old_log_probs: Vec<f64>,
    pub old_dists: Vec<Dist>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl OwnedBatch {
    pub fn view(&self) -> Minibatch<'_> {
        Minibatch {
            obs: self.obs.view(),
            actions: &self.actions,
            old_log_probs: &self.old_log_probs,
            old_dists: &self.old_dists,
            advantages: &self.advantages,
            returns: &self.returns,
        }
    }
}

/// Samples a batch from a perturbed copy of `params`, so probability ratios
/// differ from one and some fall outside the clip range.
pub fn random_batch<R: Rng>(params: &PolicyParams, n: usize, rng: &mut R) -> OwnedBatch {
    let mut behavior = params.clone();
    let flat: Vec<f64> = behavior.flat().iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect();
    behavior.set_flat(&flat);
    let obs = Array2::from_shape_fn((n, params.obs_dim()), |_| rng.gen_range(-1.0..1.0));
    let mut b = OwnedBatch {
        obs,
        actions: Vec::new(),
        old_log_probs: Vec::new(),
        old_dists: Vec::new(),
        advantages: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        returns: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    for i in 0..n {
        let s = behavior.sample(b.obs.row(i).as_slice().unwrap(), rng);
        b.actions.push(s.action);
        b.old_log_probs.push(s.log_prob);
        b.old_dists.push(s.dist);
    }
    b
}

/// Norm-wise relative error `|g - g_fd| / max(|g|, |g_fd|)` between the
/// analytic gradient and central differences with step `h`.
pub fn gradient_error(params: &PolicyParams, batch: &OwnedBatch, coefs: &LossCoefs, h: f64) -> f64 {
    let mb = batch.view();
    let (_, grad) = ppo_loss_and_grad(params, &mb, coefs);
    let analytic = grad.flat(params.head);
    let base = params.flat();
    let mut probe = params.clone();
    let mut numeric = Vec::with_capacity(base.len());
    let mut x = base.clone();
    for i in 0..base.len() {
        x[i] = base[i] + h;
        probe.set_flat(&x);
        let up = ppo_loss(&probe, &mb, coefs).loss;
        x[i] = base[i] - h;
        probe.set_flat(&x);
        let down = ppo_loss(&probe, &mb, coefs).loss;
        x[i] = base[i];
        numeric.push((up - down) / (2.0 * h));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-300)
}

pub fn oracle_file(text: &str) -> OracleFile {
    OracleFile::from_toml(text).expect("fixture parses")
}

pub fn fixture_game(text: &str) -> TabularGame {
    TabularGame::from_spec(oracle_file(text).game).expect("fixture is valid")
}

/// Expected return of the focal agent from `(t, s)` by enumerating every
/// continuation path.
pub fn enumerate_value(
    game: &TabularGame,
    alpha: &ContractSchedule,
    focal: usize,
    opponents: &[StochasticPolicy],
    policy: &PurePolicy,
    t: usize,
    s: usize,
) -> f64 {
    if t == game.horizon {
        return 0.0;
    }
    let mine = policy.action[t][s];
    let mut profiles: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
    for i in 0..game.n_agents() {
        let mut next = Vec::new();
        for (prefix, p) in &profiles {
            if i == focal {
                let mut j = prefix.clone();
                j.push(mine);
                next.push((j, *p));
            } else {
                for (a, q) in opponents[i].probs[t][s].iter().enumerate() {
                    let mut j = prefix.clone();
                    j.push(a);
                    next.push((j, p * q));
                }
            }
        }
        profiles = next;
    }
    let mut total = 0.0;
    for (joint, p) in profiles {
        if p == 0.0 {
            continue;
        }
        let o = game.outcome(s, &joint);
        let pay = if mine == game.actions[focal] {
            0.0
        } else {
            alpha.alpha[t][s] * game.types[focal] * o.rewards[focal] - game.cost
        };
        for &(s2, q) in &o.next {
            total += p * q * (pay + enumerate_value(game, alpha, focal, opponents, policy, t + 1, s2));
        }
    }
    total
}

/// Every deterministic Markov policy of the focal agent.
pub fn all_pure_policies(game: &TabularGame, focal: usize) -> Vec<PurePolicy> {
    let k = game.actions[focal] + 1;
    let slots = game.horizon * game.n_states;
    let count = k.pow(slots as u32);
    (0..count)
        .map(|mut code| {
            let mut action = vec![vec![0; game.n_states]; game.horizon];
            for row in action.iter_mut() {
                for a in row.iter_mut() {
                    *a = code % k;
                    code /= k;
                }
            }
            PurePolicy { action }
        })
        .collect()
}
