//! Clipped-surrogate PPO loss with KL penalty, entropy bonus and value baseline.
//!
//! ```text
//! loss = -mean(min(rho A, clip(rho, 1-eps, 1+eps) A))
//!        + beta * mean(KL(behavior || current))
//!        - entropy_cost * mean(H(current))
//!        + baseline_coef * mean((V - return)^2)
//! ```

use ndarray::{Array2, ArrayView2};

use crate::nets::{sigmoid, Action, Dist, Head, PolicyGrad, PolicyParams, SIGMA_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefs {
    pub clip_eps: f64,
    pub kl_beta: f64,
    pub entropy_cost: f64,
    pub baseline_coef: f64,
}

/// Samples a loss is evaluated on. `old_dists` are the behavior
/// distributions the actions were drawn from.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub actions: &'a [Action],
    pub old_log_probs: &'a [f64],
    pub old_dists: &'a [Dist],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub loss: f64,
    pub surrogate: f64,
    pub kl: f64,
    pub entropy: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
}

/// `min(rho A, clip(rho, 1 - eps, 1 + eps) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    unclipped.min(clipped)
}

pub fn ppo_loss(params: &PolicyParams, mb: &Minibatch<'_>, coefs: &LossCoefs) -> LossStats {
    evaluate(params, mb, coefs, false).0
}

pub fn ppo_loss_and_grad(
    params: &PolicyParams,
    mb: &Minibatch<'_>,
    coefs: &LossCoefs,
) -> (LossStats, PolicyGrad) {
    let (stats, grad) = evaluate(params, mb, coefs, true);
    (stats, grad.expect("gradient requested"))
}

/// Mean KL(behavior || current) over the batch.
pub fn mean_kl(params: &PolicyParams, obs: ArrayView2<'_, f64>, old_dists: &[Dist]) -> f64 {
    let trace = params.actor_forward(obs);
    let dists = params.dists(trace.output());
    old_dists.iter().zip(&dists).map(|(o, d)| o.kl(d)).sum::<f64>() / dists.len().max(1) as f64
}

fn evaluate(
    params: &PolicyParams,
    mb: &Minibatch<'_>,
    coefs: &LossCoefs,
    with_grad: bool,
) -> (LossStats, Option<PolicyGrad>) {
    let n = mb.len();
    let inv_n = 1.0 / n as f64;
    let actor = params.actor_forward(mb.obs);
    let critic = params.critic_forward(mb.obs);
    let out = actor.output();
    let values = critic.output().column(0);

    let mut stats = LossStats::default();
    let mut d_actor = Array2::zeros(out.raw_dim());
    let mut d_value = Array2::zeros((n, 1));
    let mut d_log_std = 0.0;

    let (std, std_floored) = match params.head {
        Head::Gaussian { log_std } => (log_std.exp().max(SIGMA_FLOOR), log_std.exp() < SIGMA_FLOOR),
        Head::Categorical => (f64::NAN, false),
    };

    for i in 0..n {
        let adv = mb.advantages[i];
        let (log_prob, kl, entropy);
        // dL/dlog_prob from the surrogate, before the 1/n mean
        let d_logp;
        match (&params.head, mb.actions[i], &mb.old_dists[i]) {
            (Head::Categorical, Action::Discrete(a), Dist::Categorical(old)) => {
                let logits = out.row(i);
                let cur = crate::nets::Categorical::from_logits(&logits.to_vec());
                log_prob = cur.log_prob(a);
                kl = old.kl(&cur);
                entropy = cur.entropy();
                let ratio = (log_prob - mb.old_log_probs[i]).exp();
                d_logp = surrogate_slope(ratio, adv, coefs.clip_eps, &mut stats);
                if with_grad {
                    let mut row = d_actor.row_mut(i);
                    for (j, lp) in cur.log_probs.iter().enumerate() {
                        let p = lp.exp();
                        let onehot = if j == a { 1.0 } else { 0.0 };
                        let g_logp = onehot - p;
                        let g_kl = p - old.log_probs[j].exp();
                        let g_ent = -p * (lp + entropy);
                        row[j] = inv_n
                            * (-d_logp * g_logp + coefs.kl_beta * g_kl - coefs.entropy_cost * g_ent);
                    }
                }
            }
            (Head::Gaussian { .. }, Action::Continuous(x), Dist::Gaussian(old)) => {
                let mu = sigmoid(out[[i, 0]]);
                let var = std * std;
                let diff = x - mu;
                log_prob = -0.5 * diff * diff / var - std.ln() - 0.918_938_533_204_672_8;
                let md = old.mean - mu;
                kl = (std / old.std).ln() + (old.std * old.std + md * md) / (2.0 * var) - 0.5;
                entropy = 0.5 + 0.918_938_533_204_672_8 + std.ln();
                let ratio = (log_prob - mb.old_log_probs[i]).exp();
                d_logp = surrogate_slope(ratio, adv, coefs.clip_eps, &mut stats);
                if with_grad {
                    let dlogp_dmu = diff / var;
                    let dkl_dmu = -md / var;
                    let d_mu = -d_logp * dlogp_dmu + coefs.kl_beta * dkl_dmu;
                    d_actor[[i, 0]] = inv_n * d_mu * mu * (1.0 - mu);
                    if !std_floored {
                        let dlogp_dls = diff * diff / var - 1.0;
                        let dkl_dls = 1.0 - (old.std * old.std + md * md) / var;
                        d_log_std += inv_n
                            * (-d_logp * dlogp_dls + coefs.kl_beta * dkl_dls - coefs.entropy_cost);
                    }
                }
            }
            _ => panic!("action kind does not match the policy head"),
        }
        let ratio = (log_prob - mb.old_log_probs[i]).exp();
        stats.surrogate += clipped_surrogate(ratio, adv, coefs.clip_eps);
        stats.kl += kl;
        stats.entropy += entropy;
        let err = values[i] - mb.returns[i];
        stats.value_loss += err * err;
        if with_grad {
            d_value[[i, 0]] = inv_n * coefs.baseline_coef * 2.0 * err;
        }
    }
    stats.surrogate *= inv_n;
    stats.kl *= inv_n;
    stats.entropy *= inv_n;
    stats.value_loss *= inv_n;
    stats.clip_fraction *= inv_n;
    stats.loss = -stats.surrogate + coefs.kl_beta * stats.kl - coefs.entropy_cost * stats.entropy
        + coefs.baseline_coef * stats.value_loss;

    let grad = with_grad.then(|| params.backward(&actor, d_actor, &critic, d_value, d_log_std));
    (stats, grad)
}

/// d min(rho A, clip(rho) A) / d log pi; counts clipped samples.
fn surrogate_slope(ratio: f64, adv: f64, eps: f64, stats: &mut LossStats) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    if ratio * adv <= clipped * adv {
        ratio * adv
    } else {
        stats.clip_fraction += 1.0;
        0.0
    }
}
