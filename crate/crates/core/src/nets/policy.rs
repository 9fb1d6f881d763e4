use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::dist::{sigmoid, Action, Categorical, Dist, Gaussian, SIGMA_FLOOR};
use super::mlp::{dense_slices, dense_slices_mut, Mlp, MlpGrad, MlpTrace};

pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];
const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
const POLICY_GAIN: f64 = 0.01;
const VALUE_GAIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Head {
    /// Softmax over the actor outputs.
    Categorical,
    /// Mean `sigmoid(actor output)`, state-independent log standard deviation.
    Gaussian { log_std: f64 },
}

/// Actor and critic networks for one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub critic: Mlp,
    pub head: Head,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrad {
    pub actor: MlpGrad,
    pub critic: MlpGrad,
    pub log_std: f64,
}

/// One draw from a learner's policy, with what PPO needs to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub action: Action,
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
    pub dist: Dist,
}

impl ActionSample {
    /// Contract share clipped into `[lo, hi]`; the log-probability stays at the raw draw.
    pub fn contract(&self, lo: f64, hi: f64) -> f64 {
        self.action.continuous().clamp(lo, hi)
    }
}

impl PolicyParams {
    pub fn categorical<R: Rng + ?Sized>(
        obs_dim: usize,
        n_actions: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Self {
        Self {
            actor: Mlp::new(&sizes(obs_dim, hidden, n_actions), HIDDEN_GAIN, POLICY_GAIN, rng),
            critic: Mlp::new(&sizes(obs_dim, hidden, 1), HIDDEN_GAIN, VALUE_GAIN, rng),
            head: Head::Categorical,
        }
    }

    pub fn gaussian<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: &[usize],
        init_log_std: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            actor: Mlp::new(&sizes(obs_dim, hidden, 1), HIDDEN_GAIN, POLICY_GAIN, rng),
            critic: Mlp::new(&sizes(obs_dim, hidden, 1), HIDDEN_GAIN, VALUE_GAIN, rng),
            head: Head::Gaussian {
                log_std: init_log_std,
            },
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn std(&self) -> Option<f64> {
        match self.head {
            Head::Gaussian { log_std } => Some(log_std.exp().max(SIGMA_FLOOR)),
            Head::Categorical => None,
        }
    }

    pub fn actor_forward(&self, obs: ArrayView2<f64>) -> MlpTrace {
        self.actor.forward(obs)
    }

    pub fn critic_forward(&self, obs: ArrayView2<f64>) -> MlpTrace {
        self.critic.forward(obs)
    }

    pub fn values(&self, obs: ArrayView2<f64>) -> Array1<f64> {
        self.critic_forward(obs).output().column(0).to_owned()
    }

    /// Distribution for every row of actor output.
    pub fn dists(&self, actor_out: &Array2<f64>) -> Vec<Dist> {
        match self.head {
            Head::Categorical => actor_out
                .axis_iter(Axis(0))
                .map(|row| Dist::Categorical(Categorical::from_logits(row.as_slice().unwrap_or(&row.to_vec()))))
                .collect(),
            Head::Gaussian { .. } => {
                let std = self.std().expect("gaussian head");
                actor_out
                    .column(0)
                    .iter()
                    .map(|&z| Dist::Gaussian(Gaussian { mean: sigmoid(z), std }))
                    .collect()
            }
        }
    }

    /// Samples one action per observation row, row `k` drawing from `rngs[k]`.
    pub fn sample_batch<R: Rng>(&self, obs: ArrayView2<f64>, rngs: &mut [R]) -> Vec<ActionSample> {
        assert_eq!(obs.nrows(), rngs.len());
        let actor = self.actor_forward(obs);
        let values = self.values(obs);
        self.dists(actor.output())
            .into_iter()
            .zip(rngs.iter_mut())
            .zip(values.iter())
            .map(|((dist, rng), &value)| {
                let action = dist.sample(rng);
                ActionSample {
                    action,
                    log_prob: dist.log_prob(action),
                    entropy: dist.entropy(),
                    value,
                    dist,
                }
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, obs: &[f64], rng: &mut R) -> ActionSample {
        let row = ArrayView2::from_shape((1, obs.len()), obs).expect("observation row");
        self.sample_batch(row, std::slice::from_mut(rng)).remove(0)
    }

    /// Backpropagates output-level loss gradients into parameter gradients.
    /// `d_actor` and `d_value` hold one row per sample.
    pub fn backward(
        &self,
        actor_trace: &MlpTrace,
        d_actor: Array2<f64>,
        critic_trace: &MlpTrace,
        d_value: Array2<f64>,
        d_log_std: f64,
    ) -> PolicyGrad {
        PolicyGrad {
            actor: self.actor.backward(actor_trace, d_actor),
            critic: self.critic.backward(critic_trace, d_value),
            log_std: d_log_std,
        }
    }

    pub fn zero_grad(&self) -> PolicyGrad {
        PolicyGrad {
            actor: self.actor.zero_grad(),
            critic: self.critic.zero_grad(),
            log_std: 0.0,
        }
    }

    /// Parameter tensors in a fixed order: actor layers, critic layers, log std.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = dense_slices(&self.actor.layers)
            .chain(dense_slices(&self.critic.layers))
            .collect();
        if let Head::Gaussian { log_std } = &self.head {
            out.push(std::slice::from_ref(log_std));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = dense_slices_mut(&mut self.actor.layers)
            .chain(dense_slices_mut(&mut self.critic.layers))
            .collect();
        if let Head::Gaussian { log_std } = &mut self.head {
            out.push(std::slice::from_mut(log_std));
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&values[offset..offset + t.len()]);
            offset += t.len();
        }
        assert_eq!(offset, values.len(), "flat parameter length");
    }
}

impl PolicyGrad {
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = dense_slices(&self.actor.layers)
            .chain(dense_slices(&self.critic.layers))
            .collect();
        out.push(std::slice::from_ref(&self.log_std));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = dense_slices_mut(&mut self.actor.layers)
            .chain(dense_slices_mut(&mut self.critic.layers))
            .collect();
        out.push(std::slice::from_mut(&mut self.log_std));
        out
    }

    /// Flattened in the same order as [`PolicyParams::flat`] for a head of `head`.
    pub fn flat(&self, head: Head) -> Vec<f64> {
        let mut v: Vec<f64> = self.tensors().concat();
        if head == Head::Categorical {
            v.pop();
        }
        v
    }

    pub fn add_assign(&mut self, other: &PolicyGrad) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

fn sizes(obs_dim: usize, hidden: &[usize], out: usize) -> Vec<usize> {
    let mut s = vec![obs_dim];
    s.extend_from_slice(hidden);
    s.push(out);
    s
}
