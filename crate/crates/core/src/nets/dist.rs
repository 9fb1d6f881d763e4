//! Action distributions used by the learners.

use rand::Rng;
use rand_distr::StandardNormal;

/// Lower bound on the principal's contract standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-3;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Discrete(usize),
    /// Contract share before clipping to the contract space.
    Continuous(f64),
}

impl Action {
    pub fn discrete(self) -> usize {
        match self {
            Action::Discrete(a) => a,
            Action::Continuous(_) => panic!("expected a discrete action"),
        }
    }

    pub fn continuous(self) -> f64 {
        match self {
            Action::Continuous(x) => x,
            Action::Discrete(_) => panic!("expected a continuous action"),
        }
    }
}

/// Softmax distribution, stored as normalized log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    pub log_probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Self {
            log_probs: logits.iter().map(|l| l - lse).collect(),
        }
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_probs.iter().map(|l| l.exp())
    }

    pub fn log_prob(&self, a: usize) -> f64 {
        self.log_probs[a]
    }

    pub fn entropy(&self) -> f64 {
        -self.log_probs.iter().map(|l| l.exp() * l).sum::<f64>()
    }

    /// KL(self || other).
    pub fn kl(&self, other: &Categorical) -> f64 {
        self.log_probs
            .iter()
            .zip(&other.log_probs)
            .map(|(p, q)| p.exp() * (p - q))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.log_probs.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian {
    pub fn log_prob(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * z * z - self.std.ln() - LN_SQRT_2PI
    }

    pub fn entropy(&self) -> f64 {
        0.5 + LN_SQRT_2PI + self.std.ln()
    }

    /// KL(self || other).
    pub fn kl(&self, other: &Gaussian) -> f64 {
        let d = self.mean - other.mean;
        (other.std / self.std).ln() + (self.std * self.std + d * d) / (2.0 * other.std * other.std)
            - 0.5
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let eps: f64 = rng.sample(StandardNormal);
        self.mean + self.std * eps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    Categorical(Categorical),
    Gaussian(Gaussian),
}

impl Dist {
    pub fn log_prob(&self, action: Action) -> f64 {
        match (self, action) {
            (Dist::Categorical(c), Action::Discrete(a)) => c.log_prob(a),
            (Dist::Gaussian(g), Action::Continuous(x)) => g.log_prob(x),
            _ => panic!("action kind does not match distribution"),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            Dist::Categorical(c) => c.entropy(),
            Dist::Gaussian(g) => g.entropy(),
        }
    }

    pub fn kl(&self, other: &Dist) -> f64 {
        match (self, other) {
            (Dist::Categorical(a), Dist::Categorical(b)) => a.kl(b),
            (Dist::Gaussian(a), Dist::Gaussian(b)) => a.kl(b),
            _ => panic!("KL between different distribution kinds"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        match self {
            Dist::Categorical(c) => Action::Discrete(c.sample(rng)),
            Dist::Gaussian(g) => Action::Continuous(g.sample(rng)),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
