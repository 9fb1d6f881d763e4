//! Principal reward schemes.
//!
//! Every scheme starts from the net surplus `sum (1 - alpha) theta r` over
//! acting agents. Welfare regularization adds `lambda` times the acting
//! agents' contributions; fairness regularization adds `lambda * F(W_t)` for
//! an equality measure `F` of the cumulative wealth of all parties.

use serde::{Deserialize, Serialize};

use crate::contract::{PrincipalView, WealthLedger};
use crate::error::{Error, Result};
use crate::metrics;

pub const DEFAULT_FIX_ALPHA: f64 = 2.0 / 3.0;

fn default_fix_alpha() -> f64 {
    DEFAULT_FIX_ALPHA
}

/// Equality measure `F` used by fairness regularization. Each variant is
/// zero at perfect equality and negative otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessMeasure {
    /// `-Var(W)`, population variance.
    #[default]
    Variance,
    /// `-(1 - Jain(W))`.
    Jain,
    /// `-Gini(W)`; `-1` when the mean wealth is not positive.
    Gini,
}

impl FairnessMeasure {
    pub fn evaluate(self, wealths: &[f64]) -> f64 {
        match self {
            FairnessMeasure::Variance => -metrics::variance(wealths),
            FairnessMeasure::Jain => metrics::jain(wealths) - 1.0,
            FairnessMeasure::Gini => metrics::one_minus_gini(wealths).map_or(-1.0, |g| g - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// No principal: every contract pays the full share.
    Nop,
    /// Learned principal maximizing its own surplus.
    Greedy,
    /// Constant contract share.
    Fix {
        #[serde(default = "default_fix_alpha")]
        alpha: f64,
    },
    /// Welfare regularization.
    Wr { lambda: f64 },
    /// Fairness (wealth variance by default) regularization.
    Vr {
        lambda: f64,
        #[serde(default)]
        fairness: FairnessMeasure,
    },
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ObjectiveSpec::Fix { alpha } if !(0.0..=1.0).contains(&alpha) => Err(Error::Config(
                format!("fixed contract share {alpha} outside [0, 1]"),
            )),
            ObjectiveSpec::Wr { lambda } | ObjectiveSpec::Vr { lambda, .. }
                if !(lambda >= 0.0 && lambda.is_finite()) =>
            {
                Err(Error::Config(format!("lambda must be non-negative, got {lambda}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Nop => "nop",
            ObjectiveSpec::Greedy => "greedy",
            ObjectiveSpec::Fix { .. } => "fix",
            ObjectiveSpec::Wr { .. } => "wr",
            ObjectiveSpec::Vr { .. } => "vr",
        }
    }

    /// Altruism weight; zero for the unregularized schemes.
    pub fn lambda(&self) -> f64 {
        match *self {
            ObjectiveSpec::Wr { lambda } | ObjectiveSpec::Vr { lambda, .. } => lambda,
            _ => 0.0,
        }
    }

    /// Contract share when the principal does not learn.
    pub fn fixed_alpha(&self) -> Option<f64> {
        match *self {
            ObjectiveSpec::Nop => Some(1.0),
            ObjectiveSpec::Fix { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn principal_learns(&self) -> bool {
        self.fixed_alpha().is_none()
    }

    /// Without a principal the metrics are computed over the agents alone.
    pub fn principal_in_metrics(&self) -> bool {
        !matches!(self, ObjectiveSpec::Nop)
    }

    /// Short label such as `vr-1` or `fix`.
    pub fn label(&self) -> String {
        match self {
            ObjectiveSpec::Wr { lambda } | ObjectiveSpec::Vr { lambda, .. } => {
                format!("{}-{}", self.name(), lambda)
            }
            _ => self.name().to_string(),
        }
    }
}

/// The principal's learning reward for one step. `ledger` must already
/// include this step.
pub fn principal_reward(spec: &ObjectiveSpec, view: &PrincipalView, ledger: &WealthLedger) -> f64 {
    let surplus: f64 = view.acting_contributions().map(|c| (1.0 - view.alpha) * c).sum();
    match *spec {
        ObjectiveSpec::Nop | ObjectiveSpec::Greedy | ObjectiveSpec::Fix { .. } => surplus,
        ObjectiveSpec::Wr { lambda } => view
            .acting_contributions()
            .map(|c| (1.0 - view.alpha + lambda) * c)
            .sum(),
        ObjectiveSpec::Vr { lambda, fairness } => {
            surplus + lambda * fairness.evaluate(&ledger.parties())
        }
    }
}
