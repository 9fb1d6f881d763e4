//! Equality and welfare measures over a wealth vector.

use serde::{Deserialize, Serialize};

/// `1 - Gini` by the direct double sum `1 - sum_ij |w_i - w_j| / (2 n^2 mu)`.
///
/// Returns `None` when the vector is empty or its mean is not positive, where
/// the index is undefined.
pub fn one_minus_gini(wealths: &[f64]) -> Option<f64> {
    let n = wealths.len();
    let mu = mean(wealths)?;
    if !(mu > 0.0) {
        return None;
    }
    let abs_diff: f64 = wealths
        .iter()
        .map(|wi| wealths.iter().map(|wj| (wi - wj).abs()).sum::<f64>())
        .sum();
    Some(1.0 - abs_diff / (2.0 * (n * n) as f64 * mu))
}

/// Same quantity from the sorted-rank identity
/// `sum_ij |w_i - w_j| = 2 sum_i (2i - n + 1) w_(i)`.
pub fn one_minus_gini_sorted(wealths: &[f64]) -> Option<f64> {
    let n = wealths.len();
    let mu = mean(wealths)?;
    if !(mu > 0.0) {
        return None;
    }
    let mut sorted = wealths.to_vec();
    sorted.sort_by(f64::total_cmp);
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, w)| (2.0 * i as f64 - n as f64 + 1.0) * w)
        .sum();
    Some(1.0 - weighted / ((n * n) as f64 * mu))
}

pub fn welfare(wealths: &[f64]) -> f64 {
    wealths.iter().sum()
}

/// Wealth of the poorest party.
pub fn rawlsian(wealths: &[f64]) -> f64 {
    wealths.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn aie(one_minus_gini: Option<f64>, welfare: f64) -> Option<f64> {
    one_minus_gini.map(|g| g * welfare)
}

/// Population variance.
pub fn variance(wealths: &[f64]) -> f64 {
    match mean(wealths) {
        Some(mu) => wealths.iter().map(|w| (w - mu) * (w - mu)).sum::<f64>() / wealths.len() as f64,
        None => 0.0,
    }
}

/// Jain's fairness index `(sum w)^2 / (n sum w^2)`; 1 for an all-zero vector.
pub fn jain(wealths: &[f64]) -> f64 {
    let sq: f64 = wealths.iter().map(|w| w * w).sum();
    if sq == 0.0 {
        return 1.0;
    }
    let s: f64 = wealths.iter().sum();
    s * s / (wealths.len() as f64 * sq)
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// The four reported metrics for one wealth vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub one_minus_gini: Option<f64>,
    pub welfare: f64,
    pub rawlsian: f64,
    pub aie: Option<f64>,
}

impl MetricSet {
    pub fn of(wealths: &[f64]) -> Self {
        let g = one_minus_gini(wealths);
        let w = welfare(wealths);
        Self {
            one_minus_gini: g,
            welfare: w,
            rawlsian: rawlsian(wealths),
            aie: aie(g, w),
        }
    }
}

/// One row of a training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub seed: u64,
    pub objective: String,
    pub lambda: f64,
    pub mean_alpha: f64,
    pub reject_rate_red: f64,
    pub reject_rate_blue: f64,
    pub wealth_red: f64,
    pub wealth_blue: f64,
    pub wealth_principal: f64,
    pub welfare: f64,
    pub one_minus_gini: Option<f64>,
    pub rawlsian: f64,
    pub aie: Option<f64>,
    pub kl_principal: f64,
    pub entropy_red: f64,
    pub entropy_blue: f64,
}

pub const CSV_HEADER: [&str; 17] = [
    "iteration",
    "seed",
    "objective",
    "lambda",
    "mean_alpha",
    "reject_rate_red",
    "reject_rate_blue",
    "wealth_red",
    "wealth_blue",
    "wealth_principal",
    "welfare",
    "one_minus_gini",
    "rawlsian",
    "aie",
    "kl_principal",
    "entropy_red",
    "entropy_blue",
];

impl MetricsRow {
    /// Wealth vector the metrics are computed over: red, blue and, unless
    /// excluded, the principal.
    pub fn parties(&self, include_principal: bool) -> Vec<f64> {
        let mut w = vec![self.wealth_red, self.wealth_blue];
        if include_principal {
            w.push(self.wealth_principal);
        }
        w
    }
}
