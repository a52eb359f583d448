//! Reward environments.
//!
//! Arms are fixed reward distributions on `[0, 1]`. Each sample consumes
//! exactly one uniform from the caller's stream (inverse-CDF sampling), so a
//! seed fully determines a reward sequence.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// True reward distribution of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardModel {
    /// 1 with probability `p`, else 0.
    Bernoulli { p: f64 },
    /// Exponential(`lambda`) conditioned on `[0, 1]`, density
    /// `λ e^{−λx} / (1 − e^{−λ})`.
    TruncExp { lambda: f64 },
}

impl RewardModel {
    pub fn bernoulli(p: f64) -> Result<Self> {
        let m = RewardModel::Bernoulli { p };
        m.validate()?;
        Ok(m)
    }

    pub fn trunc_exp(lambda: f64) -> Result<Self> {
        let m = RewardModel::TruncExp { lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardModel::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(invalid("p", format!("{p} is not a probability")))
            }
            RewardModel::TruncExp { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(invalid("lambda", format!("{lambda} is not a positive rate")))
            }
            _ => Ok(()),
        }
    }

    /// Draws one reward in `[0, 1]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.sample_from_uniform(u)
    }

    /// Inverse-CDF transform of a uniform `u ∈ [0, 1)`.
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        match *self {
            RewardModel::Bernoulli { p } => {
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::TruncExp { lambda } => {
                // x = −ln(1 − u(1 − e^{−λ})) / λ
                let mass = -(-lambda).exp_m1();
                let x = -(-u * mass).ln_1p() / lambda;
                x.clamp(0.0, 1.0)
            }
        }
    }

    /// Closed-form mean.
    pub fn analytic_mean(&self) -> f64 {
        match *self {
            RewardModel::Bernoulli { p } => p,
            RewardModel::TruncExp { lambda } => {
                // 1/λ − e^{−λ}/(1 − e^{−λ}) = 1/λ − 1/(e^{λ} − 1)
                1.0 / lambda - 1.0 / lambda.exp_m1()
            }
        }
    }

    /// Variance of one draw; used for Monte-Carlo standard errors.
    pub fn variance(&self) -> f64 {
        match *self {
            RewardModel::Bernoulli { p } => p * (1.0 - p),
            RewardModel::TruncExp { lambda } => {
                // E[X²] = 2/λ² − (1 + 2/λ) / (e^{λ} − 1)
                let second = 2.0 / (lambda * lambda) - (1.0 + 2.0 / lambda) / lambda.exp_m1();
                let m = self.analytic_mean();
                second - m * m
            }
        }
    }
}

/// Ordered set of arms. Order is preserved as given; the best arm is not
/// moved to the front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditInstance {
    arms: Vec<RewardModel>,
}

impl BanditInstance {
    pub fn new(arms: Vec<RewardModel>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(invalid("arms", format!("need at least 2 arms, got {}", arms.len())));
        }
        for arm in &arms {
            arm.validate()?;
        }
        Ok(Self { arms })
    }

    pub fn bernoulli(ps: &[f64]) -> Result<Self> {
        Self::new(ps.iter().map(|&p| RewardModel::Bernoulli { p }).collect())
    }

    pub fn trunc_exp(lambdas: &[f64]) -> Result<Self> {
        Self::new(
            lambdas
                .iter()
                .map(|&lambda| RewardModel::TruncExp { lambda })
                .collect(),
        )
    }

    pub fn arms(&self) -> &[RewardModel] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(RewardModel::analytic_mean).collect()
    }

    /// `μ* = max_i μ_i`.
    pub fn best_mean(&self) -> f64 {
        self.arms
            .iter()
            .map(RewardModel::analytic_mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Suboptimality gaps `Δ_i = μ* − μ_i`.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.arms.iter().map(|a| best - a.analytic_mean()).collect()
    }

    /// Smallest strictly positive gap, if any arm is suboptimal.
    pub fn min_positive_gap(&self) -> Option<f64> {
        self.gaps()
            .into_iter()
            .filter(|&d| d > 0.0)
            .min_by(|a, b| a.total_cmp(b))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.arms.len() < 2 {
            return Err(invalid("arms", "need at least 2 arms"));
        }
        self.arms.iter().try_for_each(RewardModel::validate)
    }
}
