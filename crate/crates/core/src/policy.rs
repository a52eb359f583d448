//! Thompson Sampling with Gaussian priors.
//!
//! Two policies live here:
//! - [`GaussianThompson`]: the plain algorithm. Each arm keeps a prior-offset
//!   empirical mean `μ̂ = Σr / (n + 1)` and every step draws
//!   `θ_i ~ N(μ̂_i, 1/(n_i + 1))` and plays the argmax.
//! - [`ModifiedThompson`]: first pulls every arm `b` times in index order,
//!   then samples with the variance scaled by `c ≥ 1`.
//!
//! Both draw `θ_i` in arm-index order using one uniform per arm (see
//! [`crate::gauss`]), so with `b = 0, c = 1` the two produce identical
//! traces from the same stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gauss::{normal_cdf, normal_pdf, standard_normal};

/// Half-width, in standard deviations, of the integration window used by
/// [`selection_probability_oracle`].
pub const QUADRATURE_HALF_WIDTH_SDS: f64 = 10.0;

/// Per-arm posterior summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    mu_hat: f64,
    n: u64,
}

impl ArmState {
    pub const fn new() -> Self {
        Self { mu_hat: 0.0, n: 0 }
    }

    /// Builds a state from raw sufficient statistics without checking that
    /// they are reachable from `[0, 1]` rewards.
    pub const fn from_parts(mu_hat: f64, n: u64) -> Self {
        Self { mu_hat, n }
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn pulls(&self) -> u64 {
        self.n
    }

    /// `μ̂ ← (μ̂ (n + 1) + r) / (n + 2)`, `n ← n + 1`.
    pub fn update(&mut self, reward: f64) {
        let n = self.n as f64;
        self.mu_hat = (self.mu_hat * (n + 1.0) + reward) / (n + 2.0);
        self.n += 1;
    }

    /// Sampling variance `c / (n + 1)`.
    pub fn posterior_variance(&self, variance_scale: f64) -> f64 {
        variance_scale / (self.n as f64 + 1.0)
    }
}

/// Parameters of the modified algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsConfig {
    /// Pre-pulls per arm (`b`).
    pub prepulls: u64,
    /// Variance multiplier (`c ≥ 1`).
    pub variance_scale: f64,
    /// Total horizon `T`, pre-pulls included.
    pub horizon: u64,
}

impl TsConfig {
    pub fn new(prepulls: u64, variance_scale: f64, horizon: u64) -> Result<Self> {
        let cfg = Self {
            prepulls,
            variance_scale,
            horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Plain Thompson Sampling: `b = 0`, `c = 1`.
    pub fn standard(horizon: u64) -> Self {
        Self {
            prepulls: 0,
            variance_scale: 1.0,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance_scale >= 1.0 && self.variance_scale.is_finite()) {
            return Err(invalid("c", format!("{} must be a finite value >= 1", self.variance_scale)));
        }
        if self.horizon == 0 {
            return Err(invalid("T", "horizon must be positive"));
        }
        Ok(())
    }

    /// Checks `b·N < T` on top of [`TsConfig::validate`].
    pub fn validate_for(&self, num_arms: usize) -> Result<()> {
        self.validate()?;
        let prepulls = self.total_prepulls(num_arms);
        if prepulls >= self.horizon {
            return Err(Error::InfeasibleHorizon {
                prepulls,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    pub fn total_prepulls(&self, num_arms: usize) -> u64 {
        self.prepulls.saturating_mul(num_arms as u64)
    }
}

/// One posterior sample per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Prepull,
    Sampling,
}

/// Result of [`ModifiedThompson::select_arm`]. `draw` is `None` during the
/// pre-pull phase, where the arm is fixed by the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub arm: usize,
    pub draw: Option<PosteriorDraw>,
}

/// A policy the simulator can drive: pick an arm, then learn its reward.
pub trait BanditPolicy {
    fn num_arms(&self) -> usize;

    fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize>;

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()>;

    /// Pull counts so far, by arm.
    fn pull_counts(&self) -> Vec<u64>;
}

fn check_reward(reward: f64) -> Result<()> {
    if (0.0..=1.0).contains(&reward) {
        Ok(())
    } else {
        Err(Error::RewardOutOfRange(reward))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Thompson Sampling with `N(0, 1)` priors and unit variance model.
#[derive(Debug, Clone)]
pub struct GaussianThompson {
    arms: Vec<ArmState>,
    horizon: u64,
    t: u64,
    theta: Vec<f64>,
    pending: Option<usize>,
}

impl GaussianThompson {
    pub fn new(num_arms: usize, horizon: u64) -> Result<Self> {
        if num_arms < 2 {
            return Err(invalid("N", format!("need at least 2 arms, got {num_arms}")));
        }
        if horizon == 0 {
            return Err(invalid("T", "horizon must be positive"));
        }
        Ok(Self {
            arms: vec![ArmState::new(); num_arms],
            horizon,
            t: 0,
            theta: vec![0.0; num_arms],
            pending: None,
        })
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn step(&self) -> u64 {
        self.t
    }

    /// Draws `θ_i ~ N(μ̂_i, 1/(n_i + 1))` and returns the argmax with the draw.
    pub fn select_arm<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Selection> {
        let arm = self.choose(rng)?;
        Ok(Selection {
            arm,
            draw: Some(PosteriorDraw {
                theta: self.theta.clone(),
            }),
        })
    }
}

impl BanditPolicy for GaussianThompson {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        if self.t >= self.horizon {
            return Err(Error::Exhausted(self.t));
        }
        for (theta, arm) in self.theta.iter_mut().zip(&self.arms) {
            let sd = (1.0 / (arm.n as f64 + 1.0)).sqrt();
            *theta = arm.mu_hat + sd * standard_normal(rng);
        }
        let a = argmax(&self.theta);
        self.pending = Some(a);
        Ok(a)
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_reward(reward)?;
        match self.pending {
            None => return Err(Error::NoPendingSelection),
            Some(expected) if expected != arm => {
                return Err(Error::UnexpectedArm { expected, got: arm })
            }
            Some(_) => {}
        }
        self.arms[arm].update(reward);
        self.t += 1;
        self.pending = None;
        Ok(())
    }

    fn pull_counts(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.n).collect()
    }
}

/// Thompson Sampling with `b` pre-pulls per arm and variance multiplier `c`.
///
/// Pull counts include pre-pulls, so the sampling variance is `c / (n + 1)`
/// with `n ≥ b` for every arm once sampling starts.
#[derive(Debug, Clone)]
pub struct ModifiedThompson {
    arms: Vec<ArmState>,
    config: TsConfig,
    t: u64,
    theta: Vec<f64>,
    pending: Option<usize>,
}

impl ModifiedThompson {
    pub fn new(num_arms: usize, config: TsConfig) -> Result<Self> {
        if num_arms < 2 {
            return Err(invalid("N", format!("need at least 2 arms, got {num_arms}")));
        }
        config.validate_for(num_arms)?;
        Ok(Self {
            arms: vec![ArmState::new(); num_arms],
            config,
            t: 0,
            theta: vec![0.0; num_arms],
            pending: None,
        })
    }

    /// Starts from given arm statistics, already past the pre-pull phase.
    pub fn with_arms(arms: Vec<ArmState>, config: TsConfig) -> Result<Self> {
        let mut state = Self::new(arms.len(), config)?;
        state.t = arms.iter().map(|a| a.n).sum::<u64>().max(state.prepull_steps());
        state.arms = arms;
        Ok(state)
    }

    pub fn config(&self) -> &TsConfig {
        &self.config
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn step(&self) -> u64 {
        self.t
    }

    fn prepull_steps(&self) -> u64 {
        self.config.total_prepulls(self.arms.len())
    }

    pub fn phase(&self) -> Phase {
        if self.t < self.prepull_steps() {
            Phase::Prepull
        } else {
            Phase::Sampling
        }
    }

    /// Arm scheduled for the next pre-pull, if still pre-pulling.
    pub fn scheduled_arm(&self) -> Option<usize> {
        match self.phase() {
            Phase::Prepull => Some((self.t / self.config.prepulls) as usize),
            Phase::Sampling => None,
        }
    }

    pub fn select_arm<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Selection> {
        let arm = self.choose(rng)?;
        let draw = match self.phase() {
            Phase::Prepull => None,
            Phase::Sampling => Some(PosteriorDraw {
                theta: self.theta.clone(),
            }),
        };
        Ok(Selection { arm, draw })
    }
}

impl BanditPolicy for ModifiedThompson {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        if self.t >= self.config.horizon {
            return Err(Error::Exhausted(self.t));
        }
        let a = match self.scheduled_arm() {
            Some(a) => a,
            None => {
                let c = self.config.variance_scale;
                for (theta, arm) in self.theta.iter_mut().zip(&self.arms) {
                    *theta = arm.mu_hat + arm.posterior_variance(c).sqrt() * standard_normal(rng);
                }
                argmax(&self.theta)
            }
        };
        self.pending = Some(a);
        Ok(a)
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_reward(reward)?;
        match self.pending {
            None => return Err(Error::NoPendingSelection),
            Some(expected) if expected != arm => {
                return Err(Error::UnexpectedArm { expected, got: arm })
            }
            Some(_) => {}
        }
        self.arms[arm].update(reward);
        self.t += 1;
        self.pending = None;
        Ok(())
    }

    fn pull_counts(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.n).collect()
    }
}

/// Heterogeneous Gaussian report-noisy-max: `argmax_i (values_i + X_i)` with
/// independent `X_i ~ N(0, sigmas_i²)`. Ties go to the lowest index.
pub fn rnm_heterogeneous<R: Rng + ?Sized>(
    values: &[f64],
    sigmas: &[f64],
    rng: &mut R,
) -> Result<usize> {
    if values.is_empty() {
        return Err(invalid("values", "empty candidate list"));
    }
    if values.len() != sigmas.len() {
        return Err(invalid(
            "sigmas",
            format!("{} sigmas for {} values", sigmas.len(), values.len()),
        ));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(invalid("sigmas", format!("{s} is not a positive scale")));
    }
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, (&v, &s)) in values.iter().zip(sigmas).enumerate() {
        let noisy = v + s * standard_normal(rng);
        if i == 0 || noisy > best_val {
            best = i;
            best_val = noisy;
        }
    }
    Ok(best)
}

/// Probability that each arm wins `argmax_i θ_i` with independent
/// `θ_i ~ N(mu_hat_i, c/(n_i + 1))`, by 1-D quadrature.
pub fn selection_probability_oracle(arms: &[ArmState], variance_scale: f64) -> Vec<f64> {
    let means: Vec<f64> = arms.iter().map(|a| a.mu_hat).collect();
    let sds: Vec<f64> = arms
        .iter()
        .map(|a| a.posterior_variance(variance_scale).sqrt())
        .collect();
    gaussian_argmax_probabilities(&means, &sds)
}

/// `P(i) = ∫ φ_i(x) Π_{j≠i} Φ_j(x) dx` for independent Gaussians. Each term
/// is integrated over `mean_i ± 10 sd_i`, which also covers report-noisy-max.
pub fn gaussian_argmax_probabilities(means: &[f64], sds: &[f64]) -> Vec<f64> {
    assert_eq!(means.len(), sds.len());
    (0..means.len())
        .map(|i| {
            let f = |x: f64| {
                let mut p = normal_pdf((x - means[i]) / sds[i]) / sds[i];
                for j in (0..means.len()).filter(|&j| j != i) {
                    p *= normal_cdf((x - means[j]) / sds[j]);
                }
                p
            };
            let lo = means[i] - QUADRATURE_HALF_WIDTH_SDS * sds[i];
            let hi = means[i] + QUADRATURE_HALF_WIDTH_SDS * sds[i];
            integrate(f, lo, hi, 1e-13)
        })
        .collect()
}

/// Adaptive Simpson over `[lo, hi]`, pre-split into uniform panels so narrow
/// features are not skipped by the first coarse estimate.
fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    const PANELS: usize = 32;
    let h = (hi - lo) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let a = lo + k as f64 * h;
            let b = a + h;
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            let whole = simpson(a, b, fa, fm, fb);
            simpson_step(&f, a, b, fa, fm, fb, whole, tol / PANELS as f64, 48)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let left = simpson(a, m, fa, lm, fm);
    let right = simpson(m, b, fm, rm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        left + right + diff / 15.0
    } else {
        simpson_step(f, a, m, fa, lm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, rm, fb, right, 0.5 * tol, depth - 1)
    }
}
