//! Privacy accountant for Gaussian Thompson Sampling.
//!
//! Three routes from a run of `T` steps to an `(ε, δ)` guarantee:
//! - GDP: each step is a Gaussian mechanism with parameter
//!   `1/√(c(b+1))` (or `√½` for the plain algorithm once every arm has one
//!   observation). Steps compose by root-sum-of-squares and the total
//!   converts exactly to a curve `δ(ε)`.
//! - RDP: each step is `(α, α/4)`-RDP, composing additively, converted with
//!   `ε = γ + ln(1/δ)/(α − 1)`.
//! - Advanced composition of the per-step report-noisy-max guarantee.
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gauss::log_normal_cdf;

pub use crate::gauss::normal_cdf;

/// Absolute tolerance of the ε bisection in [`gdp_to_epsilon`].
pub const EPSILON_TOLERANCE: f64 = 1e-9;

/// Fraction of `δ_total` spent on per-step slack in the advanced-composition
/// curve: per-step `δ = δ_total / (2T)`, leaving `δ_total − Tδ = δ_total/2`.
pub const ADV_DELTA_SPLIT: f64 = 0.5;

/// GDP parameter `η > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct GdpBudget(f64);

impl GdpBudget {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta.is_finite() {
            Ok(Self(eta))
        } else {
            Err(invalid("eta", format!("{eta} must be positive and finite")))
        }
    }

    pub fn eta(self) -> f64 {
        self.0
    }
}

/// An `(ε, δ)` guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpPoint {
    pub epsilon: f64,
    pub delta: f64,
}

impl DpPoint {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(invalid("epsilon", format!("{epsilon} is negative")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid("delta", format!("{delta} is outside [0, 1]")));
        }
        Ok(Self { epsilon, delta })
    }
}

/// An `(α, γ)` Rényi guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdpPoint {
    pub alpha: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrivacyMethod {
    Gdp,
    Rdp,
    #[serde(rename = "advdp")]
    AdvDp,
}

impl PrivacyMethod {
    pub const ALL: [PrivacyMethod; 3] = [PrivacyMethod::Gdp, PrivacyMethod::Rdp, PrivacyMethod::AdvDp];

    pub fn as_str(self) -> &'static str {
        match self {
            PrivacyMethod::Gdp => "gdp",
            PrivacyMethod::Rdp => "rdp",
            PrivacyMethod::AdvDp => "advdp",
        }
    }
}

impl std::fmt::Display for PrivacyMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PrivacyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gdp" => Ok(PrivacyMethod::Gdp),
            "rdp" => Ok(PrivacyMethod::Rdp),
            "advdp" | "adv_dp" | "adv" => Ok(PrivacyMethod::AdvDp),
            other => Err(invalid("method", format!("unknown privacy method `{other}`"))),
        }
    }
}

/// Which per-step GDP bound to compose.
///
/// `Original` is the `√½` bound of the plain algorithm (valid once each arm
/// has at least one observation). `Modified` is `1/√(c(b+1))`, which at
/// `b = 0, c = 1` gives `1` per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GdpPath {
    Original,
    Modified,
}

impl GdpPath {
    /// `Original` for plain Thompson Sampling (`b = 0, c = 1`), else `Modified`.
    pub fn for_params(b: u64, c: f64) -> Self {
        if b == 0 && c == 1.0 {
            GdpPath::Original
        } else {
            GdpPath::Modified
        }
    }
}

/// Inputs of one accountant evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountantQuery {
    pub horizon: u64,
    pub num_arms: usize,
    pub prepulls: u64,
    pub variance_scale: f64,
    pub method: PrivacyMethod,
}

impl AccountantQuery {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("T", "horizon must be positive"));
        }
        if self.num_arms < 2 {
            return Err(invalid("N", format!("need at least 2 arms, got {}", self.num_arms)));
        }
        if !(self.variance_scale >= 1.0 && self.variance_scale.is_finite()) {
            return Err(invalid("c", format!("{} must be >= 1", self.variance_scale)));
        }
        Ok(())
    }

    /// ε at the given δ; `None` where the method has no guarantee at δ.
    pub fn epsilon(&self, delta: f64, path: GdpPath) -> Option<f64> {
        match self.method {
            PrivacyMethod::Gdp => {
                let eta = match path {
                    GdpPath::Original => gdp_total_original(self.horizon),
                    GdpPath::Modified => gdp_total(self.horizon, self.prepulls, self.variance_scale).ok()?,
                };
                gdp_to_epsilon(eta, delta).ok()
            }
            PrivacyMethod::Rdp => rdp_best_epsilon(self.horizon, delta).ok().map(|(e, _)| e),
            PrivacyMethod::AdvDp => {
                let delta_step = delta * ADV_DELTA_SPLIT / self.horizon as f64;
                let eps_step = adv_dp_per_step(self.num_arms, delta_step).ok()?;
                adv_dp_total(eps_step, delta_step, self.horizon, delta).ok()
            }
        }
    }
}

/// Per-step GDP parameter `1/√(c(b+1))` of the modified algorithm.
pub fn gdp_per_step(b: u64, c: f64) -> Result<GdpBudget> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(invalid("c", format!("{c} must be >= 1")));
    }
    GdpBudget::new(1.0 / (c * (b as f64 + 1.0)).sqrt())
}

/// Per-step GDP parameter `√½` of the plain algorithm.
pub fn gdp_per_step_original() -> GdpBudget {
    GdpBudget(std::f64::consts::FRAC_1_SQRT_2)
}

/// Adaptive composition: `√(Σ η_t²)`.
pub fn gdp_compose(etas: &[GdpBudget]) -> Result<GdpBudget> {
    if etas.is_empty() {
        return Err(invalid("etas", "nothing to compose"));
    }
    // Scaled sum of squares keeps large and tiny parameters finite.
    let scale = etas.iter().map(|e| e.0).fold(0.0, f64::max);
    let ss: f64 = etas.iter().map(|e| (e.0 / scale).powi(2)).sum();
    GdpBudget::new(scale * ss.sqrt())
}

/// `√(T / (c(b+1)))` for the modified algorithm run for `T` steps.
pub fn gdp_total(horizon: u64, b: u64, c: f64) -> Result<GdpBudget> {
    let step = gdp_per_step(b, c)?;
    if horizon == 0 {
        return Err(invalid("T", "horizon must be positive"));
    }
    GdpBudget::new(step.0 * (horizon as f64).sqrt())
}

/// `√(T/2)` for the plain algorithm run for `T` steps.
pub fn gdp_total_original(horizon: u64) -> GdpBudget {
    GdpBudget((horizon as f64 / 2.0).sqrt())
}

/// `ln δ(ε)` for an η-GDP mechanism, where
/// `δ(ε) = Φ(−ε/η + η/2) − e^ε Φ(−ε/η − η/2)`.
///
/// The second term is formed in log space, so neither `e^ε` overflow nor
/// underflow of the tails loses the result.
pub fn gdp_log_delta(eta: GdpBudget, epsilon: f64) -> f64 {
    let eta = eta.0;
    let hi = -epsilon / eta + eta / 2.0;
    let lo = -epsilon / eta - eta / 2.0;
    let log_hi = log_normal_cdf(hi);
    let ratio = epsilon + log_normal_cdf(lo) - log_hi;
    if ratio >= 0.0 {
        return f64::NEG_INFINITY;
    }
    log_hi + (-ratio.exp_m1()).ln()
}

/// `δ(ε)` of an η-GDP mechanism, in `[0, 1]`.
pub fn gdp_to_delta(eta: GdpBudget, epsilon: f64) -> f64 {
    gdp_log_delta(eta, epsilon).exp().clamp(0.0, 1.0)
}

/// Smallest `ε ≥ 0` with `δ(ε) ≤ delta`, by bisection to
/// [`EPSILON_TOLERANCE`]. Returns 0 when `delta ≥ δ(0)`.
pub fn gdp_to_epsilon(eta: GdpBudget, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("{delta} must be positive")));
    }
    let target = delta.ln();
    let log_delta = |eps: f64| gdp_log_delta(eta, eps);
    if log_delta(0.0) <= target {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while log_delta(hi) > target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::BudgetInfeasible(format!("no finite epsilon reaches delta={delta}")));
        }
    }
    while hi - lo > EPSILON_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_delta(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `T` steps at `(α, α/4)` each: `(α, αT/4)`.
pub fn rdp_total(horizon: u64, alpha: f64) -> Result<RdpPoint> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("{alpha} must be > 1")));
    }
    if horizon == 0 {
        return Err(invalid("T", "horizon must be positive"));
    }
    Ok(RdpPoint {
        alpha,
        gamma: alpha * horizon as f64 / 4.0,
    })
}

/// `ε = γ + ln(1/δ)/(α − 1)`.
pub fn rdp_to_dp(point: RdpPoint, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1]")));
    }
    if !(point.alpha > 1.0) {
        return Err(invalid("alpha", format!("{} must be > 1", point.alpha)));
    }
    Ok(point.gamma - delta.ln() / (point.alpha - 1.0))
}

/// Minimizes `αT/4 + ln(1/δ)/(α − 1)` over `α > 1`. Returns `(ε*, α*)` with
/// `α* = 1 + 2√(ln(1/δ)/T)` and `ε* = T/4 + √(T ln(1/δ))`.
pub fn rdp_best_epsilon(horizon: u64, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1)")));
    }
    if horizon == 0 {
        return Err(invalid("T", "horizon must be positive"));
    }
    let t = horizon as f64;
    let log_inv = -delta.ln();
    let alpha = 1.0 + 2.0 * (log_inv / t).sqrt();
    Ok((t / 4.0 + (t * log_inv).sqrt(), alpha))
}

/// Per-step ε of the plain algorithm via heterogeneous Gaussian
/// report-noisy-max: `(1/(2√2)) √(ln((N − 1)/(2δ)))`.
pub fn adv_dp_per_step(num_arms: usize, delta: f64) -> Result<f64> {
    if num_arms < 2 {
        return Err(invalid("N", format!("need at least 2 arms, got {num_arms}")));
    }
    let max_delta = (num_arms as f64 - 1.0) / 2.0;
    if !(delta > 0.0 && delta < max_delta) {
        return Err(invalid("delta", format!("{delta} must lie in (0, {max_delta})")));
    }
    let log_term = ((num_arms as f64 - 1.0) / (2.0 * delta)).ln();
    Ok(log_term.sqrt() / (2.0 * std::f64::consts::SQRT_2))
}

/// Advanced composition over `T` steps:
/// `ε√(2T ln(1/(δ_total − Tδ))) + Tε(e^ε − 1)`, requiring `δ_total > Tδ`.
pub fn adv_dp_total(epsilon_step: f64, delta_step: f64, horizon: u64, delta_total: f64) -> Result<f64> {
    if !(epsilon_step >= 0.0) {
        return Err(invalid("epsilon", format!("{epsilon_step} is negative")));
    }
    let t = horizon as f64;
    let slack = delta_total - t * delta_step;
    if !(slack > 0.0) {
        return Err(Error::BudgetInfeasible(format!(
            "delta_total={delta_total} must exceed T*delta={}",
            t * delta_step
        )));
    }
    let slack_log = -slack.ln();
    Ok(epsilon_step * (2.0 * t * slack_log.max(0.0)).sqrt() + t * epsilon_step * epsilon_step.exp_m1())
}

/// Solves `η = √(T/(c(b+1)))` for `c`.
///
/// Fails with [`Error::BudgetExceededByPrepulls`] when the solution is below
/// 1 (pre-pulls alone already meet the budget) and with
/// [`Error::InfeasibleHorizon`] when `b·N ≥ T`.
pub fn solve_bc(eta_target: GdpBudget, horizon: u64, b: u64, num_arms: Option<usize>) -> Result<f64> {
    if let Some(n) = num_arms {
        let prepulls = b.saturating_mul(n as u64);
        if prepulls >= horizon {
            return Err(Error::InfeasibleHorizon { prepulls, horizon });
        }
    }
    let eta = eta_target.0;
    let c = horizon as f64 / (eta * eta * (b as f64 + 1.0));
    // η = √T, b = 0 lands on c = 1 up to rounding in η².
    const SLACK: f64 = 1e-12;
    if c >= 1.0 {
        Ok(c)
    } else if c >= 1.0 - SLACK {
        Ok(1.0)
    } else {
        Err(Error::BudgetExceededByPrepulls { c })
    }
}

/// `points` values spaced evenly in log between `min` and `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min) {
        return Err(invalid("delta range", format!("need 0 < min <= max, got [{min}, {max}]")));
    }
    match points {
        0 => Err(invalid("points", "need at least one point")),
        1 => Ok(vec![min]),
        _ => {
            let (a, b) = (min.ln(), max.ln());
            Ok((0..points)
                .map(|i| {
                    if i == 0 {
                        min
                    } else if i + 1 == points {
                        max
                    } else {
                        (a + (b - a) * i as f64 / (points - 1) as f64).exp()
                    }
                })
                .collect())
        }
    }
}

/// One point of an ε(δ) curve; `epsilon` is `None` where the method gives
/// no guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epsilon: Option<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub tolerances: Tolerances,
    /// Fraction of δ left as composition slack (advanced composition only).
    pub delta_split: Option<f64>,
    pub gdp_path: Option<GdpPath>,
    pub eta: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub epsilon_bisection: f64,
    pub quadrature_half_width_sds: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            epsilon_bisection: EPSILON_TOLERANCE,
            quadrature_half_width_sds: crate::policy::QUADRATURE_HALF_WIDTH_SDS,
        }
    }
}

/// ε(δ) for one method over a δ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyCurve {
    pub method: PrivacyMethod,
    #[serde(rename = "T")]
    pub horizon: u64,
    #[serde(rename = "N")]
    pub num_arms: usize,
    pub b: u64,
    pub c: f64,
    pub points: Vec<CurvePoint>,
    pub metadata: CurveMetadata,
}

/// Evaluates `query` on every δ in `deltas`.
pub fn privacy_curve(query: &AccountantQuery, deltas: &[f64], gdp_path: GdpPath) -> Result<PrivacyCurve> {
    query.validate()?;
    let points = deltas
        .iter()
        .map(|&delta| CurvePoint {
            epsilon: query.epsilon(delta, gdp_path),
            delta,
        })
        .collect();
    let plain = query.prepulls == 0 && query.variance_scale == 1.0;
    let metadata = match query.method {
        PrivacyMethod::Gdp => CurveMetadata {
            tolerances: Tolerances::default(),
            delta_split: None,
            gdp_path: Some(gdp_path),
            eta: Some(match gdp_path {
                GdpPath::Original => gdp_total_original(query.horizon).eta(),
                GdpPath::Modified => gdp_total(query.horizon, query.prepulls, query.variance_scale)?.eta(),
            }),
            note: None,
        },
        PrivacyMethod::Rdp | PrivacyMethod::AdvDp => CurveMetadata {
            tolerances: Tolerances::default(),
            delta_split: (query.method == PrivacyMethod::AdvDp).then_some(ADV_DELTA_SPLIT),
            gdp_path: None,
            eta: None,
            note: (!plain).then(|| "bound covers plain Thompson Sampling; b and c are not used".to_string()),
        },
    };
    Ok(PrivacyCurve {
        method: query.method,
        horizon: query.horizon,
        num_arms: query.num_arms,
        b: query.prepulls,
        c: query.variance_scale,
        points,
        metadata,
    })
}
