//! Seeded Monte-Carlo harness.
//!
//! A run owns one ChaCha8 stream. Per step the policy consumes its uniforms
//! first (one per arm while sampling, none while pre-pulling), then the
//! environment consumes exactly one uniform for the reward.
//!
//! Seeds for experiment grids come from [`derive_seed`], a SplitMix64 chain
//! over `(master seed, config index, run index)`, so any run can be
//! reproduced in isolation and runs can execute in any order.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::BanditInstance;
use crate::error::{invalid, Error, Result};
use crate::policy::{BanditPolicy, GaussianThompson, ModifiedThompson, TsConfig};
use crate::privacy::{gdp_total, solve_bc, GdpBudget};

/// Maximum number of points kept per output time series.
pub const MAX_TRACE_POINTS: usize = 1000;

/// Slack constant of [`regret_bound_envelope`].
pub const ENVELOPE_SLACK: f64 = 10.0;

/// Per-step record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// `μ*·t − Σ_{τ≤t} r_τ`.
    pub cum_empirical_regret: Vec<f64>,
    /// `Σ_{τ≤t} (μ* − μ_{a_τ})`.
    pub cum_pseudo_regret: Vec<f64>,
    /// Final `n_{i,T}`.
    pub pull_counts: Vec<u64>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_empirical_regret(&self) -> f64 {
        self.cum_empirical_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_pseudo_regret(&self) -> f64 {
        self.cum_pseudo_regret.last().copied().unwrap_or(0.0)
    }

    /// Pseudo-regret accumulated over the first `steps` steps.
    pub fn pseudo_regret_at(&self, steps: usize) -> f64 {
        match steps {
            0 => 0.0,
            s => self.cum_pseudo_regret[s.min(self.len()) - 1],
        }
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix(splitmix(splitmix(master) ^ config) ^ run)`.
pub fn derive_seed(master: u64, config_index: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ config_index) ^ run_index)
}

/// Drives `policy` for `horizon` steps against `instance`.
pub fn run_policy<P, R>(
    instance: &BanditInstance,
    policy: &mut P,
    horizon: u64,
    rng: &mut R,
) -> Result<RegretTrace>
where
    P: BanditPolicy,
    R: Rng + ?Sized,
{
    if policy.num_arms() != instance.num_arms() {
        return Err(invalid(
            "policy",
            format!("policy has {} arms, instance has {}", policy.num_arms(), instance.num_arms()),
        ));
    }
    let arms = instance.arms();
    let gaps = instance.gaps();
    let best = instance.best_mean();
    let cap = horizon as usize;
    let mut trace = RegretTrace {
        actions: Vec::with_capacity(cap),
        rewards: Vec::with_capacity(cap),
        cum_empirical_regret: Vec::with_capacity(cap),
        cum_pseudo_regret: Vec::with_capacity(cap),
        pull_counts: Vec::new(),
    };
    let mut reward_sum = 0.0;
    let mut pseudo = 0.0;
    for t in 1..=horizon {
        let a = policy.choose(rng)?;
        let r = arms[a].sample(rng);
        policy.observe(a, r)?;
        reward_sum += r;
        pseudo += gaps[a];
        trace.actions.push(a);
        trace.rewards.push(r);
        trace.cum_empirical_regret.push(best * t as f64 - reward_sum);
        trace.cum_pseudo_regret.push(pseudo);
    }
    trace.pull_counts = policy.pull_counts();
    Ok(trace)
}

/// One run of the modified algorithm; `b·N` pre-pulls then `T − b·N`
/// sampling steps.
pub fn run_once(instance: &BanditInstance, config: &TsConfig, seed: u64) -> Result<RegretTrace> {
    let mut policy = ModifiedThompson::new(instance.num_arms(), *config)?;
    run_policy(instance, &mut policy, config.horizon, &mut rng_for(seed))
}

/// One run of plain Thompson Sampling.
pub fn run_standard(instance: &BanditInstance, horizon: u64, seed: u64) -> Result<RegretTrace> {
    let mut policy = GaussianThompson::new(instance.num_arms(), horizon)?;
    run_policy(instance, &mut policy, horizon, &mut rng_for(seed))
}

/// Sanity ceiling `bN + K·c·√(N(T − bN) ln N)` with `K` =
/// [`ENVELOPE_SLACK`]. Marked inapplicable when `T ≤ bN + 4/min Δ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretEnvelope {
    pub bound: f64,
    pub applicable: bool,
}

pub fn regret_bound_envelope(instance: &BanditInstance, config: &TsConfig) -> RegretEnvelope {
    let n = instance.num_arms() as f64;
    let prepulls = config.total_prepulls(instance.num_arms()) as f64;
    let t = config.horizon as f64;
    let rest = (t - prepulls).max(0.0);
    let bound = prepulls + ENVELOPE_SLACK * config.variance_scale * (n * rest * n.ln()).sqrt();
    let applicable = match instance.min_positive_gap() {
        Some(d) => t > prepulls + 4.0 / (d * d),
        None => t > prepulls,
    };
    RegretEnvelope { bound, applicable }
}

/// Instance-specific GDP diagnostic: composes `1/√(c(n_{a_t} + 1))` over the
/// sampling steps of a trace, using the realized pull count of the played
/// arm before each step. This is not a worst-case guarantee.
pub fn realized_gdp(trace: &RegretTrace, config: &TsConfig, num_arms: usize) -> Option<GdpBudget> {
    let prepulls = config.total_prepulls(num_arms) as usize;
    let mut counts = vec![0u64; num_arms];
    let mut sum_sq = 0.0;
    for (t, &a) in trace.actions.iter().enumerate() {
        if t >= prepulls {
            sum_sq += 1.0 / (config.variance_scale * (counts[a] as f64 + 1.0));
        }
        counts[a] += 1;
    }
    GdpBudget::new(sum_sq.sqrt()).ok()
}

/// 1-based steps kept when downsampling a length-`horizon` series to at
/// most `max_points` evenly spaced points; always ends at `horizon`.
pub fn sample_steps(horizon: u64, max_points: usize) -> Vec<u64> {
    let m = (max_points as u64).min(horizon);
    (1..=m).map(|k| (k * horizon).div_ceil(m)).collect()
}

/// How the noise of one configuration is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Fixed variance multiplier.
    C(f64),
    /// Target total GDP parameter; `c` is solved from it.
    Eta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub label: String,
    pub b: u64,
    pub noise: NoiseSpec,
}

/// A configuration after solving for `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub label: String,
    pub config_index: usize,
    pub b: u64,
    pub c: f64,
    /// GDP parameter actually delivered, `√(T/(c(b+1)))`.
    pub eta: f64,
    pub eta_target: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedConfig {
    pub label: String,
    pub reason: String,
}

/// Solves one configuration against an instance and horizon.
///
/// When pre-pulls alone already over-deliver an η target, `c` is set to 1
/// and the note records that the delivered η is below the target.
pub fn resolve_params(
    spec: &ParamSpec,
    config_index: usize,
    instance: &BanditInstance,
    horizon: u64,
) -> Result<ResolvedParams> {
    let n = instance.num_arms();
    let (c, eta_target, note) = match spec.noise {
        NoiseSpec::C(c) => (c, None, None),
        NoiseSpec::Eta(target) => {
            let eta = GdpBudget::new(target)?;
            match solve_bc(eta, horizon, spec.b, Some(n)) {
                Ok(c) => (c, Some(target), None),
                Err(Error::BudgetExceededByPrepulls { c }) => (
                    1.0,
                    Some(target),
                    Some(format!("pre-pulls alone meet the budget (solved c = {c:.6}); using c = 1")),
                ),
                Err(e) => return Err(e),
            }
        }
    };
    let cfg = TsConfig::new(spec.b, c, horizon)?;
    cfg.validate_for(n)?;
    Ok(ResolvedParams {
        label: spec.label.clone(),
        config_index,
        b: spec.b,
        c,
        eta: gdp_total(horizon, spec.b, c)?.eta(),
        eta_target,
        note,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub horizon: u64,
    pub runs: usize,
    pub seed: u64,
    pub configs: Vec<ParamSpec>,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        if self.runs == 0 {
            return Err(invalid("runs", "must be positive"));
        }
        if self.configs.is_empty() {
            return Err(invalid("configs", "no configurations"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be positive"));
        }
        Ok(())
    }
}

/// Aggregate over the runs of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params: ResolvedParams,
    pub runs: usize,
    pub mean_final_regret: f64,
    pub stderr_final_regret: f64,
    pub mean_final_pseudo_regret: f64,
    pub stderr_final_pseudo_regret: f64,
    /// Pseudo-regret over the first `b·N` steps, averaged over runs.
    pub mean_prepull_pseudo_regret: f64,
    pub final_regrets: Vec<f64>,
    pub final_pseudo_regrets: Vec<f64>,
    pub envelope: RegretEnvelope,
    /// Sum of per-run wall times.
    pub runtime_seconds: f64,
}

/// Run-averaged, downsampled cumulative regret of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTrace {
    pub params: ResolvedParams,
    pub t: Vec<u64>,
    pub cum_empirical_regret: Vec<f64>,
    pub cum_pseudo_regret: Vec<f64>,
}

/// Downsampled cumulative empirical regret of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTraceSample {
    pub config_index: usize,
    pub run_id: usize,
    pub t: Vec<u64>,
    pub cum_empirical_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub summaries: Vec<RunSummary>,
    pub mean_traces: Vec<MeanTrace>,
    pub run_traces: Vec<RunTraceSample>,
    pub skipped: Vec<SkippedConfig>,
}

struct RunOutcome {
    final_regret: f64,
    final_pseudo: f64,
    prepull_pseudo: f64,
    emp: Vec<f64>,
    pseudo: Vec<f64>,
    seconds: f64,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every feasible configuration `runs` times.
///
/// Infeasible configurations are listed in `skipped` instead of failing the
/// experiment. Runs execute on a pool of `workers` threads; results are
/// reduced in (config, run) order, so output does not depend on scheduling.
pub fn run_experiment(exp: &ExperimentConfig) -> Result<ExperimentResult> {
    exp.validate()?;
    let mut resolved = Vec::new();
    let mut skipped = Vec::new();
    for (i, spec) in exp.configs.iter().enumerate() {
        match resolve_params(spec, i, &exp.instance, exp.horizon) {
            Ok(p) => resolved.push(p),
            Err(e) => skipped.push(SkippedConfig {
                label: spec.label.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let steps = sample_steps(exp.horizon, MAX_TRACE_POINTS);
    let jobs: Vec<(usize, usize)> = (0..resolved.len())
        .flat_map(|k| (0..exp.runs).map(move |r| (k, r)))
        .collect();

    let work = |&(k, run): &(usize, usize)| -> Result<RunOutcome> {
        let p = &resolved[k];
        let cfg = TsConfig::new(p.b, p.c, exp.horizon)?;
        let seed = derive_seed(exp.seed, p.config_index as u64, run as u64);
        let start = Instant::now();
        let trace = run_once(&exp.instance, &cfg, seed)?;
        let seconds = start.elapsed().as_secs_f64();
        let prepulls = cfg.total_prepulls(exp.instance.num_arms()) as usize;
        Ok(RunOutcome {
            final_regret: trace.final_empirical_regret(),
            final_pseudo: trace.final_pseudo_regret(),
            prepull_pseudo: trace.pseudo_regret_at(prepulls),
            emp: steps.iter().map(|&t| trace.cum_empirical_regret[t as usize - 1]).collect(),
            pseudo: steps.iter().map(|&t| trace.cum_pseudo_regret[t as usize - 1]).collect(),
            seconds,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exp.workers.unwrap_or(0))
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let outcomes: Vec<RunOutcome> =
        pool.install(|| jobs.par_iter().map(work).collect::<Result<Vec<_>>>())?;

    let mut summaries = Vec::with_capacity(resolved.len());
    let mut mean_traces = Vec::with_capacity(resolved.len());
    let mut run_traces = Vec::with_capacity(outcomes.len());
    for (k, (p, chunk)) in resolved.iter().zip(outcomes.chunks(exp.runs)).enumerate() {
        let finals: Vec<f64> = chunk.iter().map(|o| o.final_regret).collect();
        let pseudos: Vec<f64> = chunk.iter().map(|o| o.final_pseudo).collect();
        let (mean_final_regret, stderr_final_regret) = mean_and_stderr(&finals);
        let (mean_final_pseudo_regret, stderr_final_pseudo_regret) = mean_and_stderr(&pseudos);
        let runs = chunk.len() as f64;
        let mut emp = vec![0.0; steps.len()];
        let mut pseudo = vec![0.0; steps.len()];
        for o in chunk {
            for (acc, x) in emp.iter_mut().zip(&o.emp) {
                *acc += x;
            }
            for (acc, x) in pseudo.iter_mut().zip(&o.pseudo) {
                *acc += x;
            }
        }
        emp.iter_mut().chain(pseudo.iter_mut()).for_each(|x| *x /= runs);
        let cfg = TsConfig::new(p.b, p.c, exp.horizon)?;
        summaries.push(RunSummary {
            params: p.clone(),
            runs: chunk.len(),
            mean_final_regret,
            stderr_final_regret,
            mean_final_pseudo_regret,
            stderr_final_pseudo_regret,
            mean_prepull_pseudo_regret: chunk.iter().map(|o| o.prepull_pseudo).sum::<f64>() / runs,
            final_regrets: finals,
            final_pseudo_regrets: pseudos,
            envelope: regret_bound_envelope(&exp.instance, &cfg),
            runtime_seconds: chunk.iter().map(|o| o.seconds).sum(),
        });
        mean_traces.push(MeanTrace {
            params: p.clone(),
            t: steps.clone(),
            cum_empirical_regret: emp,
            cum_pseudo_regret: pseudo,
        });
        for (run_id, o) in chunk.iter().enumerate() {
            run_traces.push(RunTraceSample {
                config_index: k,
                run_id,
                t: steps.clone(),
                cum_empirical_regret: o.emp.clone(),
            });
        }
    }
    Ok(ExperimentResult {
        summaries,
        mean_traces,
        run_traces,
        skipped,
    })
}
