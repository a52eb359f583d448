//! Gaussian-prior Thompson Sampling for stochastic bandits, with the
//! (b, c)-modified variant, a differential-privacy accountant and a seeded
//! Monte-Carlo regret harness.
//!
//! Module map:
//! - [`env`]: reward distributions and bandit instances.
//! - [`policy`]: Thompson Sampling state machines and heterogeneous Gaussian
//!   report-noisy-max.
//! - [`privacy`]: GDP / RDP / advanced-composition accounting.
//! - [`sim`]: single runs, experiment grids and regret envelopes.
//! - [`config`] and [`report`]: experiment files and CSV/JSON artifacts.

// Negated comparisons deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod env;
mod error;
pub mod gauss;
pub mod policy;
pub mod privacy;
pub mod report;
pub mod sim;

pub use error::{Error, Result};

pub use env::{BanditInstance, RewardModel};
pub use policy::{
    rnm_heterogeneous, selection_probability_oracle, ArmState, BanditPolicy, GaussianThompson,
    ModifiedThompson, Phase, PosteriorDraw, TsConfig,
};
pub use privacy::{AccountantQuery, DpPoint, GdpBudget, PrivacyMethod, RdpPoint};
pub use sim::{run_experiment, run_once, ExperimentConfig, RegretTrace, RunSummary};
