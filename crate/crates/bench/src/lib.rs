//! Shared fixtures for the criterion benchmarks.

use tsdp_core::{BanditInstance, TsConfig};

/// Five Bernoulli arms with evenly spaced means, best first.
pub fn bernoulli_five() -> BanditInstance {
    BanditInstance::bernoulli(&[0.75, 0.625, 0.5, 0.375, 0.25]).expect("valid arms")
}

/// Five truncated-exponential arms, best first.
pub fn trunc_exp_five() -> BanditInstance {
    BanditInstance::trunc_exp(&[0.1, 1.0, 2.0, 5.0, 10.0]).expect("valid arms")
}

pub fn config(b: u64, c: f64, horizon: u64) -> TsConfig {
    TsConfig::new(b, c, horizon).expect("valid config")
}
