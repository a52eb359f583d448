//! Experiment config files.
//!
//! One JSON document drives every subcommand:
//!
//! ```json
//! {
//!   "instance": { "arms": [ {"kind": "bernoulli", "p": 0.75}, {"kind": "trunc_exp", "lambda": 2.0} ] },
//!   "horizon": 100000,
//!   "runs": 10,
//!   "seed": 7,
//!   "configs": [ {"label": "b=100", "b": 100, "eta": 5.0}, {"b": 0, "c": 1.0} ],
//!   "grid": { "etas": [1, 2, 5], "b": [0, 10, 100] },
//!   "privacy": { "methods": ["gdp", "rdp", "advdp"], "horizon": 1000, "num_arms": 2,
//!                "delta_min": 1e-8, "delta_max": 1e-2, "points": 50 }
//! }
//! ```
//!
//! `grid` expands to one η-targeted config per `(η, b)` pair, appended after
//! `configs`. Only the sections a subcommand needs must be present.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::BanditInstance;
use crate::error::{Error, Result};
use crate::privacy::PrivacyMethod;
use crate::sim::{ExperimentConfig, NoiseSpec, ParamSpec};

pub const DEFAULT_RUNS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub instance: Option<BanditInstance>,
    pub horizon: Option<u64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub configs: Vec<ConfigEntry>,
    pub grid: Option<EtaGrid>,
    pub privacy: Option<PrivacySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEntry {
    pub label: Option<String>,
    pub b: u64,
    pub c: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaGrid {
    pub etas: Vec<f64>,
    pub b: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    #[serde(default = "all_methods")]
    pub methods: Vec<PrivacyMethod>,
    pub horizon: Option<u64>,
    pub num_arms: Option<usize>,
    #[serde(default)]
    pub b: u64,
    #[serde(default = "one")]
    pub c: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
}

fn all_methods() -> Vec<PrivacyMethod> {
    PrivacyMethod::ALL.to_vec()
}

fn one() -> f64 {
    1.0
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ConfigFile {
    /// Parses a document; errors name the offending field path and the
    /// line/column of the problem.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            config_err(
                path,
                format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            )
        })?;
        if let Some(inst) = &cfg.instance {
            inst.validate()
                .map_err(|e| config_err("instance.arms", e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Explicit configs followed by the expanded grid.
    pub fn param_specs(&self) -> Result<Vec<ParamSpec>> {
        let mut out = Vec::new();
        for (i, entry) in self.configs.iter().enumerate() {
            let noise = match (entry.c, entry.eta) {
                (Some(c), None) => NoiseSpec::C(c),
                (None, Some(eta)) => NoiseSpec::Eta(eta),
                _ => {
                    return Err(config_err(
                        format!("configs[{i}]"),
                        "exactly one of `c` or `eta` must be given",
                    ))
                }
            };
            let label = entry.label.clone().unwrap_or_else(|| match noise {
                NoiseSpec::C(c) => format!("b={},c={c}", entry.b),
                NoiseSpec::Eta(eta) => format!("eta={eta},b={}", entry.b),
            });
            out.push(ParamSpec {
                label,
                b: entry.b,
                noise,
            });
        }
        if let Some(grid) = &self.grid {
            for &eta in &grid.etas {
                for &b in &grid.b {
                    out.push(ParamSpec {
                        label: format!("eta={eta},b={b}"),
                        b,
                        noise: NoiseSpec::Eta(eta),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Builds the simulation input.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let instance = self
            .instance
            .clone()
            .ok_or_else(|| config_err("instance", "missing section"))?;
        let horizon = self
            .horizon
            .ok_or_else(|| config_err("horizon", "missing field"))?;
        let configs = self.param_specs()?;
        if configs.is_empty() {
            return Err(config_err("configs", "no configurations"));
        }
        Ok(ExperimentConfig {
            instance,
            horizon,
            runs: self.runs.unwrap_or(DEFAULT_RUNS),
            seed: self.seed.unwrap_or(0),
            configs,
            workers: None,
        })
    }
}
