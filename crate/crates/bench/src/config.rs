//! Experiment configuration: one TOML section per experiment, unknown keys rejected.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use brownian_core::SchemeId;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Desk,
    Paper,
}

/// Stepsizes, either listed or as a geometric ladder `h0 * ratio^k`, `k < count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HLadder {
    List(Vec<f64>),
    Geometric(GeometricLadder),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricLadder {
    pub h0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl HLadder {
    pub fn geometric(h0: f64, ratio: f64, count: usize) -> Self {
        HLadder::Geometric(GeometricLadder { h0, ratio, count })
    }

    pub fn values(&self) -> Result<Vec<f64>, BenchError> {
        let v: Vec<f64> = match self {
            HLadder::List(v) => v.clone(),
            HLadder::Geometric(g) => {
                if !(g.ratio > 1.0) {
                    return Err(BenchError::Config(format!(
                        "h_ladder ratio must exceed 1, got {}",
                        g.ratio
                    )));
                }
                (0..g.count).map(|k| g.h0 * g.ratio.powi(k as i32)).collect()
            }
        };
        if v.is_empty() {
            return Err(BenchError::Config("h_ladder is empty".into()));
        }
        if v.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(BenchError::Config(format!("h_ladder entries must be positive: {v:?}")));
        }
        if v.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(BenchError::Config(format!("h_ladder must be increasing: {v:?}")));
        }
        Ok(v)
    }
}

/// Resolves the noise strength from exactly one of `beta` and `sigma` (`beta = 2 / sigma^2`).
pub fn resolve_sigma(beta: Option<f64>, sigma: Option<f64>) -> Result<(f64, f64), BenchError> {
    match (beta, sigma) {
        (Some(b), None) if b > 0.0 && b.is_finite() => Ok(((2.0 / b).sqrt(), b)),
        (None, Some(s)) if s > 0.0 && s.is_finite() => Ok((s, 2.0 / (s * s))),
        (Some(_), Some(_)) => Err(BenchError::Config("give exactly one of beta and sigma".into())),
        (None, None) => Err(BenchError::Config("one of beta or sigma is required".into())),
        (b, s) => Err(BenchError::Config(format!(
            "beta/sigma must be positive, got {b:?}/{s:?}"
        ))),
    }
}

fn parse_schemes(names: &[String]) -> Result<Vec<SchemeId>, BenchError> {
    if names.is_empty() {
        return Err(BenchError::Config("scheme list is empty".into()));
    }
    names
        .iter()
        .map(|n| n.parse::<SchemeId>().map_err(BenchError::Config))
        .collect()
}

fn schemes(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuVerifyConfig {
    pub schemes: Vec<String>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub x0: f64,
    pub total_time: f64,
    pub h_ladder: HLadder,
    pub trajectories: u64,
    /// Ladder for the noise-free order fit on the closed forms.
    pub formula_ladder: HLadder,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongTimeConfig {
    pub schemes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub h_ladder: HLadder,
    pub total_time: f64,
    pub equilibration_steps: u64,
    pub realizations: u64,
    pub bins: usize,
    pub initial_position: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteTimeConfig {
    pub schemes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub h_ladder: HLadder,
    pub baseline_scheme: String,
    pub baseline_h: f64,
    pub snapshot_interval: f64,
    pub total_time: f64,
    pub trajectories: u64,
    pub bins: usize,
    pub initial_mean: f64,
    pub initial_sd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LjRdfConfig {
    pub schemes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub particles_per_side: usize,
    pub box_length: f64,
    pub h_ladder: HLadder,
    pub total_time: f64,
    pub equilibration_steps: u64,
    /// Realizations for Euler-Maruyama and Heun.
    pub realizations: u64,
    pub lm_realizations: u64,
    pub baseline_h: f64,
    pub baseline_realizations: u64,
    pub bins: usize,
    pub r_max: f64,
    pub seed: u64,
}

/// A whole configuration file; every section is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ou_verify: Option<OuVerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longtime_1d: Option<LongTimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_time_1d: Option<FiniteTimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lj_rdf: Option<LjRdfConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Built-in defaults for a scale; the shipped `configs/*.toml` files hold the same values.
    pub fn builtin(scale: Scale) -> Self {
        ConfigFile {
            scale: Some(scale),
            ou_verify: Some(OuVerifyConfig::defaults(scale)),
            longtime_1d: Some(LongTimeConfig::defaults(scale)),
            finite_time_1d: Some(FiniteTimeConfig::defaults(scale)),
            lj_rdf: Some(LjRdfConfig::defaults(scale)),
        }
    }
}

impl OuVerifyConfig {
    pub fn defaults(_scale: Scale) -> Self {
        OuVerifyConfig {
            schemes: schemes(&["em", "lm", "heun"]),
            alpha: 1.0,
            beta: None,
            sigma: Some(2f64.sqrt()),
            x0: 1.0,
            total_time: 10.0,
            h_ladder: HLadder::List(vec![0.1]),
            trajectories: 100_000,
            formula_ladder: HLadder::List((1..=10).map(|k| 0.02 * k as f64).collect()),
            seed: 20_240_901,
        }
    }

    pub fn scheme_ids(&self) -> Result<Vec<SchemeId>, BenchError> {
        parse_schemes(&self.schemes)
    }

    pub fn sigma(&self) -> Result<f64, BenchError> {
        resolve_sigma(self.beta, self.sigma).map(|r| r.0)
    }
}

impl LongTimeConfig {
    pub fn defaults(scale: Scale) -> Self {
        let (total_time, count, realizations) = match scale {
            Scale::Desk => (1e7, 8, 8),
            Scale::Paper => (2e8, 16, 32),
        };
        LongTimeConfig {
            schemes: schemes(&["em", "lm", "heun"]),
            beta: Some(1.0),
            sigma: None,
            h_ladder: HLadder::geometric(0.2, 1.1, count),
            total_time,
            equilibration_steps: 10_000,
            realizations,
            bins: 100,
            initial_position: PI,
            seed: 20_240_902,
        }
    }

    pub fn scheme_ids(&self) -> Result<Vec<SchemeId>, BenchError> {
        parse_schemes(&self.schemes)
    }

    pub fn sigma(&self) -> Result<f64, BenchError> {
        resolve_sigma(self.beta, self.sigma).map(|r| r.0)
    }
}

impl FiniteTimeConfig {
    pub fn defaults(scale: Scale) -> Self {
        let trajectories = match scale {
            Scale::Desk => 8_000_000,
            Scale::Paper => 2_560_000_000,
        };
        FiniteTimeConfig {
            schemes: schemes(&["em", "lm", "heun"]),
            beta: Some(1.0),
            sigma: None,
            h_ladder: HLadder::List(vec![0.16, 0.24, 0.32, 0.48]),
            baseline_scheme: "heun".into(),
            baseline_h: 0.04,
            snapshot_interval: 0.96,
            total_time: 9.0,
            trajectories,
            bins: 21,
            initial_mean: PI,
            initial_sd: 1.0,
            seed: 20_240_903,
        }
    }

    pub fn scheme_ids(&self) -> Result<Vec<SchemeId>, BenchError> {
        parse_schemes(&self.schemes)
    }

    pub fn baseline_id(&self) -> Result<SchemeId, BenchError> {
        self.baseline_scheme.parse().map_err(BenchError::Config)
    }

    pub fn sigma(&self) -> Result<f64, BenchError> {
        resolve_sigma(self.beta, self.sigma).map(|r| r.0)
    }
}

impl LjRdfConfig {
    pub fn defaults(scale: Scale) -> Self {
        match scale {
            Scale::Desk => LjRdfConfig {
                schemes: schemes(&["em", "lm", "heun"]),
                beta: Some(10.0),
                sigma: None,
                particles_per_side: 3,
                box_length: 4.5,
                h_ladder: HLadder::List(vec![0.0015, 0.002, 0.0025, 0.003]),
                total_time: 2000.0,
                equilibration_steps: 50_000,
                realizations: 8,
                lm_realizations: 32,
                baseline_h: 0.0008,
                baseline_realizations: 32,
                bins: 120,
                r_max: 4.5,
                seed: 20_240_904,
            },
            Scale::Paper => LjRdfConfig {
                schemes: schemes(&["em", "lm", "heun"]),
                beta: Some(10.0),
                sigma: None,
                particles_per_side: 4,
                box_length: 6.0,
                h_ladder: HLadder::geometric(0.002, 1.1, 10),
                total_time: 20_000.0,
                equilibration_steps: 1_000_000,
                realizations: 32,
                lm_realizations: 256,
                baseline_h: 0.0016,
                baseline_realizations: 368,
                bins: 120,
                r_max: 6.0,
                seed: 20_240_904,
            },
        }
    }

    pub fn scheme_ids(&self) -> Result<Vec<SchemeId>, BenchError> {
        parse_schemes(&self.schemes)
    }

    pub fn sigma(&self) -> Result<f64, BenchError> {
        resolve_sigma(self.beta, self.sigma).map(|r| r.0)
    }

    pub fn particles(&self) -> usize {
        self.particles_per_side.pow(3)
    }

    pub fn realizations_for(&self, scheme: SchemeId) -> u64 {
        match scheme {
            SchemeId::NonMarkovian => self.lm_realizations,
            _ => self.realizations,
        }
    }
}
