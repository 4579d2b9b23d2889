// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::Path;

use clap::ValueEnum;
use qouhc::hypercontractivity::TimeKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Meixner,
    Bounds,
    Sequences,
    Schatten,
    Semigroup,
    Hypercontractivity,
    All,
}

impl Suite {
    pub const ORDER: [Suite; 6] = [
        Suite::Meixner,
        Suite::Bounds,
        Suite::Sequences,
        Suite::Schatten,
        Suite::Semigroup,
        Suite::Hypercontractivity,
    ];

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::ORDER.to_vec(),
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    #[default]
    ZeroMean,
    General,
}

impl From<KindArg> for TimeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::ZeroMean => TimeKind::ZeroMean,
            KindArg::General => TimeKind::General,
        }
    }
}

/// Default tolerances, overridable with `--tol key=value`.
pub const TOLERANCES: [(&str, f64); 12] = [
    ("orthogonality", 1e-8),
    ("precision", 1e-12),
    ("structure", 1e-11),
    ("oracle", 1e-9),
    ("gram", 1e-8),
    ("eigen", 1e-6),
    ("ccr", 1e-10),
    ("gap", 1e-12),
    ("constraint", 1e-12),
    ("ratio", 1e-10),
    ("norms", 1e-9),
    ("time", 1e-4),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    pub beta_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub dim: usize,
    pub degree_cap: usize,
    pub seed: u64,
    pub tol: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub format: Format,
    pub budget: usize,
    pub ascent_steps: usize,
    pub kind: KindArg,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: None,
            beta_grid: vec![1.0],
            p_grid: vec![4.0],
            dim: 64,
            degree_cap: 3,
            seed: 0,
            tol: BTreeMap::new(),
            output_path: None,
            format: Format::Json,
            budget: qouhc::hypercontractivity::DEFAULT_BUDGET,
            ascent_steps: qouhc::hypercontractivity::DEFAULT_ASCENT_STEPS,
            kind: KindArg::ZeroMean,
        }
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Tolerance for `key`, honoring overrides.
    pub fn tol(&self, key: &str) -> f64 {
        if let Some(v) = self.tol.get(key) {
            return *v;
        }
        TOLERANCES
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("unknown tolerance key {key}"))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.beta_grid.is_empty() {
            return Err("beta grid is empty".into());
        }
        if self.p_grid.is_empty() {
            return Err("p grid is empty".into());
        }
        if let Some(b) = self
            .beta_grid
            .iter()
            .find(|b| !(b.is_finite() && **b > 0.0))
        {
            return Err(format!("beta must be finite and positive, got {b}"));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(p.is_finite() && **p >= 2.0)) {
            return Err(format!("p must be finite and at least 2, got {p}"));
        }
        if self.dim < 16 {
            return Err(format!("dim must be at least 16, got {}", self.dim));
        }
        if self.degree_cap == 0 || self.degree_cap > self.dim / 8 {
            return Err(format!(
                "degree cap must lie in [1, dim/8] = [1, {}], got {}",
                self.dim / 8,
                self.degree_cap
            ));
        }
        if self.budget == 0 {
            return Err("sample budget must be at least 1".into());
        }
        for (k, v) in &self.tol {
            if !TOLERANCES.iter().any(|(name, _)| name == k) {
                let known: Vec<&str> = TOLERANCES.iter().map(|(n, _)| *n).collect();
                return Err(format!(
                    "unknown tolerance key {k:?}; known keys: {}",
                    known.join(", ")
                ));
            }
            if !(v.is_finite() && *v > 0.0) {
                return Err(format!(
                    "tolerance {k} must be finite and positive, got {v}"
                ));
            }
        }
        Ok(())
    }
}

/// Parses `key=value`; a bare number sets the bisection tolerance `time`.
pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (key, value) = match s.split_once('=') {
        Some((k, v)) => (k.trim().to_string(), v.trim()),
        None => ("time".to_string(), s.trim()),
    };
    let v: f64 = value
        .parse()
        .map_err(|_| format!("invalid tolerance value {value:?}"))?;
    Ok((key, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guards() {
        let mut c = SuiteConfig::default();
        assert!(c.validate().is_ok());
        c.dim = 8;
        assert!(c.validate().is_err());
        c.dim = 32;
        c.degree_cap = 5;
        assert!(c.validate().is_err());
        c.degree_cap = 4;
        assert!(c.validate().is_ok());
        c.tol.insert("bogus".into(), 1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn tol_parsing() {
        assert_eq!(parse_tol("gram=1e-6").unwrap(), ("gram".to_string(), 1e-6));
        assert_eq!(parse_tol("0.001").unwrap(), ("time".to_string(), 1e-3));
        assert!(parse_tol("gram=x").is_err());
    }

    #[test]
    fn config_round_trip() {
        let c = SuiteConfig {
            suite: Some(Suite::Meixner),
            beta_grid: vec![0.5, 2.0],
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SuiteConfig>(&text).unwrap(), c);
        let partial: SuiteConfig = serde_json::from_str(r#"{"dim": 32}"#).unwrap();
        assert_eq!(partial.dim, 32);
        assert_eq!(partial.beta_grid, vec![1.0]);
    }
}
