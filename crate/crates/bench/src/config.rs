//! Versioned JSON description of a benchmark matrix.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fbe_core::instance::{DEFAULT_DCT_F, DEFAULT_SIGMA};
use fbe_core::{Family, InstanceSpec};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_GAMMA_FACTOR: f64 = 0.95;
pub const DEFAULT_MU: f64 = 5e-4;
pub const DEFAULT_FBE_TOL: f64 = 1e-6;
pub const DEFAULT_NPG_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    FbeLbfgs,
    Npg,
    NpgMajor,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::FbeLbfgs => "fbe_lbfgs",
            SolverKind::Npg => "npg",
            SolverKind::NpgMajor => "npg_major",
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            SolverKind::FbeLbfgs => DEFAULT_FBE_TOL,
            SolverKind::Npg | SolverKind::NpgMajor => DEFAULT_NPG_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub kind: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// `γ = gamma_factor / L`; envelope runs only.
    #[serde(default = "default_gamma_factor")]
    pub gamma_factor: f64,
    /// Column label; defaults to the solver name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn default_gamma_factor() -> f64 {
    DEFAULT_GAMMA_FACTOR
}

impl SolverEntry {
    pub fn new(kind: SolverKind) -> Self {
        Self { kind, tol: None, gamma_factor: DEFAULT_GAMMA_FACTOR, label: None }
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or_else(|| self.kind.default_tol())
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_string())
    }
}

/// One `(family, m, n, s)` row of the table, instantiated once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceGroup {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(rename = "F", default = "default_f")]
    pub f: u64,
    /// Explicit seeds; otherwise `1..=repetitions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

fn default_f() -> u64 {
    DEFAULT_DCT_F
}

fn default_repetitions() -> usize {
    1
}

impl InstanceGroup {
    pub fn seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (1..=self.repetitions as u64).collect(),
        }
    }

    pub fn spec(&self, seed: u64) -> InstanceSpec {
        InstanceSpec { family: self.family, m: self.m, n: self.n, s: self.s, sigma: self.sigma, f: self.f, seed }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markdown: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub version: u32,
    pub instances: Vec<InstanceGroup>,
    #[serde(default)]
    pub solvers: Vec<SolverEntry>,
    /// Sets both weights; `mu1`/`mu2` override it individually.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// `(μ₁, μ₂)` after defaults and overrides.
    pub fn weights(&self) -> (f64, f64) {
        let mu = self.mu.unwrap_or(DEFAULT_MU);
        (self.mu1.unwrap_or(mu), self.mu2.unwrap_or(mu))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("unsupported config version {} (expected {CONFIG_VERSION})", self.version);
        }
        let (mu1, mu2) = self.weights();
        if !(mu2 > 0.0) || !(mu1 >= mu2) || !mu1.is_finite() {
            bail!("need mu1 >= mu2 > 0, got mu1 = {mu1}, mu2 = {mu2}");
        }
        for group in &self.instances {
            for seed in group.seeds() {
                group.spec(seed).validate()?;
            }
        }
        let mut labels = HashSet::new();
        for entry in &self.solvers {
            if !(entry.tol() > 0.0) {
                bail!("solver {}: tol must be positive", entry.label());
            }
            if !(entry.gamma_factor > 0.0 && entry.gamma_factor < 1.0) {
                bail!("solver {}: gamma_factor must lie in (0, 1), got {}", entry.label(), entry.gamma_factor);
            }
            if !labels.insert(entry.label()) {
                bail!("duplicate solver label {}", entry.label());
            }
        }
        Ok(())
    }

    /// Single-seed override from the command line.
    pub fn with_seed(mut self, seed: u64) -> Self {
        for group in &mut self.instances {
            group.seeds = Some(vec![seed]);
        }
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        for entry in &mut self.solvers {
            entry.tol = Some(tol);
        }
        self
    }

    pub fn with_gamma_factor(mut self, gamma_factor: f64) -> Self {
        for entry in &mut self.solvers {
            entry.gamma_factor = gamma_factor;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "instances": [{"family": "gaussian_unit_columns", "m": 72, "n": 256, "s": 16, "repetitions": 3}],
        "solvers": [{"kind": "fbe_lbfgs"}, {"kind": "npg", "tol": 1e-5}]
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let config: BenchConfig = serde_json::from_str(MINIMAL).unwrap();
        config.validate().unwrap();
        assert_eq!(config.instances[0].seeds(), vec![1, 2, 3]);
        assert_eq!(config.instances[0].sigma, 1e-2);
        assert_eq!(config.solvers[0].tol(), 1e-6);
        assert_eq!(config.solvers[0].gamma_factor, 0.95);
        assert_eq!(config.solvers[1].tol(), 1e-5);
        assert_eq!(config.weights(), (5e-4, 5e-4));
    }

    #[test]
    fn overrides_apply_everywhere() {
        let config: BenchConfig = serde_json::from_str(MINIMAL).unwrap();
        let config = config.with_seed(9).with_tol(1e-3).with_gamma_factor(0.5);
        assert_eq!(config.instances[0].seeds(), vec![9]);
        assert!(config.solvers.iter().all(|s| s.tol() == 1e-3 && s.gamma_factor == 0.5));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config: BenchConfig = serde_json::from_str(MINIMAL).unwrap();
        config.version = 2;
        assert!(config.validate().is_err());
        let config = serde_json::from_str::<BenchConfig>(MINIMAL).unwrap().with_gamma_factor(1.0);
        assert!(config.validate().is_err());
        let mut config: BenchConfig = serde_json::from_str(MINIMAL).unwrap();
        config.solvers.push(SolverEntry::new(SolverKind::Npg));
        config.solvers[1].tol = None;
        assert!(config.validate().is_err(), "duplicate label");
        let mut config: BenchConfig = serde_json::from_str(MINIMAL).unwrap();
        config.mu1 = Some(1e-5);
        assert!(config.validate().is_err());
    }
}
