//! Line-search descent on the envelope, and two nonmonotone proximal gradient
//! baselines that work on the original (unlifted) problem.

mod fbe;
mod lbfgs;
mod line_search;
mod npg;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fbe::{fbe_lbfgs_minimize, minimize_envelope, EnvelopeRun, STALL_LIMIT};
pub use lbfgs::LbfgsMemory;
pub use line_search::{armijo_search, gate_direction, ArmijoStep, GatedDirection};
pub use npg::{npg_major_minimize, npg_minimize};

/// Iteration cap used when a config does not set one.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Parameters of the gradient-related line-search method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearchConfig {
    /// Armijo constant.
    pub sigma: f64,
    /// Backtracking factor.
    pub eta: f64,
    /// Angle condition constant.
    pub c1: f64,
    /// Norm condition constant.
    pub c2: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub max_backtracks: usize,
    /// Check the per-step decrease bounds at every accepted step and count
    /// violations in the report.
    pub verify_descent: bool,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            sigma: 1e-4,
            eta: 0.5,
            c1: 1e-5,
            c2: 1e5,
            tol: 1e-6,
            max_iter: DEFAULT_MAX_ITER,
            memory: 10,
            max_backtracks: 60,
            verify_descent: false,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.sigma) || !in_unit(self.eta) {
            return Err(Error::InvalidInput(format!(
                "sigma and eta must lie in (0, 1), got {} and {}",
                self.sigma, self.eta
            )));
        }
        if !in_unit(self.c1) || !(self.c2 >= 1.0) || !self.c2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "need 0 < c1 < 1 <= c2, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Parameters of the nonmonotone proximal gradient baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NpgConfig {
    /// Backtracking growth factor for `L`.
    pub tau: f64,
    /// Sufficient-decrease constant.
    pub c: f64,
    /// The acceptance test compares against the max over the last `M + 1` values.
    pub m: usize,
    pub l_min: f64,
    pub l_max: f64,
    /// Trial `L` at the first iteration.
    pub l_initial: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NpgConfig {
    fn default() -> Self {
        Self {
            tau: 2.0,
            c: 1e-4,
            m: 4,
            l_min: 1e-8,
            l_max: 1e8,
            l_initial: 1.0,
            tol: 1e-4,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl NpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 1.0) || !(self.c > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need tau > 1, c > 0, tol > 0; got tau = {}, c = {}, tol = {}",
                self.tau, self.c, self.tol
            )));
        }
        if !(self.l_min > 0.0) || !(self.l_min <= self.l_initial) || !(self.l_initial <= self.l_max) {
            return Err(Error::InvalidInput(format!(
                "need 0 < l_min <= l_initial <= l_max, got {}, {}, {}",
                self.l_min, self.l_initial, self.l_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    NumericError,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
            Termination::NumericError => "numeric_error",
        })
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub iterations: usize,
    pub wall_time_s: f64,
    /// `J(z)` at the returned `z` (all solvers on DC problems), or `f + P`
    /// at the final iterate for generic composite problems.
    pub final_objective: f64,
    /// `F_γ` at the final iterate; envelope runs only.
    pub final_envelope: Option<f64>,
    /// `‖x − 𝒫_γ(x)‖` for envelope runs, `‖zᵏ − zᵏ⁻¹‖` for the baselines.
    pub final_residual: f64,
    /// `F_γ(xᵏ)` for envelope runs, `J(zᵏ)` for the baselines; one entry per
    /// iterate including the start.
    pub value_history: Vec<f64>,
    pub termination: Termination,
    /// Message of the error that stopped the run, if any.
    pub error: Option<String>,
    /// Accepted step sizes (`αₖ` or `1/Lₖ`).
    pub step_sizes: Vec<f64>,
    /// Steps where the quasi-Newton candidate failed the gate.
    pub steepest_fallbacks: usize,
    /// Accepted steps violating the per-step decrease bounds; counted only
    /// with `verify_descent`.
    pub descent_violations: usize,
    /// Final iterate (the `z` block for DC problems).
    #[serde(skip)]
    pub solution: Array1<f64>,
}
