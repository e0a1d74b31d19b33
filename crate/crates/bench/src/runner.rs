//! Executes the benchmark matrix.

use std::time::Instant;

use anyhow::Result;
use fbe_core::dc::{self, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use fbe_core::solvers::{fbe_lbfgs_minimize, npg_major_minimize, npg_minimize};
use fbe_core::{DcLeastSquares, Family, Instance, LineSearchConfig, NpgConfig, Regularizer, RunReport, Termination};
use serde::Serialize;

use crate::config::{BenchConfig, SolverEntry, SolverKind};

/// One `(instance, solver)` result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    /// Seconds spent estimating `λmax(AᵀA)`; shared by every solver on the instance.
    pub t_lambda_max: f64,
    pub solver: String,
    pub seed: u64,
    pub iter: usize,
    pub time_s: f64,
    /// `J(z)` at the returned `z`.
    pub fval: f64,
    pub residual: f64,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `λmax(AᵀA)` with its wall time.
pub fn timed_lambda_max(dc: &DcLeastSquares) -> Result<(f64, f64)> {
    let start = Instant::now();
    let lambda = dc::spectral_norm(dc.a(), SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
    Ok((lambda, start.elapsed().as_secs_f64()))
}

/// Runs one solver; `lambda_max` is only used by the envelope method.
pub fn run_solver(dc: &DcLeastSquares, lambda_max: f64, entry: &SolverEntry, max_iter: usize) -> Result<RunReport> {
    let report = match entry.kind {
        SolverKind::FbeLbfgs => {
            let problem = dc::lift_with_lambda(dc, lambda_max)?;
            let gamma = entry.gamma_factor / problem.curvature_bound();
            let config = LineSearchConfig { tol: entry.tol(), max_iter, ..Default::default() };
            fbe_lbfgs_minimize(&problem, gamma, &config)?
        }
        SolverKind::Npg => npg_minimize(dc, &NpgConfig { tol: entry.tol(), max_iter, ..Default::default() })?,
        SolverKind::NpgMajor => npg_major_minimize(dc, &NpgConfig { tol: entry.tol(), max_iter, ..Default::default() })?,
    };
    Ok(report)
}

pub fn problem_for(instance: &Instance, mu1: f64, mu2: f64) -> Result<DcLeastSquares> {
    Ok(DcLeastSquares::new(instance.a.clone(), instance.b.clone(), mu1, mu2, Regularizer::L1MinusL2)?)
}

/// Every `(group, seed, solver)` of the config, sorted by spec, seed, then
/// solver order. A solver that fails outright is recorded as a
/// `numeric_error` row rather than aborting the batch.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<Row>> {
    config.validate()?;
    let (mu1, mu2) = config.weights();
    let max_iter = config.max_iter.unwrap_or(fbe_core::solvers::DEFAULT_MAX_ITER);
    let mut rows = Vec::new();
    if config.solvers.is_empty() {
        return Ok(rows);
    }
    for group in &config.instances {
        for seed in group.seeds() {
            let spec = group.spec(seed);
            for w in spec.warnings() {
                log::warn!("{w}");
            }
            let instance = fbe_core::instance::generate(&spec)?;
            let dc = problem_for(&instance, mu1, mu2)?;
            let precheck = dc.coercivity_precheck();
            if !precheck.passed() {
                log::warn!("seed {seed}: {}", precheck.reason());
            }
            let (lambda_max, t_lambda_max) = timed_lambda_max(&dc)?;
            for entry in &config.solvers {
                log::info!("{:?} m={} n={} s={} seed={} solver={}", spec.family, spec.m, spec.n, spec.s, seed, entry.label());
                let row = match run_solver(&dc, lambda_max, entry, max_iter) {
                    Ok(report) => Row {
                        family: spec.family,
                        m: spec.m,
                        n: spec.n,
                        s: spec.s,
                        t_lambda_max,
                        solver: entry.label(),
                        seed,
                        iter: report.iterations,
                        time_s: report.wall_time_s,
                        fval: report.final_objective,
                        residual: report.final_residual,
                        termination: report.termination,
                        error: report.error,
                    },
                    Err(e) => Row {
                        family: spec.family,
                        m: spec.m,
                        n: spec.n,
                        s: spec.s,
                        t_lambda_max,
                        solver: entry.label(),
                        seed,
                        iter: 0,
                        time_s: 0.0,
                        fval: f64::NAN,
                        residual: f64::NAN,
                        termination: Termination::NumericError,
                        error: Some(e.to_string()),
                    },
                };
                rows.push(row);
            }
        }
    }
    let order: Vec<String> = config.solvers.iter().map(SolverEntry::label).collect();
    let rank = |label: &str| order.iter().position(|l| l == label).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        (a.family, a.m, a.n, a.s, a.seed, rank(&a.solver)).cmp(&(b.family, b.m, b.n, b.s, b.seed, rank(&b.solver)))
    });
    Ok(rows)
}
