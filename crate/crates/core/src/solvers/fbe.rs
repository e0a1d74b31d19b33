use std::time::Instant;

use ndarray::Array1;

use crate::composite::{CompositeProblem, FbePoint, ProxableTerm, SmoothTerm};
use crate::dc::{self, LiftedProblem};
use crate::error::Result;
use crate::linalg;

use super::line_search::{armijo_search, gate_direction};
use super::{LbfgsMemory, LineSearchConfig, RunReport, Termination};

/// Consecutive accepted steps without strict decrease before giving up.
pub const STALL_LIMIT: usize = 10;

/// Result of [`minimize_envelope`]: the report plus the final lifted iterate.
#[derive(Debug, Clone)]
pub struct EnvelopeRun {
    pub report: RunReport,
    pub x: Array1<f64>,
}

/// Minimizes `F_γ` by L-BFGS directions gated by the angle and norm
/// conditions, with Armijo backtracking.
///
/// Stops once `‖∇F_γ(xᵏ)‖ / max(1, F_γ(xᵏ)) < tol`. A numeric failure part
/// way through, or [`STALL_LIMIT`] consecutive steps that leave `F_γ`
/// unchanged, end the run with [`Termination::NumericError`] and the last
/// accepted iterate; only invalid parameters are reported as `Err`.
pub fn minimize_envelope<F, P>(
    problem: &CompositeProblem<F, P>,
    gamma: f64,
    x0: Array1<f64>,
    config: &LineSearchConfig,
) -> Result<EnvelopeRun>
where
    F: SmoothTerm,
    P: ProxableTerm,
{
    config.validate()?;
    problem.check_gamma(gamma)?;
    let start = Instant::now();

    let mut cur = problem.evaluate(x0, gamma)?;
    let mut grad = cur.gradient(problem)?.clone();
    let mut memory = LbfgsMemory::new(config.memory);
    let mut history = vec![cur.fbe()];
    let mut steps = Vec::new();
    let mut fallbacks = 0;
    let mut violations = 0;
    let mut error = None;
    let mut stalled = 0;

    let termination = loop {
        let gnorm = linalg::norm(grad.view());
        if gnorm / cur.fbe().max(1.0) < config.tol {
            break Termination::Converged;
        }
        if steps.len() >= config.max_iter {
            break Termination::MaxIter;
        }

        let candidate = memory.apply(grad.view()).mapv(|v| -v);
        let gated = gate_direction(grad.view(), candidate, config.c1, config.c2);
        fallbacks += usize::from(gated.fallback);

        let step = match armijo_search(problem, &cur, gated.direction.view(), config) {
            Ok(step) => step,
            Err(e) => {
                error = Some(e.to_string());
                break Termination::NumericError;
            }
        };
        let next = step.point;
        let next_grad = match next.gradient(problem) {
            Ok(g) => g.clone(),
            Err(e) => {
                error = Some(e.to_string());
                break Termination::NumericError;
            }
        };

        let s = next.x() - cur.x();
        if config.verify_descent && !satisfies_decrease_bounds(&cur, &next, gnorm, &s, step.alpha, config) {
            violations += 1;
        }
        memory.push(s, &next_grad - &grad);

        // once F_γ is flat to rounding, Armijo accepts null steps forever
        stalled = if next.fbe() < cur.fbe() { 0 } else { stalled + 1 };

        steps.push(step.alpha);
        history.push(next.fbe());
        cur = next;
        grad = next_grad;
        if stalled >= STALL_LIMIT {
            error = Some(format!("no decrease in {STALL_LIMIT} consecutive steps; tolerance below rounding level"));
            break Termination::NumericError;
        }
    };

    let x = cur.x().clone();
    let report = RunReport {
        iterations: steps.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        final_objective: problem.objective(x.view()),
        final_envelope: Some(cur.fbe()),
        final_residual: cur.residual(),
        value_history: history,
        termination,
        error,
        step_sizes: steps,
        steepest_fallbacks: fallbacks,
        descent_violations: violations,
        solution: x.clone(),
    };
    Ok(EnvelopeRun { report, x })
}

/// The two sufficient-decrease consequences of the gated Armijo step:
///
/// ```text
/// F(xᵏ⁺¹) − F(xᵏ) ≤ −(c₁σα/c₂)‖∇F(xᵏ)‖²,
/// F(xᵏ⁺¹) − F(xᵏ) ≤ −(c₁σα/c₂³)‖xᵏ⁺¹ − xᵏ‖².
/// ```
fn satisfies_decrease_bounds(
    cur: &FbePoint,
    next: &FbePoint,
    gnorm: f64,
    s: &Array1<f64>,
    alpha: f64,
    config: &LineSearchConfig,
) -> bool {
    let decrease = next.fbe() - cur.fbe();
    // rounding in the Armijo comparison itself
    let slack = 4.0 * f64::EPSILON * cur.fbe().abs().max(next.fbe().abs()).max(1.0);
    let k = config.c1 * config.sigma * alpha;
    let by_gradient = -k / config.c2 * gnorm * gnorm;
    let by_step = -k / config.c2.powi(3) * linalg::norm_sq(s.view());
    decrease <= by_gradient + slack && decrease <= by_step + slack
}

/// Runs [`minimize_envelope`] on a lifted DC problem from the origin and
/// reports `J` at the final `z` block.
pub fn fbe_lbfgs_minimize(problem: &LiftedProblem, gamma: f64, config: &LineSearchConfig) -> Result<RunReport> {
    let dc = problem.smooth().problem();
    let run = minimize_envelope(problem, gamma, Array1::zeros(problem.dim()), config)?;
    let z = dc::z_block(run.x.view()).to_owned();
    let mut report = run.report;
    report.final_objective = dc.j_value(z.view());
    report.solution = z;
    Ok(report)
}
