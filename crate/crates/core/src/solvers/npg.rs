use std::collections::VecDeque;
use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use crate::dc::DcLeastSquares;
use crate::error::Result;
use crate::linalg;
use crate::prox::{self, L1L2ProxParams};

use super::{NpgConfig, RunReport, Termination};

/// How a trial point is produced from `z`, `∇f̄(z)` and the curvature `L`.
trait Candidate {
    fn candidate(&self, dc: &DcLeastSquares, z: ArrayView1<f64>, grad: &Array1<f64>, l: f64) -> Result<Array1<f64>>;
}

/// Exact prox of `(μ₁‖·‖₁ − μ₂‖·‖)/L` at the forward step.
struct ExactProx;

impl Candidate for ExactProx {
    fn candidate(&self, dc: &DcLeastSquares, z: ArrayView1<f64>, grad: &Array1<f64>, l: f64) -> Result<Array1<f64>> {
        let mut u = z.to_owned();
        u.scaled_add(-1.0 / l, grad);
        let params = L1L2ProxParams::new(dc.mu1() / l, dc.mu2() / l)?;
        Ok(prox::l1l2_prox(u.view(), params))
    }
}

/// Linearizes `−μ₂‖·‖` at `z` with `ξ ∈ ∂‖z‖` and shrinks.
struct Majorized;

impl Candidate for Majorized {
    fn candidate(&self, dc: &DcLeastSquares, z: ArrayView1<f64>, grad: &Array1<f64>, l: f64) -> Result<Array1<f64>> {
        let nz = linalg::norm(z);
        let mut u = z.to_owned();
        u.scaled_add(-1.0 / l, grad);
        if nz > 0.0 {
            u.scaled_add(dc.mu2() / (l * nz), &z);
        }
        prox::soft_threshold(u.view(), dc.mu1() / l)
    }
}

/// Nonmonotone proximal gradient with exact `ℓ₁₋₂` prox steps.
///
/// Starts at `z = 0`. Each iteration tries `L = L⁰ₖ, τL⁰ₖ, τ²L⁰ₖ, ...`
/// until `J(z⁺) ≤ max(J over the last M+1 iterates) − (c/2)‖z⁺ − z‖²`,
/// then seeds the next trial with the Barzilai-Borwein value
/// `‖A dz‖²/‖dz‖²` clipped to `[l_min, l_max]`. Stops once
/// `‖zᵏ − zᵏ⁻¹‖ / max(1, J(zᵏ)) < tol`.
pub fn npg_minimize(dc: &DcLeastSquares, config: &NpgConfig) -> Result<RunReport> {
    run(dc, config, &ExactProx)
}

/// Same loop as [`npg_minimize`], but each step majorizes the concave part
/// `−μ₂‖z‖` by its linearization at the current iterate (`ξ = z/‖z‖`, or
/// `0` at the origin) and takes a plain shrinkage step.
pub fn npg_major_minimize(dc: &DcLeastSquares, config: &NpgConfig) -> Result<RunReport> {
    run(dc, config, &Majorized)
}

fn run<C: Candidate>(dc: &DcLeastSquares, config: &NpgConfig, step: &C) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let a = dc.a();

    let mut z = Array1::<f64>::zeros(dc.n());
    let mut r = dc.residual_vector(z.view());
    let mut grad = linalg::mat_t_vec(a, r.view());
    let mut h = 0.5 * linalg::norm_sq(r.view()) + dc.regularizer_value(z.view());
    let mut recent = VecDeque::with_capacity(config.m + 1);
    recent.push_back(h);
    let mut history = vec![h];
    let mut steps = Vec::new();
    let mut l0 = config.l_initial;
    let mut last_move = f64::INFINITY;
    let mut error = None;

    let termination = loop {
        if steps.len() >= config.max_iter {
            break Termination::MaxIter;
        }
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut l = l0;
        let accepted = loop {
            let cand = match step.candidate(dc, z.view(), &grad, l) {
                Ok(c) => c,
                Err(e) => break Err(e.to_string()),
            };
            let r_c = dc.residual_vector(cand.view());
            let h_c = 0.5 * linalg::norm_sq(r_c.view()) + dc.regularizer_value(cand.view());
            let move_sq = linalg::dist(cand.view(), z.view()).powi(2);
            if h_c.is_finite() && h_c <= reference - 0.5 * config.c * move_sq {
                break Ok((cand, r_c, h_c, move_sq.sqrt()));
            }
            l *= config.tau;
            if l > config.l_max {
                break Err(format!("backtracking exceeded l_max = {}", config.l_max));
            }
        };
        let (cand, r_c, h_c, dz_norm) = match accepted {
            Ok(v) => v,
            Err(msg) => {
                error = Some(msg);
                break Termination::NumericError;
            }
        };

        // A·dz = r⁺ − r, so the BB value needs no extra product
        let bb = if dz_norm > 0.0 {
            linalg::dist(r_c.view(), r.view()).powi(2) / (dz_norm * dz_norm)
        } else {
            config.l_min
        };
        l0 = bb.clamp(config.l_min, config.l_max);

        z = cand;
        r = r_c;
        grad = linalg::mat_t_vec(a, r.view());
        h = h_c;
        steps.push(1.0 / l);
        history.push(h);
        if recent.len() == config.m + 1 {
            recent.pop_front();
        }
        recent.push_back(h);
        last_move = dz_norm;

        if dz_norm / h.max(1.0) < config.tol {
            break Termination::Converged;
        }
    };

    Ok(RunReport {
        iterations: steps.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        final_objective: h,
        final_envelope: None,
        final_residual: if steps.is_empty() { 0.0 } else { last_move },
        value_history: history,
        termination,
        error,
        step_sizes: steps,
        steepest_fallbacks: 0,
        descent_violations: 0,
        solution: z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc::{lift, Regularizer};
    use crate::solvers::{fbe_lbfgs_minimize, LineSearchConfig};
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;
    use std::sync::Arc;

    fn identity_problem(b: Array1<f64>, mu: f64) -> DcLeastSquares {
        let n = b.len();
        DcLeastSquares::l1_minus_l2(Arc::new(Array2::eye(n)), b, mu).unwrap()
    }

    #[test]
    fn identity_design_first_step_is_the_prox_of_b() {
        // A = I, z = 0: ∇f̄ = −b, and with L = 1 the candidate is prox(b)
        let b = array![2.0, -0.5, 1.0];
        let dc = identity_problem(b.clone(), 0.6);
        let config = NpgConfig { max_iter: 1, ..Default::default() };
        let report = npg_minimize(&dc, &config).unwrap();
        let expected = prox::l1l2_prox(b.view(), L1L2ProxParams::new(0.6, 0.6).unwrap());
        assert_eq!(report.iterations, 1);
        assert!(linalg::dist(report.solution.view(), expected.view()) < 1e-15);
        assert_eq!(report.step_sizes, vec![1.0]);
        // prox of b for A = I minimizes J exactly: the next step does not move
        let full = npg_minimize(&dc, &NpgConfig::default()).unwrap();
        assert_eq!(full.termination, Termination::Converged);
        assert!(linalg::dist(full.solution.view(), expected.view()) < 1e-12);
    }

    #[test]
    fn major_step_at_origin_is_plain_shrinkage() {
        // ξ = 0 at z = 0, so the first step is soft_threshold(b, μ₁)
        let b = array![2.0, -0.5, 1.0];
        let dc = identity_problem(b.clone(), 0.6);
        let config = NpgConfig { max_iter: 1, ..Default::default() };
        let report = npg_major_minimize(&dc, &config).unwrap();
        assert!(linalg::dist(report.solution.view(), array![1.4, 0.0, 0.4].view()) < 1e-15);
    }

    #[test]
    fn one_dimensional_hand_evaluation() {
        // n = 1: J(z) = ½(az − b)² + μ₁|z| − μ₂|z|, minimized at (ab − (μ₁−μ₂))/a² for ab > μ₁−μ₂
        let (a, b, mu1, mu2) = (2.0, 3.0, 0.5, 0.2);
        let dc = DcLeastSquares::new(Arc::new(array![[a]]), array![b], mu1, mu2, Regularizer::L1MinusL2).unwrap();
        let expected = (a * b - (mu1 - mu2)) / (a * a);
        let config = NpgConfig { tol: 1e-12, ..Default::default() };
        for report in [npg_minimize(&dc, &config).unwrap(), npg_major_minimize(&dc, &config).unwrap()] {
            assert_eq!(report.termination, Termination::Converged);
            assert!((report.solution[0] - expected).abs() < 1e-9, "{}", report.solution[0]);
        }
    }

    fn random_problem(seed: u64, m: usize, n: usize, mu: f64) -> DcLeastSquares {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut a = Array2::from_shape_fn((m, n), |_| rng.gen_range(-1.0..1.0));
        for mut col in a.columns_mut() {
            let nrm = linalg::norm(col.view());
            col.mapv_inplace(|v| v / nrm);
        }
        let b = Array1::from_shape_fn(m, |_| rng.gen_range(-1.0..1.0));
        DcLeastSquares::l1_minus_l2(Arc::new(a), b, mu).unwrap()
    }

    #[test]
    fn barzilai_borwein_value_is_one_for_orthonormal_columns() {
        // ‖A dz‖ = ‖dz‖ for every move, so every trial starts (and is accepted) at L = 1
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let b = Array1::from_shape_fn(6, |_| rng.gen_range(-2.0..2.0));
        let mut a = Array2::zeros((8, 6));
        for j in 0..6 {
            a[[j + 1, j]] = if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        let mut bb = Array1::zeros(8);
        bb.slice_mut(ndarray::s![1..7]).assign(&b);
        let dc = DcLeastSquares::new(Arc::new(a), bb, 0.3, 0.1, Regularizer::L1MinusL2).unwrap();
        let config = NpgConfig { l_initial: 1.0, ..Default::default() };
        for report in [npg_minimize(&dc, &config).unwrap(), npg_major_minimize(&dc, &config).unwrap()] {
            assert!(!report.step_sizes.is_empty());
            assert!(report.step_sizes.iter().all(|&s| s == 1.0), "{:?}", report.step_sizes);
        }
    }

    #[test]
    fn history_respects_nonmonotone_acceptance() {
        let dc = random_problem(6, 20, 40, 0.02);
        let config = NpgConfig { tol: 1e-8, ..Default::default() };
        for report in [npg_minimize(&dc, &config).unwrap(), npg_major_minimize(&dc, &config).unwrap()] {
            let h = &report.value_history;
            for k in 1..h.len() {
                let lo = k.saturating_sub(config.m + 1);
                let reference = h[lo..k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert!(h[k] <= reference + 1e-12);
            }
            assert_eq!(report.termination, Termination::Converged);
            assert!(report.step_sizes.iter().all(|&s| s > 0.0 && s <= 1.0 / config.l_min));
        }
    }

    #[test]
    fn agrees_with_envelope_method_on_small_instance() {
        let dc = random_problem(7, 15, 30, 0.05);
        let npg = npg_minimize(&dc, &NpgConfig { tol: 1e-10, ..Default::default() }).unwrap();
        let prob = lift(&dc).unwrap();
        let gamma = 0.95 / prob.curvature_bound();
        let fbe = fbe_lbfgs_minimize(&prob, gamma, &LineSearchConfig { tol: 1e-8, ..Default::default() }).unwrap();
        assert_eq!(fbe.termination, Termination::Converged);
        // both reach stationary points; on this instance they share the basin
        let rel = (npg.final_objective - fbe.final_objective).abs() / npg.final_objective.abs().max(1.0);
        assert!(rel < 1e-4, "npg {} fbe {}", npg.final_objective, fbe.final_objective);
    }

    #[test]
    fn l_max_overflow_is_a_numeric_error() {
        let dc = random_problem(8, 10, 10, 0.05);
        let config = NpgConfig { l_max: 1.0, l_initial: 1e-3, l_min: 1e-3, tau: 2.0, ..Default::default() };
        let mut scaled = dc.a().to_owned();
        scaled *= 100.0;
        let dc = DcLeastSquares::l1_minus_l2(Arc::new(scaled), dc.b().clone(), 0.05).unwrap();
        let report = npg_minimize(&dc, &config).unwrap();
        assert_eq!(report.termination, Termination::NumericError);
        assert!(report.error.is_some());
    }
}
