//! Structural properties of the envelope on lifted `ℓ₁₋₂` problems.

use std::sync::Arc;

use fbe_core::dc::{self, LiftedProblem};
use fbe_core::{linalg, DcLeastSquares, SmoothTerm};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn lifted(seed: u64, m: usize, n: usize) -> LiftedProblem {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let a = Array2::from_shape_fn((m, n), |_| rng.gen_range(-1.0..1.0));
    let b = Array1::from_shape_fn(m, |_| rng.gen_range(-1.0..1.0));
    let mu2 = rng.gen_range(0.01..0.5);
    let mu1 = mu2 + rng.gen_range(0.0..0.2);
    let dc = DcLeastSquares::new(Arc::new(a), b, mu1, mu2, fbe_core::Regularizer::L1MinusL2).unwrap();
    dc::lift(&dc).unwrap()
}

fn point(rng: &mut Xoshiro256PlusPlus, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.gen_range(-scale..scale))
}

/// Oracle: central differences of the envelope value.
fn finite_difference_gradient(prob: &LiftedProblem, x: &Array1<f64>, gamma: f64, h: f64) -> Array1<f64> {
    Array1::from_shape_fn(x.len(), |i| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (prob.fbe_value(xp.view(), gamma).unwrap() - prob.fbe_value(xm.view(), gamma).unwrap()) / (2.0 * h)
    })
}

#[test]
fn six_dimensional_gradient_matches_central_differences() {
    let prob = lifted(1, 4, 3);
    assert_eq!(prob.dim(), 6);
    let gamma = 0.95 / prob.curvature_bound();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    for _ in 0..100 {
        let x = point(&mut rng, 6, 1.5);
        let g = prob.fbe_gradient(x.view(), gamma).unwrap();
        let fd = finite_difference_gradient(&prob, &x, gamma, 1e-6);
        let rel = linalg::dist(g.view(), fd.view()) / linalg::norm(g.view()).max(1e-3);
        assert!(rel <= 1e-5, "relative error {rel}");
    }
}

#[test]
fn stationarity_is_equivalent_to_a_fixed_point() {
    // ∇F_γ = γ⁻¹(I − γ∇²f)(x − 𝒫_γ(x)) with I − γ∇²f invertible, so the
    // gradient norm is within [(1 − γL)/γ, (1 + γL)/γ] times the residual
    let prob = lifted(3, 6, 8);
    let l = prob.curvature_bound();
    let gamma = 0.9 / l;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    for _ in 0..200 {
        let x = point(&mut rng, prob.dim(), 1.0);
        let g = linalg::norm(prob.fbe_gradient(x.view(), gamma).unwrap().view());
        let r = prob.residual(x.view(), gamma).unwrap();
        assert!(g >= (1.0 - gamma * l) / gamma * r * (1.0 - 1e-12));
        assert!(g <= (1.0 + gamma * l) / gamma * r * (1.0 + 1e-12));
    }
}

#[test]
fn prox_gradient_step_decreases_the_envelope() {
    // F_γ(𝒫_γ(x)) ≤ F_γ(x) − ((1 − γL)/(2γ))‖x − 𝒫_γ(x)‖² on the sandwich
    let prob = lifted(5, 6, 8);
    let l = prob.curvature_bound();
    let gamma = 0.9 / l;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
    for _ in 0..200 {
        let x = point(&mut rng, prob.dim(), 1.0);
        let p = prob.prox_grad_map(x.view(), gamma).unwrap();
        let fx = prob.fbe_value(x.view(), gamma).unwrap();
        let fp = prob.fbe_value(p.view(), gamma).unwrap();
        let r2 = linalg::dist(x.view(), p.view()).powi(2);
        assert!(fp <= fx - (1.0 - gamma * l) / (2.0 * gamma) * r2 + 1e-12 * fx.abs().max(1.0));
    }
}

#[test]
fn sublevel_set_contains_every_envelope_iterate() {
    let prob = lifted(7, 10, 20);
    let gamma = 0.95 / prob.curvature_bound();
    let f0 = prob.fbe_value(Array1::zeros(prob.dim()).view(), gamma).unwrap();
    let config = fbe_core::LineSearchConfig { max_iter: 200, ..Default::default() };
    let run = fbe_core::solvers::minimize_envelope(&prob, gamma, Array1::zeros(prob.dim()), &config).unwrap();
    assert!(run.report.value_history.iter().all(|&v| v <= f0));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn envelope_is_sandwiched(seed in 0u64..1000, xs in proptest::collection::vec(-2.0..2.0f64, 16)) {
        // f(p) + P(p) ≤ F_γ(x) ≤ f(x) + P(x)
        let prob = lifted(seed, 5, 8);
        let gamma = 0.95 / prob.curvature_bound();
        let x = Array1::from(xs);
        let pt = prob.evaluate(x.clone(), gamma).unwrap();
        let slack = 1e-10 * pt.fbe().abs().max(1.0);
        prop_assert!(prob.objective(pt.backward().view()) <= pt.fbe() + slack);
        let upper = prob.objective(x.view());
        prop_assert!(!upper.is_finite() || pt.fbe() <= upper + slack);
    }

    #[test]
    fn feasible_points_give_upper_bound_on_the_envelope(seed in 0u64..1000, xs in proptest::collection::vec(-1.0..1.0f64, 16)) {
        // F_γ(x) ≤ f(x) + P(x) on the feasible set, where the y block is in the ball
        let prob = lifted(seed, 5, 8);
        let gamma = 0.95 / prob.curvature_bound();
        let mut x = Array1::from(xs);
        let yn = linalg::norm(x.slice(ndarray::s![..8]));
        if yn > 1.0 {
            x.slice_mut(ndarray::s![..8]).mapv_inplace(|v| v / yn);
        }
        let fx = prob.fbe_value(x.view(), gamma).unwrap();
        prop_assert!(fx <= prob.objective(x.view()) + 1e-10 * fx.abs().max(1.0));
    }

    #[test]
    fn bregman_form_bounds_the_envelope(seed in 0u64..1000,
                                        xs in proptest::collection::vec(-2.0..2.0f64, 16),
                                        ys in proptest::collection::vec(-1.0..1.0f64, 16)) {
        // F_γ(x) = min_y f(y) + P(y) + D_φ(y, x), attained at y = 𝒫_γ(x)
        let prob = lifted(seed, 5, 8);
        let gamma = 0.95 / prob.curvature_bound();
        let x = Array1::from(xs);
        let y = Array1::from(ys);
        let fx = prob.fbe_value(x.view(), gamma).unwrap();
        let slack = 1e-10 * fx.abs().max(1.0);
        let bound = prob.objective(y.view()) + prob.bregman_distance(y.view(), x.view(), gamma).unwrap();
        prop_assert!(!bound.is_finite() || fx <= bound + slack);
        let p = prob.prox_grad_map(x.view(), gamma).unwrap();
        let at_p = prob.objective(p.view()) + prob.bregman_distance(p.view(), x.view(), gamma).unwrap();
        prop_assert!((at_p - fx).abs() <= 1e-9 * fx.abs().max(1.0));
    }

    #[test]
    fn prox_gradient_map_is_two_lipschitz(seed in 0u64..1000,
                                          xs in proptest::collection::vec(-3.0..3.0f64, 16),
                                          ys in proptest::collection::vec(-3.0..3.0f64, 16)) {
        let prob = lifted(seed, 5, 8);
        let gamma = 0.95 / prob.curvature_bound();
        let (x, y) = (Array1::from(xs), Array1::from(ys));
        let px = prob.prox_grad_map(x.view(), gamma).unwrap();
        let py = prob.prox_grad_map(y.view(), gamma).unwrap();
        prop_assert!(linalg::dist(px.view(), py.view()) <= 2.0 * linalg::dist(x.view(), y.view()) + 1e-12);
    }

    #[test]
    fn lifted_hessian_rayleigh_quotients_stay_below_l(seed in 0u64..1000, vs in proptest::collection::vec(-1.0..1.0f64, 16)) {
        let prob = lifted(seed, 5, 8);
        let v = Array1::from(vs);
        prop_assume!(linalg::norm(v.view()) > 1e-6);
        let hv = prob.smooth().hess_vec(v.view(), v.view());
        let q = v.dot(&hv) / linalg::norm_sq(v.view());
        prop_assert!(q.abs() <= prob.curvature_bound() + 1e-10);
    }
}
