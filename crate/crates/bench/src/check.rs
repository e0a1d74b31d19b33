//! Quick invariant suites behind the `check` subcommand.
//!
//! These are smoke versions of the properties the test suite covers in
//! depth: gradient against finite differences, envelope sandwich, the
//! 2-Lipschitz bound of the prox-gradient map, the curvature bound of the
//! lifted Hessian, and optimality of the closed-form `ℓ₁₋₂` prox.

use std::sync::Arc;

use fbe_core::dc::{self, LiftedProblem};
use fbe_core::prox::{l1l2_prox, L1L2ProxParams};
use fbe_core::{linalg, DcLeastSquares, SmoothTerm};
use ndarray::{Array1, Array2};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Sampler(Xoshiro256PlusPlus);

impl Sampler {
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn vector(&mut self, n: usize, scale: f64) -> Array1<f64> {
        Array1::from_shape_simple_fn(n, || self.range(-scale, scale))
    }
}

fn random_lifted(rng: &mut Sampler, m: usize, n: usize) -> LiftedProblem {
    let a = Array2::from_shape_simple_fn((m, n), || rng.range(-1.0, 1.0));
    let b = rng.vector(m, 1.0);
    let mu = rng.range(0.01, 0.5);
    let dc = DcLeastSquares::l1_minus_l2(Arc::new(a), b, mu).expect("valid weights");
    dc::lift(&dc).expect("liftable")
}

fn outcome(name: &'static str, worst: f64, limit: f64) -> CheckOutcome {
    CheckOutcome { name, passed: worst <= limit, detail: format!("worst {worst:.3e} (limit {limit:.0e})") }
}

fn gradient_check(rng: &mut Sampler) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let prob = random_lifted(rng, 8, 12);
        let gamma = 0.95 / prob.curvature_bound();
        let h = 1e-6;
        for _ in 0..5 {
            let x = rng.vector(prob.dim(), 1.0);
            let g = prob.fbe_gradient(x.view(), gamma).expect("finite");
            let mut fd = Array1::zeros(x.len());
            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fp = prob.fbe_value(xp.view(), gamma).expect("finite");
                let fm = prob.fbe_value(xm.view(), gamma).expect("finite");
                fd[i] = (fp - fm) / (2.0 * h);
            }
            let rel = linalg::dist(g.view(), fd.view()) / linalg::norm(g.view()).max(1.0);
            worst = worst.max(rel);
        }
    }
    outcome("envelope gradient vs finite differences", worst, 1e-5)
}

fn sandwich_and_lipschitz(rng: &mut Sampler) -> Vec<CheckOutcome> {
    let mut sandwich: f64 = 0.0;
    let mut lipschitz: f64 = 0.0;
    for _ in 0..3 {
        let prob = random_lifted(rng, 6, 10);
        let gamma = 0.9 / prob.curvature_bound();
        for _ in 0..50 {
            let x = rng.vector(prob.dim(), 2.0);
            let y = rng.vector(prob.dim(), 2.0);
            let pt = prob.evaluate(x.clone(), gamma).expect("finite");
            let p = pt.backward();
            // f(p) + P(p) ≤ F_γ(x) ≤ f(x) + P(x)
            let lower = prob.objective(p.view()) - pt.fbe();
            let upper = pt.fbe() - prob.objective(x.view());
            sandwich = sandwich.max(lower).max(if upper.is_finite() { upper } else { f64::NEG_INFINITY });
            let px = prob.prox_grad_map(x.view(), gamma).expect("finite");
            let py = prob.prox_grad_map(y.view(), gamma).expect("finite");
            let excess = linalg::dist(px.view(), py.view()) - 2.0 * linalg::dist(x.view(), y.view());
            lipschitz = lipschitz.max(excess);
        }
    }
    vec![
        outcome("envelope sandwich", sandwich, 1e-10),
        outcome("prox-gradient map 2-Lipschitz", lipschitz, 1e-12),
    ]
}

fn curvature_check(rng: &mut Sampler) -> CheckOutcome {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..3 {
        let prob = random_lifted(rng, 7, 9);
        let l = prob.curvature_bound();
        let f = prob.smooth();
        for _ in 0..50 {
            let v = rng.vector(prob.dim(), 1.0);
            let hv = f.hess_vec(v.view(), v.view());
            let q = v.dot(&hv) / linalg::norm_sq(v.view());
            worst = worst.max(q.abs() - l);
        }
    }
    outcome("lifted Rayleigh quotients below L", worst.max(0.0), 1e-10)
}

fn prox_check(rng: &mut Sampler) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = 1 + (rng.0.next_u64() % 5) as usize;
        let y = rng.vector(n, 3.0);
        let mu2 = rng.range(0.01, 2.0);
        let params = L1L2ProxParams::new(mu2 + rng.range(0.0, 1.0), mu2).expect("valid");
        let x = l1l2_prox(y.view(), params);
        let best = params.objective(x.view(), y.view());
        for _ in 0..100 {
            let c = rng.vector(n, 4.0);
            worst = worst.max(best - params.objective(c.view(), y.view()));
        }
        for i in 0..n {
            for d in [1e-4, -1e-4] {
                let mut c = x.clone();
                c[i] += d;
                worst = worst.max(best - params.objective(c.view(), y.view()));
            }
        }
    }
    outcome("closed-form l1-l2 prox optimal", worst, 1e-10)
}

/// Runs every suite from one seed.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = Sampler(Xoshiro256PlusPlus::seed_from_u64(seed));
    let mut out = vec![gradient_check(&mut rng)];
    out.extend(sandwich_and_lipschitz(&mut rng));
    out.push(curvature_check(&mut rng));
    out.push(prox_check(&mut rng));
    out
}
