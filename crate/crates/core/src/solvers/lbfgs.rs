use std::collections::VecDeque;

use ndarray::{Array1, ArrayView1};

use crate::linalg;

/// Pairs with `⟨s, y⟩ ≤ CURVATURE_SKIP·‖s‖‖y‖` are not stored.
pub const CURVATURE_SKIP: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Pair {
    s: Array1<f64>,
    y: Array1<f64>,
    rho: f64,
}

/// Limited-memory inverse-Hessian approximation.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    pairs: VecDeque<Pair>,
    capacity: usize,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        Self { pairs: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stores `(s, y)`, evicting the oldest pair when full. Returns `false`
    /// when the pair fails the curvature test and is dropped.
    pub fn push(&mut self, s: Array1<f64>, y: Array1<f64>) -> bool {
        let sy = s.dot(&y);
        let threshold = CURVATURE_SKIP * linalg::norm(s.view()) * linalg::norm(y.view());
        if !(sy > threshold) || self.capacity == 0 {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(Pair { s, y, rho: 1.0 / sy });
        true
    }

    /// Scaling `⟨s, y⟩/⟨y, y⟩` of the initial matrix, from the newest pair.
    pub fn initial_scaling(&self) -> f64 {
        self.pairs
            .back()
            .map(|p| 1.0 / (p.rho * p.y.dot(&p.y)))
            .unwrap_or(1.0)
    }

    /// `H g` by the two-loop recursion. The search direction is `−H g`.
    pub fn apply(&self, g: ArrayView1<f64>) -> Array1<f64> {
        let mut q = g.to_owned();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for p in self.pairs.iter().rev() {
            let a = p.rho * p.s.dot(&q);
            q.scaled_add(-a, &p.y);
            alphas.push(a);
        }
        q *= self.initial_scaling();
        for (p, a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = p.rho * p.y.dot(&q);
            q.scaled_add(a - b, &p.s);
        }
        q
    }
}
