//! Difference-of-convex regularized least squares
//!
//! ```text
//! min_z J(z) = ½‖Az − b‖² + μ₁‖z‖₁ − μ₂‖z‖
//! ```
//!
//! and its lifting to the product space `(y, z)`:
//!
//! ```text
//! f(y, z) = ½‖Az − b‖² − μ₂⟨y, z⟩,    P(y, z) = μ₁‖z‖₁ + δ_{‖y‖ ≤ 1}(y).
//! ```
//!
//! The lifted `f` has constant Hessian `[[0, −μ₂I], [−μ₂I, AᵀA]]`, whose
//! spectral radius is bounded by `(λ + √(λ² + 4μ₂²))/2` with `λ = λmax(AᵀA)`.
//! Lifted vectors are stored flat as `[y; z]`.

use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::composite::{CompositeProblem, ProxableTerm, SmoothTerm};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg;
use crate::prox::{self, BALL_SLACK};

/// Default relative tolerance for [`spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-6;
/// Default iteration cap for [`spectral_norm`].
pub const SPECTRAL_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    /// `H₁ = ‖·‖₁`, `H₂ = ‖·‖₂`.
    L1MinusL2,
}

/// `½‖Az − b‖² + μ₁H₁(z) − μ₂H₂(z)` with `μ₁ ≥ μ₂ > 0`.
#[derive(Debug, Clone)]
pub struct DcLeastSquares {
    a: Arc<Array2<f64>>,
    b: Array1<f64>,
    mu1: f64,
    mu2: f64,
    regularizer: Regularizer,
}

impl DcLeastSquares {
    pub fn new(a: Arc<Array2<f64>>, b: Array1<f64>, mu1: f64, mu2: f64, regularizer: Regularizer) -> Result<Self> {
        ensure_dim(a.nrows(), b.len())?;
        if a.ncols() == 0 {
            return Err(Error::InvalidInput("matrix has no columns".into()));
        }
        if !(mu2 > 0.0) || !mu1.is_finite() || mu1 < mu2 {
            return Err(Error::InvalidInput(format!(
                "need mu1 >= mu2 > 0, got mu1 = {mu1}, mu2 = {mu2}"
            )));
        }
        Ok(Self { a, b, mu1, mu2, regularizer })
    }

    /// The `ℓ₁₋₂` problem `½‖Az − b‖² + μ(‖z‖₁ − ‖z‖)`.
    pub fn l1_minus_l2(a: Arc<Array2<f64>>, b: Array1<f64>, mu: f64) -> Result<Self> {
        Self::new(a, b, mu, mu, Regularizer::L1MinusL2)
    }

    pub fn a(&self) -> ArrayView2<'_, f64> {
        self.a.view()
    }

    pub fn shared_a(&self) -> &Arc<Array2<f64>> {
        &self.a
    }

    pub fn b(&self) -> &Array1<f64> {
        &self.b
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    /// Number of unknowns `n`.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `Az − b`.
    pub fn residual_vector(&self, z: ArrayView1<f64>) -> Array1<f64> {
        let mut r = linalg::mat_vec(self.a.view(), z);
        r -= &self.b;
        r
    }

    /// `J(z)`.
    pub fn j_value(&self, z: ArrayView1<f64>) -> f64 {
        let r = self.residual_vector(z);
        0.5 * linalg::norm_sq(r.view()) + self.regularizer_value(z)
    }

    /// `μ₁H₁(z) − μ₂H₂(z)`.
    pub fn regularizer_value(&self, z: ArrayView1<f64>) -> f64 {
        match self.regularizer {
            Regularizer::L1MinusL2 => self.mu1 * linalg::norm_l1(z) - self.mu2 * linalg::norm(z),
        }
    }

    /// Pass iff `μ₁ > μ₂`, or `μ₁ = μ₂` and no column of `A` vanishes.
    pub fn coercivity_precheck(&self) -> Coercivity {
        match self.regularizer {
            Regularizer::L1MinusL2 => {
                if self.mu1 > self.mu2 {
                    return Coercivity::Coercive("mu1 > mu2 and the l1 norm is level bounded".into());
                }
                let zero_col = self
                    .a
                    .columns()
                    .into_iter()
                    .position(|col| col.iter().all(|&v| v == 0.0));
                match zero_col {
                    None => Coercivity::Coercive(
                        "mu1 = mu2 and every column of A is nonzero".into(),
                    ),
                    Some(j) => Coercivity::NotCertified(format!(
                        "mu1 = mu2 but column {j} of A is identically zero"
                    )),
                }
            }
        }
    }
}

/// Outcome of [`DcLeastSquares::coercivity_precheck`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coercivity {
    Coercive(String),
    NotCertified(String),
}

impl Coercivity {
    pub fn passed(&self) -> bool {
        matches!(self, Coercivity::Coercive(_))
    }

    pub fn reason(&self) -> &str {
        match self {
            Coercivity::Coercive(r) | Coercivity::NotCertified(r) => r,
        }
    }
}

/// A point `(y, z)` of the lifted problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVar {
    pub y: Array1<f64>,
    pub z: Array1<f64>,
}

impl ProductVar {
    pub fn new(y: Array1<f64>, z: Array1<f64>) -> Result<Self> {
        ensure_dim(y.len(), z.len())?;
        Ok(Self { y, z })
    }

    pub fn zeros(n: usize) -> Self {
        Self { y: Array1::zeros(n), z: Array1::zeros(n) }
    }

    pub fn from_flat(x: ArrayView1<f64>) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!("odd lifted dimension {}", x.len())));
        }
        let (y, z) = split(x);
        Ok(Self { y: y.to_owned(), z: z.to_owned() })
    }

    pub fn to_flat(&self) -> Array1<f64> {
        ndarray::concatenate![ndarray::Axis(0), self.y, self.z]
    }

    /// Completes `z` with the `y` that makes the lifted objective equal `J(z)`:
    /// `z/‖z‖`, or the first coordinate vector when `z = 0`.
    pub fn recover_from_z(z: Array1<f64>) -> Self {
        let nz = linalg::norm(z.view());
        let y = if nz > 0.0 {
            z.mapv(|v| v / nz)
        } else {
            let mut e = Array1::zeros(z.len());
            if !e.is_empty() {
                e[0] = 1.0;
            }
            e
        };
        Self { y, z }
    }
}

fn split(x: ArrayView1<f64>) -> (ArrayView1<f64>, ArrayView1<f64>) {
    let n = x.len() / 2;
    (x.slice_move(s![..n]), x.slice_move(s![n..]))
}

/// `z` block of a flat lifted vector.
pub fn z_block(x: ArrayView1<f64>) -> ArrayView1<f64> {
    split(x).1
}

/// `f(y, z) = ½‖Az − b‖² − μ₂⟨y, z⟩`.
#[derive(Debug, Clone)]
pub struct LiftedLeastSquares {
    dc: DcLeastSquares,
    lambda_max: f64,
    curvature_bound: f64,
}

impl LiftedLeastSquares {
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn problem(&self) -> &DcLeastSquares {
        &self.dc
    }
}

impl SmoothTerm for LiftedLeastSquares {
    fn dim(&self) -> usize {
        2 * self.dc.n()
    }

    fn value(&self, x: ArrayView1<f64>) -> f64 {
        let (y, z) = split(x);
        let r = self.dc.residual_vector(z);
        0.5 * linalg::norm_sq(r.view()) - self.dc.mu2 * y.dot(&z)
    }

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let (y, z) = split(x);
        let mu2 = self.dc.mu2;
        let r = self.dc.residual_vector(z);
        let value = 0.5 * linalg::norm_sq(r.view()) - mu2 * y.dot(&z);
        let mut grad_z = linalg::mat_t_vec(self.dc.a(), r.view());
        grad_z.scaled_add(-mu2, &y);
        let grad_y = z.mapv(|v| -mu2 * v);
        (value, ndarray::concatenate![ndarray::Axis(0), grad_y, grad_z])
    }

    fn hess_vec(&self, _x: ArrayView1<f64>, v: ArrayView1<f64>) -> Array1<f64> {
        let (vy, vz) = split(v);
        let mu2 = self.dc.mu2;
        let mut hz = linalg::gram_vec(self.dc.a(), vz);
        hz.scaled_add(-mu2, &vy);
        let hy = vz.mapv(|t| -mu2 * t);
        ndarray::concatenate![ndarray::Axis(0), hy, hz]
    }

    fn curvature_bound(&self) -> f64 {
        self.curvature_bound
    }
}

/// `P(y, z) = μ₁‖z‖₁ + δ_{‖y‖ ≤ 1}(y)`; its prox acts blockwise.
#[derive(Debug, Clone, Copy)]
pub struct LiftedRegularizer {
    n: usize,
    mu1: f64,
}

impl ProxableTerm for LiftedRegularizer {
    fn dim(&self) -> Option<usize> {
        Some(2 * self.n)
    }

    fn value(&self, x: ArrayView1<f64>) -> f64 {
        let (y, z) = split(x);
        if linalg::norm(y) > 1.0 + BALL_SLACK {
            return f64::INFINITY;
        }
        self.mu1 * linalg::norm_l1(z)
    }

    fn prox(&self, tau: f64, u: ArrayView1<f64>) -> Array1<f64> {
        let (uy, uz) = split(u);
        let t = tau * self.mu1;
        let py = prox::project_unit_ball(uy);
        let pz = uz.mapv(|v| prox::shrink(v, t));
        ndarray::concatenate![ndarray::Axis(0), py, pz]
    }
}

pub type LiftedProblem = CompositeProblem<LiftedLeastSquares, LiftedRegularizer>;

/// Lifts `dc` using a precomputed `λmax(AᵀA)`.
pub fn lift_with_lambda(dc: &DcLeastSquares, lambda_max: f64) -> Result<LiftedProblem> {
    if !(lambda_max >= 0.0) || !lambda_max.is_finite() {
        return Err(Error::InvalidInput(format!("lambda_max must be finite and >= 0, got {lambda_max}")));
    }
    let curvature_bound = curvature_bound(lambda_max, dc.mu2)?;
    let f = LiftedLeastSquares { dc: dc.clone(), lambda_max, curvature_bound };
    let p = LiftedRegularizer { n: dc.n(), mu1: dc.mu1 };
    CompositeProblem::new(f, p)
}

/// Lifts `dc`, estimating `λmax(AᵀA)` by power iteration with default settings.
pub fn lift(dc: &DcLeastSquares) -> Result<LiftedProblem> {
    let lambda = spectral_norm(dc.a(), SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
    lift_with_lambda(dc, lambda)
}

/// `L = (λ + √(λ² + 4μ₂²))/2`.
pub fn curvature_bound(lambda_max: f64, mu2: f64) -> Result<f64> {
    if !(lambda_max >= 0.0) || !(mu2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "curvature bound needs lambda_max >= 0 and mu2 > 0, got {lambda_max}, {mu2}"
        )));
    }
    Ok(0.5 * (lambda_max + (lambda_max * lambda_max + 4.0 * mu2 * mu2).sqrt()))
}

/// `λmax(AᵀA)` by power iteration on `AᵀA`.
///
/// The start vector is all ones with a small index-dependent perturbation, so
/// runs are reproducible. Iteration stops once the eigen-residual
/// `‖AᵀAv − θv‖` is at most `tol·θ`, and returns `θ + ‖AᵀAv − θv‖`: a value
/// within `tol` relative of `λmax` that does not undershoot it, so curvature
/// bounds built from it stay valid.
pub fn spectral_norm(a: ArrayView2<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 1e-3 * ((i * 7919 % 1009) as f64 / 1009.0));
    let nv = linalg::norm(v.view());
    v /= nv;

    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = linalg::gram_vec(a, v.view());
        let theta = v.dot(&w);
        let nw = linalg::norm(w.view());
        if !nw.is_finite() || !theta.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        if nw == 0.0 {
            // v lies in the null space of A; A == 0 or an unlucky start
            if a.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidInput("matrix is identically zero".into()));
            }
            v = Array1::from_shape_fn(n, |i| if i % 2 == 0 { 1.0 } else { -0.5 });
            let nv = linalg::norm(v.view());
            v /= nv;
            continue;
        }
        // some eigenvalue lies within ‖AᵀAv − θv‖ of θ; near the top
        // eigenvector that one is λmax, so θ + ‖r‖ bounds it from above
        let mut r = w.clone();
        r.scaled_add(-theta, &v);
        let rho = linalg::norm(r.view());
        lambda = theta + rho;
        if rho <= tol * theta {
            return Ok(lambda);
        }
        v = w / nw;
    }
    Err(Error::Convergence { iterations: max_iter, best_estimate: lambda })
}
