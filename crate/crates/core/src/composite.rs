//! Composite problems `min f(x) + P(x)` and their forward-backward envelope.
//!
//! For a step `γ ∈ (0, 1/L)` the envelope is
//!
//! ```text
//! F_γ(x) = f(x) − (γ/2)‖∇f(x)‖² + P(p) + ‖p − u‖²/(2γ),
//! u = x − γ∇f(x),   p = prox_{γP}(u),
//! ∇F_γ(x) = γ⁻¹ (I − γ∇²f(x)) (x − p).
//! ```
//!
//! `F_γ` is continuously differentiable and shares its stationary points with
//! `f + P`, so smooth line-search methods can be run on it directly.

use std::cell::OnceCell;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::linalg;

/// Largest admissible `γ·L`. Guarantees degrade as `γ` approaches `1/L`.
pub const MAX_GAMMA_TIMES_L: f64 = 0.999;

/// The smooth part `f`, with an `L`-Lipschitz gradient.
pub trait SmoothTerm {
    fn dim(&self) -> usize;

    fn value(&self, x: ArrayView1<f64>) -> f64;

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64>;

    /// Override when value and gradient share work.
    fn value_and_gradient(&self, x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        (self.value(x), self.gradient(x))
    }

    /// `∇²f(x) v`.
    fn hess_vec(&self, x: ArrayView1<f64>, v: ArrayView1<f64>) -> Array1<f64>;

    /// Bound `L` on the magnitude of every eigenvalue of `∇²f`.
    fn curvature_bound(&self) -> f64;
}

/// The nonsmooth part `P`, proper closed and with a cheap proximal map.
pub trait ProxableTerm {
    /// Dimension, if the term is tied to one. Separable terms return `None`.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// May be `+∞` outside the domain.
    fn value(&self, x: ArrayView1<f64>) -> f64;

    /// `prox_{τP}(u) = argmin_y P(y) + ‖y − u‖²/(2τ)`.
    fn prox(&self, tau: f64, u: ArrayView1<f64>) -> Array1<f64>;
}

/// `f + P` over `ℝⁿ`.
#[derive(Debug, Clone)]
pub struct CompositeProblem<F, P> {
    f: F,
    p: P,
}

impl<F: SmoothTerm, P: ProxableTerm> CompositeProblem<F, P> {
    pub fn new(f: F, p: P) -> Result<Self> {
        if let Some(pd) = p.dim() {
            ensure_dim(f.dim(), pd)?;
        }
        let l = f.curvature_bound();
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!(
                "curvature bound must be positive and finite, got {l}"
            )));
        }
        Ok(Self { f, p })
    }

    pub fn smooth(&self) -> &F {
        &self.f
    }

    pub fn nonsmooth(&self) -> &P {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn curvature_bound(&self) -> f64 {
        self.f.curvature_bound()
    }

    /// Rejects `γ ∉ (0, 0.999/L)`.
    pub fn check_gamma(&self, gamma: f64) -> Result<()> {
        let gl = gamma * self.curvature_bound();
        if gamma > 0.0 && gl < MAX_GAMMA_TIMES_L {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "step gamma = {gamma} outside (0, {MAX_GAMMA_TIMES_L}/L) with L = {}",
                self.curvature_bound()
            )))
        }
    }

    fn check_point(&self, x: ArrayView1<f64>) -> Result<()> {
        ensure_dim(self.dim(), x.len())?;
        if linalg::all_finite(x) {
            Ok(())
        } else {
            Err(Error::InvalidInput("point has non-finite entries".into()))
        }
    }

    /// `f(x) + P(x)`; `+∞` outside `dom P`.
    pub fn objective(&self, x: ArrayView1<f64>) -> f64 {
        self.f.value(x) + self.p.value(x)
    }

    /// Evaluates and caches everything the envelope needs at `x`.
    pub fn evaluate(&self, x: Array1<f64>, gamma: f64) -> Result<FbePoint> {
        self.check_gamma(gamma)?;
        self.check_point(x.view())?;

        let (f_value, grad_f) = self.f.value_and_gradient(x.view());
        ensure_finite(f_value, "smooth term value")?;
        if !linalg::all_finite(grad_f.view()) {
            return Err(Error::NonFinite("smooth term gradient"));
        }

        let mut forward = x.clone();
        forward.scaled_add(-gamma, &grad_f);
        let backward = self.p.prox(gamma, forward.view());
        let p_value = ensure_finite(self.p.value(backward.view()), "nonsmooth term at prox point")?;

        let fbe = f_value - 0.5 * gamma * linalg::norm_sq(grad_f.view())
            + p_value
            + linalg::dist(backward.view(), forward.view()).powi(2) / (2.0 * gamma);
        ensure_finite(fbe, "envelope value")?;
        let residual = linalg::dist(x.view(), backward.view());

        Ok(FbePoint {
            x,
            gamma,
            f_value,
            grad_f,
            forward,
            backward,
            p_value,
            fbe,
            residual,
            fbe_grad: OnceCell::new(),
        })
    }

    /// `𝒫_γ(x) = prox_{γP}(x − γ∇f(x))`.
    pub fn prox_grad_map(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        Ok(self.evaluate(x.to_owned(), gamma)?.backward)
    }

    pub fn fbe_value(&self, x: ArrayView1<f64>, gamma: f64) -> Result<f64> {
        Ok(self.evaluate(x.to_owned(), gamma)?.fbe)
    }

    pub fn fbe_gradient(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        let point = self.evaluate(x.to_owned(), gamma)?;
        Ok(point.gradient(self)?.clone())
    }

    /// `‖x − 𝒫_γ(x)‖`; zero exactly at stationary points.
    pub fn residual(&self, x: ArrayView1<f64>, gamma: f64) -> Result<f64> {
        Ok(self.evaluate(x.to_owned(), gamma)?.residual)
    }

    /// Bregman distance `D_φ(y, x)` of `φ = ‖·‖²/(2γ) − f`.
    ///
    /// `F_γ(x) = inf_y f(y) + P(y) + D_φ(y, x)`, so every `y` gives an upper
    /// bound on the envelope.
    pub fn bregman_distance(&self, y: ArrayView1<f64>, x: ArrayView1<f64>, gamma: f64) -> Result<f64> {
        self.check_gamma(gamma)?;
        self.check_point(x)?;
        self.check_point(y)?;
        let (fx, gx) = self.f.value_and_gradient(x);
        let fy = self.f.value(y);
        let diff = &y - &x;
        let linearization_gap = fy - fx - gx.dot(&diff);
        ensure_finite(
            linalg::norm_sq(diff.view()) / (2.0 * gamma) - linearization_gap,
            "bregman distance",
        )
    }
}

/// Cached envelope evaluation at one point.
///
/// The envelope value, its gradient and the fixed-point residual all share a
/// single gradient of `f` and a single prox. The envelope gradient costs one
/// extra Hessian-vector product and is computed on first request.
#[derive(Debug, Clone)]
pub struct FbePoint {
    x: Array1<f64>,
    gamma: f64,
    f_value: f64,
    grad_f: Array1<f64>,
    forward: Array1<f64>,
    backward: Array1<f64>,
    p_value: f64,
    fbe: f64,
    residual: f64,
    fbe_grad: OnceCell<Array1<f64>>,
}

impl FbePoint {
    pub fn x(&self) -> &Array1<f64> {
        &self.x
    }

    pub fn into_x(self) -> Array1<f64> {
        self.x
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn f_value(&self) -> f64 {
        self.f_value
    }

    pub fn grad_f(&self) -> &Array1<f64> {
        &self.grad_f
    }

    /// `u = x − γ∇f(x)`.
    pub fn forward(&self) -> &Array1<f64> {
        &self.forward
    }

    /// `p = prox_{γP}(u)`.
    pub fn backward(&self) -> &Array1<f64> {
        &self.backward
    }

    pub fn p_value(&self) -> f64 {
        self.p_value
    }

    pub fn fbe(&self) -> f64 {
        self.fbe
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `∇F_γ(x) = (x − p)/γ − ∇²f(x)(x − p)`.
    pub fn gradient<F, P>(&self, problem: &CompositeProblem<F, P>) -> Result<&Array1<f64>>
    where
        F: SmoothTerm,
        P: ProxableTerm,
    {
        if let Some(g) = self.fbe_grad.get() {
            return Ok(g);
        }
        let r = &self.x - &self.backward;
        let mut g = problem.f.hess_vec(self.x.view(), r.view());
        g *= -1.0;
        g.scaled_add(1.0 / self.gamma, &r);
        if !linalg::all_finite(g.view()) {
            return Err(Error::NonFinite("envelope gradient"));
        }
        Ok(self.fbe_grad.get_or_init(|| g))
    }
}

/// `f(x) = ½xᵀQx + cᵀx + k` with symmetric `Q`.
#[derive(Debug, Clone)]
pub struct QuadraticTerm {
    q: Array2<f64>,
    c: Array1<f64>,
    constant: f64,
    curvature_bound: f64,
}

impl QuadraticTerm {
    /// `curvature_bound` must dominate the spectral radius of `q`.
    pub fn new(q: Array2<f64>, c: Array1<f64>, constant: f64, curvature_bound: f64) -> Result<Self> {
        ensure_dim(q.nrows(), q.ncols())?;
        ensure_dim(q.nrows(), c.len())?;
        Ok(Self { q, c, constant, curvature_bound })
    }

    /// `½‖x − center‖²`, with `L = 1`.
    pub fn centered(center: Array1<f64>) -> Self {
        let n = center.len();
        let constant = 0.5 * linalg::norm_sq(center.view());
        Self {
            q: Array2::eye(n),
            c: -center,
            constant,
            curvature_bound: 1.0,
        }
    }
}

impl SmoothTerm for QuadraticTerm {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: ArrayView1<f64>) -> f64 {
        0.5 * x.dot(&self.q.dot(&x)) + self.c.dot(&x) + self.constant
    }

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.q.dot(&x) + &self.c
    }

    fn hess_vec(&self, _x: ArrayView1<f64>, v: ArrayView1<f64>) -> Array1<f64> {
        self.q.dot(&v)
    }

    fn curvature_bound(&self) -> f64 {
        self.curvature_bound
    }
}
