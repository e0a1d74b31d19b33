//! Closed-form proximal operators.
//!
//! Besides the usual shrinkage and ball projection this module carries the
//! exact minimizer of `½‖x − y‖² + μ₁‖x‖₁ − μ₂‖x‖` (with `μ₁ ≥ μ₂ > 0`), which
//! is the subproblem solved at every step of the nonmonotone proximal
//! gradient baseline.

use ndarray::{Array1, ArrayView1};

use crate::composite::ProxableTerm;
use crate::error::{Error, Result};
use crate::linalg;

/// Sign with `sign(0) = 0`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Componentwise `sign(yᵢ)·max(|yᵢ| − τ, 0)`.
pub fn soft_threshold(y: ArrayView1<f64>, tau: f64) -> Result<Array1<f64>> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!(
            "shrinkage threshold must be finite and nonnegative, got {tau}"
        )));
    }
    Ok(y.mapv(|v| shrink(v, tau)))
}

#[inline]
pub(crate) fn shrink(v: f64, tau: f64) -> f64 {
    sign(v) * (v.abs() - tau).max(0.0)
}

/// Euclidean projection onto the closed unit ball.
pub fn project_unit_ball(y: ArrayView1<f64>) -> Array1<f64> {
    let r = linalg::norm(y);
    if r <= 1.0 {
        y.to_owned()
    } else {
        y.mapv(|v| v / r)
    }
}

/// `P^γ(u) = P(p) + ‖p − u‖²/(2γ)` with `p = prox_{γP}(u)`.
pub fn moreau_value<P>(term: &P, gamma: f64, u: ArrayView1<f64>) -> Result<f64>
where
    P: ProxableTerm + ?Sized,
{
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    let p = term.prox(gamma, u);
    let value = term.value(p.view()) + linalg::dist(p.view(), u).powi(2) / (2.0 * gamma);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("moreau envelope"))
    }
}

/// A minimizer of `⟨v, x⟩` over `{x : ‖x‖ = 1, x ≥ 0}`.
///
/// If some `vᵢ < 0` the minimizer is `−v` restricted to those coordinates and
/// normalized. Otherwise it is the coordinate vector at the smallest entry of
/// `v`; ties go to the lowest index.
///
/// # Panics
///
/// Panics if `v` is empty.
pub fn sphere_linear_min(v: ArrayView1<f64>) -> Array1<f64> {
    assert!(!v.is_empty(), "sphere_linear_min needs at least one coordinate");
    let neg_norm = v
        .iter()
        .filter(|&&vi| vi < 0.0)
        .map(|vi| vi * vi)
        .sum::<f64>()
        .sqrt();
    if neg_norm > 0.0 {
        v.mapv(|vi| if vi < 0.0 { -vi / neg_norm } else { 0.0 })
    } else {
        let mut out = Array1::zeros(v.len());
        out[argmin_first(v.iter().copied())] = 1.0;
        out
    }
}

fn argmin_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for (i, value) in values.enumerate() {
        if value < best {
            best = value;
            best_idx = i;
        }
    }
    best_idx
}

/// Weights of the `ℓ₁ − ℓ₂` subproblem; `μ₁ ≥ μ₂ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1L2ProxParams {
    mu1: f64,
    mu2: f64,
}

impl L1L2ProxParams {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if !(mu2 > 0.0) || !mu1.is_finite() || mu1 < mu2 {
            return Err(Error::InvalidInput(format!(
                "l1-l2 prox requires mu1 >= mu2 > 0, got mu1 = {mu1}, mu2 = {mu2}"
            )));
        }
        Ok(Self { mu1, mu2 })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    /// `½‖x − y‖² + μ₁‖x‖₁ − μ₂‖x‖`.
    pub fn objective(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        0.5 * linalg::dist(x, y).powi(2) + self.mu1 * linalg::norm_l1(x) - self.mu2 * linalg::norm(x)
    }
}

/// Closed-form minimizer of `½‖x − y‖² + μ₁‖x‖₁ − μ₂‖x‖`.
///
/// With `I = {i : μ₁ < |yᵢ|}` nonempty, the solution is the soft-thresholded
/// `y` on `I`, rescaled so that its norm grows by `μ₂`. With `I` empty, only
/// the largest-magnitude entry (lowest index on ties) survives, with
/// magnitude `max(μ₂ − (μ₁ − |yᵢ|), 0)`.
pub fn l1l2_prox(y: ArrayView1<f64>, params: L1L2ProxParams) -> Array1<f64> {
    let L1L2ProxParams { mu1, mu2 } = params;
    let excess_norm = y
        .iter()
        .filter(|yi| mu1 < yi.abs())
        .map(|yi| (yi.abs() - mu1).powi(2))
        .sum::<f64>()
        .sqrt();

    if excess_norm > 0.0 {
        let scale = (mu2 + excess_norm) / excess_norm;
        return y.mapv(|yi| {
            if mu1 < yi.abs() {
                sign(yi) * scale * (yi.abs() - mu1)
            } else {
                0.0
            }
        });
    }

    let mut out = Array1::zeros(y.len());
    if y.is_empty() {
        return out;
    }
    let i_star = argmin_first(y.iter().map(|yi| mu1 - yi.abs()));
    let yi = y[i_star];
    out[i_star] = sign(yi) * (mu2 - (mu1 - yi.abs())).max(0.0);
    out
}

/// `P ≡ 0`; its prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroTerm;

impl ProxableTerm for ZeroTerm {
    fn value(&self, _x: ArrayView1<f64>) -> f64 {
        0.0
    }

    fn prox(&self, _tau: f64, u: ArrayView1<f64>) -> Array1<f64> {
        u.to_owned()
    }
}

/// `P(x) = weight·‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub weight: f64,
}

impl ProxableTerm for L1Norm {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        self.weight * linalg::norm_l1(x)
    }

    fn prox(&self, tau: f64, u: ArrayView1<f64>) -> Array1<f64> {
        let t = tau * self.weight;
        u.mapv(|v| shrink(v, t))
    }
}

/// Indicator of the closed unit ball.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitBallIndicator;

/// Slack on the ball membership test; projected points can land a few ulps
/// outside the sphere.
pub(crate) const BALL_SLACK: f64 = 1e-12;

impl ProxableTerm for UnitBallIndicator {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        if linalg::norm(x) <= 1.0 + BALL_SLACK {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, _tau: f64, u: ArrayView1<f64>) -> Array1<f64> {
        project_unit_ball(u)
    }
}
