use ndarray::{Array1, ArrayView1};

use crate::composite::{CompositeProblem, FbePoint, ProxableTerm, SmoothTerm};
use crate::error::{Error, Result};
use crate::linalg;

use super::LineSearchConfig;

#[derive(Debug, Clone)]
pub struct GatedDirection {
    pub direction: Array1<f64>,
    /// The candidate was rejected and `−g` returned instead.
    pub fallback: bool,
}

/// Accepts `candidate` if it is gradient related,
///
/// ```text
/// ⟨g, d⟩ ≤ −c₁‖g‖‖d‖,    ‖g‖/c₂ ≤ ‖d‖ ≤ c₂‖g‖,
/// ```
///
/// and falls back to `−g` otherwise. At `g = 0` the zero direction is returned.
pub fn gate_direction(g: ArrayView1<f64>, candidate: Array1<f64>, c1: f64, c2: f64) -> GatedDirection {
    let gn = linalg::norm(g);
    if gn == 0.0 {
        return GatedDirection { direction: Array1::zeros(g.len()), fallback: false };
    }
    let dn = linalg::norm(candidate.view());
    let angle_ok = g.dot(&candidate) <= -c1 * gn * dn;
    let norm_ok = gn / c2 <= dn && dn <= c2 * gn;
    if angle_ok && norm_ok && dn.is_finite() {
        GatedDirection { direction: candidate, fallback: false }
    } else {
        GatedDirection { direction: g.mapv(|v| -v), fallback: true }
    }
}

#[derive(Debug, Clone)]
pub struct ArmijoStep {
    pub alpha: f64,
    pub point: FbePoint,
    pub backtracks: usize,
}

/// Backtracks `α ∈ {1, η, η², ...}` until
/// `F_γ(x + αd) ≤ F_γ(x) + σα⟨∇F_γ(x), d⟩`.
///
/// Trial points whose envelope overflows count as rejections. After
/// `max_backtracks` rejections the search fails with [`Error::LineSearch`].
pub fn armijo_search<F, P>(
    problem: &CompositeProblem<F, P>,
    current: &FbePoint,
    d: ArrayView1<f64>,
    config: &LineSearchConfig,
) -> Result<ArmijoStep>
where
    F: SmoothTerm,
    P: ProxableTerm,
{
    if d.iter().all(|&v| v == 0.0) {
        return Ok(ArmijoStep { alpha: 1.0, point: current.clone(), backtracks: 0 });
    }
    let slope = current.gradient(problem)?.dot(&d);
    if !(slope < 0.0) {
        return Err(Error::InvalidInput(format!("not a descent direction, slope {slope}")));
    }
    let f0 = current.fbe();
    let mut alpha = 1.0;
    for backtracks in 0..=config.max_backtracks {
        let mut trial = current.x().clone();
        trial.scaled_add(alpha, &d);
        match problem.evaluate(trial, current.gamma()) {
            Ok(point) if point.fbe() <= f0 + config.sigma * alpha * slope => {
                return Ok(ArmijoStep { alpha, point, backtracks });
            }
            Ok(_) | Err(Error::NonFinite(_)) | Err(Error::InvalidInput(_)) => {}
            Err(e) => return Err(e),
        }
        alpha *= config.eta;
    }
    Err(Error::LineSearch { backtracks: config.max_backtracks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::QuadraticTerm;
    use crate::prox::{L1Norm, ZeroTerm};
    use ndarray::{array, Array2};

    const C1: f64 = 1e-5;
    const C2: f64 = 1e5;

    #[test]
    fn steepest_descent_candidate_is_accepted() {
        let g = array![1.0, -2.0];
        let out = gate_direction(g.view(), -&g, C1, C2);
        assert!(!out.fallback);
        assert_eq!(out.direction, -&g);
    }

    #[test]
    fn orthogonal_candidate_is_rejected() {
        let g = array![1.0, 0.0];
        let out = gate_direction(g.view(), array![0.0, 1.0], C1, C2);
        assert!(out.fallback);
        assert_eq!(out.direction, array![-1.0, 0.0]);
    }

    #[test]
    fn oversized_candidate_is_rejected() {
        let g = array![0.6, 0.8];
        let out = gate_direction(g.view(), g.mapv(|v| -1e9 * v), C1, C2);
        assert!(out.fallback);
        assert_eq!(out.direction, -&g);
        let tiny = gate_direction(g.view(), g.mapv(|v| -1e-9 * v), C1, C2);
        assert!(tiny.fallback);
    }

    #[test]
    fn zero_gradient_gives_zero_direction() {
        let out = gate_direction(array![0.0, 0.0].view(), array![1.0, 1.0], C1, C2);
        assert_eq!(out.direction, array![0.0, 0.0]);
    }

    #[test]
    fn full_step_accepted_on_quadratic_envelope() {
        // f = ½‖x‖², P ≡ 0: F_γ = ((1−γ)/2)‖x‖², −∇F_γ lands exactly at γx
        let f = QuadraticTerm::centered(array![0.0, 0.0]);
        let prob = CompositeProblem::new(f, ZeroTerm).unwrap();
        let cur = prob.evaluate(array![1.0, -3.0], 0.5).unwrap();
        let d = -cur.gradient(&prob).unwrap();
        let step = armijo_search(&prob, &cur, d.view(), &LineSearchConfig::default()).unwrap();
        assert_eq!(step.alpha, 1.0);
        assert!(step.point.fbe() < cur.fbe());
    }

    #[test]
    fn zero_direction_keeps_point() {
        let prob = CompositeProblem::new(QuadraticTerm::centered(array![1.0]), ZeroTerm).unwrap();
        let cur = prob.evaluate(array![1.0], 0.5).unwrap();
        let step = armijo_search(&prob, &cur, array![0.0].view(), &LineSearchConfig::default()).unwrap();
        assert_eq!(step.alpha, 1.0);
        assert_eq!(step.point.x(), cur.x());
    }

    #[test]
    fn overshooting_direction_backtracks() {
        // stiff quadratic: the unscaled step 100·(−∇F) overshoots badly
        let q = Array2::from_diag(&array![10.0, 1.0]);
        let f = QuadraticTerm::new(q, array![0.0, 0.0], 0.0, 10.0).unwrap();
        let prob = CompositeProblem::new(f, L1Norm { weight: 0.1 }).unwrap();
        let cur = prob.evaluate(array![1.0, 1.0], 0.05).unwrap();
        let d = cur.gradient(&prob).unwrap().mapv(|v| -100.0 * v);
        let step = armijo_search(&prob, &cur, d.view(), &LineSearchConfig::default()).unwrap();
        assert!(step.alpha < 1.0);
        assert!(step.backtracks > 0);
        assert!(step.point.fbe() < cur.fbe());
    }

    #[test]
    fn ascent_direction_is_rejected() {
        let prob = CompositeProblem::new(QuadraticTerm::centered(array![0.0]), ZeroTerm).unwrap();
        let cur = prob.evaluate(array![1.0], 0.5).unwrap();
        let d = cur.gradient(&prob).unwrap().clone();
        assert!(armijo_search(&prob, &cur, d.view(), &LineSearchConfig::default()).is_err());
    }
}
