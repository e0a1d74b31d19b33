//! Composite minimization through the forward-backward envelope.
//!
//! For `min f(x) + P(x)` with `f` smooth (gradient Lipschitz with constant
//! `L`) and `P` proximable, the envelope
//!
//! ```text
//! F_γ(x) = f(x) − (γ/2)‖∇f(x)‖² + P^γ(x − γ∇f(x)),    0 < γ < 1/L,
//! ```
//!
//! is continuously differentiable and shares its stationary points with
//! `f + P`. [`solvers::minimize_envelope`] runs L-BFGS with Armijo
//! backtracking on it. The [`dc`] module lifts `ℓ₁₋₂` regularized least
//! squares into that form, and [`solvers::npg_minimize`] and
//! [`solvers::npg_major_minimize`] are proximal-gradient baselines on the
//! original problem. [`instance`] builds the seeded random test families.

pub mod composite;
pub mod dc;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod prox;
pub mod solvers;

pub use composite::{CompositeProblem, FbePoint, ProxableTerm, QuadraticTerm, SmoothTerm};
pub use dc::{DcLeastSquares, LiftedProblem, ProductVar, Regularizer};
pub use error::{Error, Result};
pub use instance::{Family, Instance, InstanceSpec};
pub use solvers::{LineSearchConfig, NpgConfig, RunReport, Termination};
