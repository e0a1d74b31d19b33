//! Benchmark harness for the envelope L-BFGS method and the proximal
//! gradient baselines on seeded `ℓ₁₋₂` least-squares instances.

pub mod check;
pub mod config;
pub mod report;
pub mod runner;

pub use config::{BenchConfig, InstanceGroup, SolverEntry, SolverKind};
pub use runner::{run_benchmark, Row};
