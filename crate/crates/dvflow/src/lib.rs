//! Infinite-horizon discounted value functions over particle measures.
//!
//! The crate computes the classical value function
//!
//!   u(x) = inf { int_0^inf e^{-delta t} [ (1/p)|gamma'|^p - V(gamma) ] dt }
//!
//! and its measure-space counterpart, where the state is a finitely
//! supported probability measure transported by per-particle trajectories
//! and the running reward is a functional V(mu). Alongside the two solvers
//! (a per-particle decoupled one for simple potentials V(mu) = int V dmu and
//! a joint one for general functionals) it ships the machinery needed to
//! certify the outputs numerically:
//!
//! * exact p-Wasserstein distances and optimal plans (transportation simplex),
//! * a brute-force Levy-Prokhorov oracle and the Lambda^2 <= W_1 comparison,
//! * discounted actions with exact exponential quadrature, weighted Poincare
//!   checks, and the truncated locally-uniform path metric,
//! * closed-form linear and power-law families for end-to-end validation,
//! * diagnostics: dynamic-programming splitting residuals, weak momentum-
//!   balance residuals against compactly supported test fields, terminal
//!   decay, one-sided perturbation (subdifferential) checks, gradient-flow
//!   residuals, stationarity of the measure-level Hamilton-Jacobi equation,
//!   value bounds, and modulus-of-continuity comparisons.

pub mod classical;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod levy_prokhorov;
pub mod measure;
pub mod measure_value;
pub mod optim;
pub mod path;
pub mod potential;
pub mod problem;
pub(crate) mod solver_core;
pub(crate) mod transcription;
pub mod transport;
pub mod vec_ops;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use measure::{ParticleMeasure, PlanEntry, TransportPlan};
pub use path::{MeasurePath, Trajectory};
pub use potential::{
    simple_potential_lift, AnalyticPotential, GrowthCertificate, MeasurePotential, Potential,
};
pub use problem::{delta_validity, DeltaValidity, ProblemSpec};
