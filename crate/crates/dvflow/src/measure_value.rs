//! The generalized value function on particle measures: the decoupled
//! per-particle route for simple potentials, the joint direct optimizer for
//! general functionals, and pushforward path construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{growth_gate, solve_classical, SolveStats};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::measure::ParticleMeasure;
use crate::path::{discounted_action, MeasurePath};
use crate::potential::{MeasurePotential, Potential};
use crate::problem::{delta_validity, ProblemSpec};
use crate::solver_core::minimize_action;

/// Which route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    Decoupled,
    Direct,
}

/// Solver output: the value, the minimizing measure path, and diagnostics
/// inputs (per-particle values when the decoupling applies, optimizer stats,
/// crossing events).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueReport {
    pub value: f64,
    pub per_particle_values: Option<Vec<f64>>,
    pub path: MeasurePath,
    pub stats: SolveStats,
    /// Node times at which two atoms coincide (Lagrangian speeds are only an
    /// upper bound on the metric derivative there).
    pub crossings: usize,
    pub mode: SolverMode,
}

impl ValueReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

const CROSSING_TOL: f64 = 1e-9;

/// Value of a simple potential by per-particle decoupling: each atom solves
/// its own classical problem and the value is the weighted sum. The path is
/// the per-atom minimizers carried under the base weights.
pub fn solve_simple_potential<P: Potential + Sync>(
    mu: &ParticleMeasure,
    potential: &P,
    spec: &ProblemSpec,
) -> Result<ValueReport> {
    spec.validate()?;
    let solutions: Vec<_> = mu
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            solve_classical(x, potential, spec).map_err(|e| Error::AtomSolve {
                atom: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_particle: Vec<f64> = solutions.iter().map(|s| s.value).collect();
    let value: f64 = per_particle
        .iter()
        .zip(mu.weights())
        .map(|(v, w)| v * w)
        .sum();
    let stats = merge_stats(solutions.iter().map(|s| &s.stats));
    let trajectories = solutions.into_iter().map(|s| s.trajectory).collect();
    let path = MeasurePath::from_trajectories(mu.clone(), trajectories)?;
    let crossings = path.crossing_events(CROSSING_TOL);
    Ok(ValueReport {
        value,
        per_particle_values: Some(per_particle),
        path,
        stats,
        crossings,
        mode: SolverMode::Decoupled,
    })
}

fn merge_stats<'a>(stats: impl Iterator<Item = &'a SolveStats>) -> SolveStats {
    let mut out = SolveStats {
        iterations: 0,
        evaluations: 0,
        grad_norm: 0.0,
        converged: true,
        monotone: true,
        starts: 0,
        critical_growth: false,
    };
    for s in stats {
        out.iterations += s.iterations;
        out.evaluations += s.evaluations;
        out.grad_norm = out.grad_norm.max(s.grad_norm);
        out.converged &= s.converged;
        out.monotone &= s.monotone;
        out.starts += s.starts;
        out.critical_growth |= s.critical_growth;
    }
    out
}

/// Jointly optimizes every node position of every atom against a general
/// measure functional. Warm starts: the constant path always, plus the
/// decoupled solution when the functional is a plain average of a pointwise
/// potential; the better optimum wins.
pub fn solve_direct(
    mu: &ParticleMeasure,
    pot: &dyn MeasurePotential,
    spec: &ProblemSpec,
) -> Result<ValueReport> {
    spec.validate()?;

    // Discount validity gate on the declared certificate.
    let mut critical_growth = false;
    if let Some(cert) = pot.growth(spec.p, spec.delta, mu.dimension()) {
        let gate = delta_validity(spec.p, cert.alpha, spec.delta);
        if !gate.pass {
            let admitted = pot.as_simple().is_some_and(|v| v.admits_critical_growth());
            if !admitted {
                return Err(Error::ValidityGate {
                    p: spec.p,
                    delta: spec.delta,
                    alpha: cert.alpha,
                    margin: gate.value,
                });
            }
        }
    }
    if let Some(v) = pot.as_simple() {
        critical_growth = growth_gate(v, spec)?;
    }

    let mut extra_starts = Vec::new();
    if let Some(v) = pot.as_simple() {
        if let Ok(decoupled) = solve_simple_potential(mu, &v, spec) {
            extra_starts.push(decoupled.path);
        }
    }

    let out = minimize_action(mu, pot, spec, &extra_starts)?;
    let value = discounted_action(&out.path, pot, spec)?;
    Ok(ValueReport {
        value,
        per_particle_values: None,
        crossings: out.path.crossing_events(CROSSING_TOL),
        path: out.path,
        stats: SolveStats {
            iterations: out.iterations,
            evaluations: out.evaluations,
            grad_norm: out.grad_norm,
            converged: out.converged,
            monotone: out.monotone,
            starts: out.starts,
            critical_growth,
        },
        mode: SolverMode::Direct,
    })
}

/// Transports every atom of `mu` along a flow map sampled at the grid nodes.
pub fn pushforward_path(
    mu: &ParticleMeasure,
    flow: &dyn Fn(&[f64], f64) -> Vec<f64>,
    grid: &TimeGrid,
) -> Result<MeasurePath> {
    let mut positions = Vec::with_capacity(mu.len());
    for x in mu.points() {
        let traj: Vec<Vec<f64>> = grid.nodes().iter().map(|&t| flow(x, t)).collect();
        for pt in &traj {
            if pt.len() != mu.dimension() || pt.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("flow map output"));
            }
        }
        positions.push(traj);
    }
    MeasurePath::new(mu.clone(), grid.clone(), positions)
}
