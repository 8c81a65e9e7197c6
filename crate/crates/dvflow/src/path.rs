//! Piecewise-linear trajectories and measure paths, discounted actions,
//! Lagrangian metric derivatives, the weighted Poincare check, and the
//! locally-uniform path metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::measure::ParticleMeasure;
use crate::potential::MeasurePotential;
use crate::problem::ProblemSpec;
use crate::transport;
use crate::vec_ops;

/// Regularization inside the p-momentum for 1 < p < 2.
pub const MOMENTUM_EPS: f64 = 1e-9;

/// A single piecewise-linear path on a time grid: the velocity on interval k
/// is the constant (x_{k+1} - x_k) / dt_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    grid: TimeGrid,
    /// One position per node.
    positions: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, positions: Vec<Vec<f64>>) -> Result<Self> {
        if positions.len() != grid.nodes().len() {
            return Err(Error::LengthMismatch(
                "nodes",
                grid.nodes().len(),
                "positions",
                positions.len(),
            ));
        }
        let d = positions[0].len();
        for x in &positions {
            if x.len() != d {
                return Err(Error::DimensionMismatch(d, x.len()));
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("trajectory positions"));
            }
        }
        Ok(Trajectory { grid, positions })
    }

    pub fn constant(grid: TimeGrid, x: Vec<f64>) -> Result<Self> {
        let positions = vec![x; grid.nodes().len()];
        Self::new(grid, positions)
    }

    /// Samples a flow map (x, t) -> position on the grid nodes.
    pub fn from_flow(
        grid: TimeGrid,
        start: &[f64],
        flow: impl Fn(&[f64], f64) -> Vec<f64>,
    ) -> Result<Self> {
        let positions: Vec<Vec<f64>> = grid.nodes().iter().map(|&t| flow(start, t)).collect();
        Self::new(grid, positions)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.positions[0].len()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k]
    }

    pub fn start(&self) -> &[f64] {
        &self.positions[0]
    }

    /// Constant velocity on interval k.
    pub fn velocity(&self, k: usize) -> Vec<f64> {
        let dt = self.grid.dt(k);
        vec_ops::scale(
            &vec_ops::sub(&self.positions[k + 1], &self.positions[k]),
            1.0 / dt,
        )
    }

    /// Velocity attributed to node k: the mean of the adjacent interval
    /// velocities in the interior, one-sided at the ends.
    pub fn node_velocity(&self, k: usize) -> Vec<f64> {
        let m = self.grid.intervals();
        if k == 0 {
            self.velocity(0)
        } else if k == m {
            self.velocity(m - 1)
        } else {
            let a = self.velocity(k - 1);
            let b = self.velocity(k);
            vec_ops::scale(&vec_ops::add(&a, &b), 0.5)
        }
    }
}

/// A family of trajectories carrying the atoms of a base measure; weights are
/// constant in time, so mass is conserved by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurePath {
    base: ParticleMeasure,
    grid: TimeGrid,
    /// positions[i][k]: atom i at node k.
    positions: Vec<Vec<Vec<f64>>>,
}

impl MeasurePath {
    pub fn new(
        base: ParticleMeasure,
        grid: TimeGrid,
        positions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if positions.len() != base.len() {
            return Err(Error::LengthMismatch(
                "atoms",
                base.len(),
                "trajectories",
                positions.len(),
            ));
        }
        for traj in &positions {
            if traj.len() != grid.nodes().len() {
                return Err(Error::LengthMismatch(
                    "nodes",
                    grid.nodes().len(),
                    "positions",
                    traj.len(),
                ));
            }
            for x in traj {
                if x.len() != base.dimension() {
                    return Err(Error::DimensionMismatch(base.dimension(), x.len()));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite("measure path positions"));
                }
            }
        }
        Ok(MeasurePath {
            base,
            grid,
            positions,
        })
    }

    /// Every atom stays where it starts.
    pub fn constant(base: ParticleMeasure, grid: TimeGrid) -> Result<Self> {
        let positions = base
            .points()
            .iter()
            .map(|x| vec![x.clone(); grid.nodes().len()])
            .collect();
        Self::new(base, grid, positions)
    }

    pub fn from_trajectories(base: ParticleMeasure, trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::EmptyInput("trajectories"));
        }
        let grid = trajectories[0].grid().clone();
        for t in &trajectories {
            if t.grid().nodes() != grid.nodes() {
                return Err(Error::GridMismatch("trajectories must share one grid"));
            }
        }
        let positions = trajectories.into_iter().map(|t| t.positions).collect();
        Self::new(base, grid, positions)
    }

    pub fn base(&self) -> &ParticleMeasure {
        &self.base
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn atoms(&self) -> usize {
        self.base.len()
    }

    pub fn position(&self, atom: usize, node: usize) -> &[f64] {
        &self.positions[atom][node]
    }

    pub fn velocity(&self, atom: usize, interval: usize) -> Vec<f64> {
        let dt = self.grid.dt(interval);
        vec_ops::scale(
            &vec_ops::sub(
                &self.positions[atom][interval + 1],
                &self.positions[atom][interval],
            ),
            1.0 / dt,
        )
    }

    pub fn node_velocity(&self, atom: usize, k: usize) -> Vec<f64> {
        let m = self.grid.intervals();
        if k == 0 {
            self.velocity(atom, 0)
        } else if k == m {
            self.velocity(atom, m - 1)
        } else {
            let a = self.velocity(atom, k - 1);
            let b = self.velocity(atom, k);
            vec_ops::scale(&vec_ops::add(&a, &b), 0.5)
        }
    }

    /// The measure sigma(t_k).
    pub fn measure_at(&self, k: usize) -> ParticleMeasure {
        let points = self.positions.iter().map(|traj| traj[k].clone()).collect();
        ParticleMeasure::new(points, self.base.weights().to_vec())
            .expect("weights were valid in the base measure")
    }

    pub fn trajectory(&self, atom: usize) -> Trajectory {
        Trajectory {
            grid: self.grid.clone(),
            positions: self.positions[atom].clone(),
        }
    }

    /// Remainder path on [t_s, T], time-shifted to start at 0.
    pub fn shifted_remainder(&self, s: usize) -> Result<Self> {
        let grid = self.grid.shifted_tail(s)?;
        let positions = self
            .positions
            .iter()
            .map(|traj| traj[s..].to_vec())
            .collect();
        Self::new(self.base.clone(), grid, positions)
    }

    /// Node times at which two distinct atoms coincide. The Lagrangian speed
    /// is only an upper bound for the metric derivative across such events,
    /// so they are surfaced in reports instead of being resolved.
    pub fn crossing_events(&self, tol: f64) -> usize {
        let n = self.atoms();
        let mut count = 0;
        for k in 0..self.grid.nodes().len() {
            for i in 0..n {
                for j in (i + 1)..n {
                    if vec_ops::dist(&self.positions[i][k], &self.positions[j][k]) <= tol {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    /// CSV rows `particle,t,x1..xd`.
    pub fn to_csv(&self) -> String {
        let d = self.base.dimension();
        let mut out = String::from("particle,t");
        for a in 0..d {
            out.push_str(&format!(",x{}", a + 1));
        }
        out.push('\n');
        for (i, traj) in self.positions.iter().enumerate() {
            for (k, x) in traj.iter().enumerate() {
                out.push_str(&format!("{},{:.16e}", i, self.grid.node(k)));
                for c in x {
                    out.push_str(&format!(",{:.16e}", c));
                }
                out.push('\n');
            }
        }
        out
    }

    /// JSON manifest carrying the grid, the (time-constant) weights, and the
    /// hash of the configuration that produced the path.
    pub fn manifest(&self, spec_hash: &str) -> Result<String> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            grid: &'a TimeGrid,
            weights: &'a [f64],
            spec_hash: &'a str,
        }
        Ok(serde_json::to_string_pretty(&Manifest {
            grid: &self.grid,
            weights: self.base.weights(),
            spec_hash,
        })?)
    }
}

/// Per-interval Lagrangian speed (sum_i w_i |v_i|^p)^{1/p}, the particle
/// realization of the metric derivative. It upper-bounds the true metric
/// derivative and coincides with it on non-crossing flows.
pub fn metric_derivative(path: &MeasurePath, p: f64) -> Result<Vec<f64>> {
    if p < 1.0 {
        return Err(Error::InvalidExponent(p, 1.0));
    }
    let weights = path.base().weights();
    let mut out = Vec::with_capacity(path.grid().intervals());
    for k in 0..path.grid().intervals() {
        let mut s = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            let v = path.velocity(i, k);
            s += w * vec_ops::norm(&v).powf(p);
        }
        out.push(s.powf(1.0 / p));
    }
    Ok(out)
}

/// int_0^T e^{-delta t} |gamma'(t)|^p dt, exact per interval since the speed
/// is piecewise constant.
pub fn ac_norm(traj: &Trajectory, p: f64, delta: f64) -> Result<f64> {
    if p <= 1.0 {
        return Err(Error::InvalidExponent(p, 1.0));
    }
    let grid = traj.grid().with_discount(delta)?;
    let speeds: Vec<f64> = (0..grid.intervals())
        .map(|k| vec_ops::norm(&traj.velocity(k)).powf(p))
        .collect();
    Ok(grid.integrate_piecewise_const(&speeds))
}

fn check_spec_grid(path_grid: &TimeGrid, spec: &ProblemSpec) -> Result<()> {
    let tol = 1e-9 * (1.0 + spec.horizon.abs());
    if (path_grid.horizon() - spec.horizon).abs() > tol {
        return Err(Error::HorizonMismatch(path_grid.horizon(), spec.horizon));
    }
    if (path_grid.discount() - spec.delta).abs() > 1e-12 * (1.0 + spec.delta) {
        return Err(Error::GridMismatch(
            "grid discount differs from problem spec",
        ));
    }
    Ok(())
}

/// The discounted action of a measure path:
///
///   sum_k int e^{-dt} [ (1/p) speed^p - V(sigma) ] dt
///     + e^{-delta T} (-V(sigma(T)) / delta)
///
/// with the kinetic integrand exact (piecewise-constant speeds), the
/// potential interpolated linearly between node values, and the tail term
/// the admissible stay-put continuation after T.
pub fn discounted_action(
    path: &MeasurePath,
    pot: &dyn MeasurePotential,
    spec: &ProblemSpec,
) -> Result<f64> {
    check_spec_grid(path.grid(), spec)?;
    let full = action_on_prefix(path, pot, path.grid().intervals(), spec.p)?;
    let terminal = pot.value(&path.measure_at(path.grid().intervals()));
    if !terminal.is_finite() {
        return Err(Error::NonFinite("potential at terminal measure"));
    }
    Ok(full + path.grid().tail_factor() * (-terminal / spec.delta))
}

/// Action restricted to [0, t_upto] (node index), without the tail term.
pub fn partial_action(
    path: &MeasurePath,
    pot: &dyn MeasurePotential,
    upto: usize,
    p: f64,
) -> Result<f64> {
    action_on_prefix(path, pot, upto, p)
}

fn action_on_prefix(
    path: &MeasurePath,
    pot: &dyn MeasurePotential,
    upto: usize,
    p: f64,
) -> Result<f64> {
    let grid = path.grid();
    debug_assert!(upto <= grid.intervals());
    let weights = path.base().weights();
    let mut kinetic = 0.0;
    for k in 0..upto {
        let mut s = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            let v = path.velocity(i, k);
            s += w * vec_ops::speed_power(&v, p, MOMENTUM_EPS);
        }
        kinetic += grid.interval_weight(k) * s / p;
    }
    let mut potential = 0.0;
    for k in 0..upto {
        let left = pot.value(&path.measure_at(k));
        let right = pot.value(&path.measure_at(k + 1));
        if !left.is_finite() || !right.is_finite() {
            return Err(Error::NonFinite("potential along path"));
        }
        potential += grid.left_weight(k) * left + grid.right_weight(k) * right;
    }
    Ok(kinetic - potential)
}

/// Result of the weighted Poincare comparison
/// (int e^{-dt}|u - u(0)|^p)^{1/p} <= (p/delta)(int e^{-dt} speed^p)^{1/p}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoincareReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

fn poincare_from_series(
    grid: &TimeGrid,
    u_at_nodes: &[f64],
    speed_p_per_interval: &[f64],
    p: f64,
    delta: f64,
) -> Result<PoincareReport> {
    if p < 1.0 {
        return Err(Error::InvalidExponent(p, 1.0));
    }
    let grid = grid.with_discount(delta)?;
    let u0 = u_at_nodes[0];
    let deviation: Vec<f64> = u_at_nodes.iter().map(|u| (u - u0).abs().powf(p)).collect();
    let lhs = grid.integrate_nodal(&deviation).max(0.0).powf(1.0 / p);
    let rhs = (p / delta)
        * grid
            .integrate_piecewise_const(speed_p_per_interval)
            .max(0.0)
            .powf(1.0 / p);
    Ok(PoincareReport {
        lhs,
        rhs,
        pass: lhs <= rhs + 1e-10,
    })
}

/// Poincare check for a single trajectory, with u(t) = |gamma(t) - gamma(0)|.
pub fn poincare_check_trajectory(traj: &Trajectory, p: f64, delta: f64) -> Result<PoincareReport> {
    let u: Vec<f64> = traj
        .positions()
        .iter()
        .map(|x| vec_ops::dist(x, traj.start()))
        .collect();
    let speeds: Vec<f64> = (0..traj.grid().intervals())
        .map(|k| vec_ops::norm(&traj.velocity(k)).powf(p))
        .collect();
    poincare_from_series(traj.grid(), &u, &speeds, p, delta)
}

/// Poincare check for a measure path, with u(t) = W_p(sigma(t), sigma(0))
/// and the Lagrangian speed on the right-hand side.
pub fn poincare_check_measure(path: &MeasurePath, p: f64, delta: f64) -> Result<PoincareReport> {
    let start = path.measure_at(0);
    let mut u = Vec::with_capacity(path.grid().nodes().len());
    for k in 0..path.grid().nodes().len() {
        u.push(transport::wasserstein_p(&path.measure_at(k), &start, p)?);
    }
    let weights = path.base().weights();
    let speeds: Vec<f64> = (0..path.grid().intervals())
        .map(|k| {
            (0..path.atoms())
                .map(|i| weights[i] * vec_ops::norm(&path.velocity(i, k)).powf(p))
                .sum()
        })
        .collect();
    poincare_from_series(path.grid(), &u, &speeds, p, delta)
}

/// Truncated locally-uniform path metric
/// sum_{k=0}^{K} 2^{-k} m_k / (1 + m_k), m_k = max_{grid nodes <= k} |g1 - g2|.
/// The dropped tail is bounded by 2^{-K}.
pub fn pi_distance(g1: &Trajectory, g2: &Trajectory, truncation: usize) -> Result<f64> {
    if g1.grid().nodes() != g2.grid().nodes() {
        return Err(Error::GridMismatch("trajectories must share one grid"));
    }
    if g1.dimension() != g2.dimension() {
        return Err(Error::DimensionMismatch(g1.dimension(), g2.dimension()));
    }
    if g1.grid().horizon() + 1e-12 < truncation as f64 {
        return Err(Error::GridMismatch(
            "grid horizon shorter than series truncation",
        ));
    }
    let nodes = g1.grid().nodes();
    let mut total = 0.0;
    let mut running_max = 0.0f64;
    let mut idx = 0usize;
    for k in 0..=truncation {
        while idx < nodes.len() && nodes[idx] <= k as f64 + 1e-12 {
            let d = vec_ops::dist(g1.position(idx), g2.position(idx));
            running_max = running_max.max(d);
            idx += 1;
        }
        total += 0.5f64.powi(k as i32) * running_max / (1.0 + running_max);
    }
    Ok(total)
}
