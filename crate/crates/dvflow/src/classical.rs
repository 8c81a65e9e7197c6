//! The classical value function by direct transcription, its optimality
//! residuals, and the two closed-form validation families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::ParticleMeasure;
use crate::measure_value::pushforward_path;
use crate::path::{Trajectory, MOMENTUM_EPS};
use crate::potential::{simple_potential_lift, Potential};
use crate::problem::{delta_validity, ProblemSpec};
use crate::solver_core::minimize_action;
use crate::vec_ops;

/// Optimizer bookkeeping attached to every solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub monotone: bool,
    /// Number of starting points tried (constant path, warm starts).
    pub starts: usize,
    /// The potential sits outside the certified growth class (r < p); the
    /// solve ran because the family is known to stay finite regardless.
    pub critical_growth: bool,
}

#[derive(Debug, Clone)]
pub struct ClassicalSolution {
    pub value: f64,
    pub trajectory: Trajectory,
    pub stats: SolveStats,
}

/// Refuses potentials whose upper growth makes the discounted action
/// unbounded below; returns whether the solve is outside the certified
/// r < p class but admitted anyway.
pub(crate) fn growth_gate(v: &dyn Potential, spec: &ProblemSpec) -> Result<bool> {
    let critical = v
        .pointwise_growth()
        .is_some_and(|g| g.r >= spec.p && g.a > 0.0);
    if let Some(up) = v.upper_growth() {
        if up.a > 0.0 && up.r >= spec.p {
            let gate = delta_validity(spec.p, up.a, spec.delta);
            let hopeless = up.r > spec.p;
            if (hopeless || !gate.pass) && !v.admits_critical_growth() {
                return Err(Error::ValidityGate {
                    p: spec.p,
                    delta: spec.delta,
                    alpha: up.a,
                    margin: gate.value,
                });
            }
        }
    }
    Ok(critical)
}

/// Minimizes the discounted action over piecewise-linear paths from `x`.
///
/// The optimizer always starts from the constant path; when
/// `spec.warm_start_closed_form` is set and the potential registers a
/// closed-form flow, that flow (sampled on the grid) is run as a second
/// start and the better of the two results is returned. Non-convergence is
/// reported in the stats, not as an error.
pub fn solve_classical(
    x: &[f64],
    potential: &dyn Potential,
    spec: &ProblemSpec,
) -> Result<ClassicalSolution> {
    spec.validate()?;
    let critical_growth = growth_gate(potential, spec)?;
    let mu = ParticleMeasure::dirac(x.to_vec())?;
    let lift = simple_potential_lift(potential);

    let mut extra_starts = Vec::new();
    if spec.warm_start_closed_form {
        if let Some(flow) = potential.closed_form_flow(spec.p, spec.delta) {
            if let Ok(path) = pushforward_path(&mu, &*flow, &spec.grid()?) {
                extra_starts.push(path);
            }
        }
    }

    let out = minimize_action(&mu, &lift, spec, &extra_starts)?;
    Ok(ClassicalSolution {
        value: out.value,
        trajectory: out.path.trajectory(0),
        stats: SolveStats {
            iterations: out.iterations,
            evaluations: out.evaluations,
            grad_norm: out.grad_norm,
            converged: out.converged,
            monotone: out.monotone,
            starts: out.starts,
            critical_growth,
        },
    })
}

/// Residual norms of a stationarity condition along a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualSeries {
    /// Node indices the residual was evaluated at.
    pub nodes: Vec<usize>,
    pub per_node: Vec<f64>,
    pub max: f64,
}

impl ResidualSeries {
    fn from_values(nodes: Vec<usize>, per_node: Vec<f64>) -> Self {
        let max = per_node.iter().cloned().fold(0.0f64, f64::max);
        ResidualSeries {
            nodes,
            per_node,
            max,
        }
    }

    /// Max over the nodes selected by `keep` (by node index); used to window
    /// solver outputs to the numerically determined region.
    pub fn max_over_nodes(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.nodes
            .iter()
            .zip(&self.per_node)
            .filter(|(k, _)| keep(**k))
            .map(|(_, r)| *r)
            .fold(0.0f64, f64::max)
    }
}

/// Momentum-balance residual at interior nodes:
///
///   D_t(|v|^{p-2} v) + grad V(gamma_k) - delta |v_k|^{p-2} v_k,
///
/// with D_t the centered difference of interval momenta and v_k the mean of
/// the adjacent interval velocities.
pub fn euler_lagrange_residual(
    traj: &Trajectory,
    potential: &dyn Potential,
    spec: &ProblemSpec,
) -> Result<ResidualSeries> {
    let nodes = traj.grid().nodes().len();
    if nodes < 3 {
        return Err(Error::TooFewNodes(3, nodes));
    }
    let p = spec.p;
    let momenta: Vec<Vec<f64>> = (0..traj.grid().intervals())
        .map(|k| vec_ops::momentum(&traj.velocity(k), p, MOMENTUM_EPS))
        .collect();
    let mut idx = Vec::new();
    let mut res = Vec::new();
    for k in 1..traj.grid().intervals() {
        let half_span = 0.5 * (traj.grid().node(k + 1) - traj.grid().node(k - 1));
        let d_t = vec_ops::scale(&vec_ops::sub(&momenta[k], &momenta[k - 1]), 1.0 / half_span);
        let grad_v = potential.gradient(traj.position(k));
        let vbar = traj.node_velocity(k);
        let damped = vec_ops::momentum(&vbar, p, MOMENTUM_EPS);
        let mut r = d_t;
        vec_ops::axpy(&mut r, 1.0, &grad_v);
        vec_ops::axpy(&mut r, -spec.delta, &damped);
        idx.push(k);
        res.push(vec_ops::norm(&r));
    }
    Ok(ResidualSeries::from_values(idx, res))
}

/// Central-difference gradient of a value function handle; the default
/// stencil width is 1e-4 (1 + |x|).
pub fn grad_u_fd(
    x: &[f64],
    value: &dyn Fn(&[f64]) -> Result<f64>,
    h: Option<f64>,
) -> Result<Vec<f64>> {
    let h = h.unwrap_or_else(|| 1e-4 * (1.0 + vec_ops::norm(x)));
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = value(&probe)?;
        probe[i] = orig - h;
        let dn = value(&probe)?;
        probe[i] = orig;
        g[i] = (up - dn) / (2.0 * h);
        if !g[i].is_finite() {
            return Err(Error::NonFinite("finite-difference gradient"));
        }
    }
    Ok(g)
}

/// Stationarity defect of the Hamilton-Jacobi equation at a point:
/// delta u + (1/q) |grad u|^q + V(x).
pub fn hje_residual_classical(
    x: &[f64],
    u_val: f64,
    grad_u: &[f64],
    potential: &dyn Potential,
    spec: &ProblemSpec,
) -> f64 {
    let q = spec.q();
    spec.delta * u_val + vec_ops::norm(grad_u).powf(q) / q + potential.value(x)
}

/// Defect of the gradient-flow characterization of minimizers,
/// |v|^{p-2} v + grad u(gamma), at interior nodes (the condition is an
/// almost-everywhere statement on the open half-line, and only interior
/// nodes carry second-order node velocities).
pub fn gradient_flow_residual(
    traj: &Trajectory,
    grad_u: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    spec: &ProblemSpec,
) -> Result<ResidualSeries> {
    let mut idx = Vec::new();
    let mut res = Vec::new();
    for k in 1..traj.grid().intervals() {
        let v = traj.node_velocity(k);
        let mut r = vec_ops::momentum(&v, spec.p, MOMENTUM_EPS);
        let g = grad_u(traj.position(k))?;
        vec_ops::axpy(&mut r, 1.0, &g);
        idx.push(k);
        res.push(vec_ops::norm(&r));
    }
    Ok(ResidualSeries::from_values(idx, res))
}

/// Closed-form solution for the linear potential V(x) = w . x + c:
/// u(x) = -(|w|^q/q + w.x + c)/delta, with straight-line minimizers.
#[derive(Debug, Clone)]
pub struct LinearClosedForm {
    pub w: Vec<f64>,
    pub c: f64,
    pub delta: f64,
    pub p: f64,
    drift: Vec<f64>,
}

pub fn closed_form_linear(w: &[f64], c: f64, delta: f64, p: f64) -> Result<LinearClosedForm> {
    if p <= 1.0 || !p.is_finite() {
        return Err(Error::InvalidExponent(p, 1.0));
    }
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::InvalidDiscount(delta));
    }
    let q = p / (p - 1.0);
    let m = vec_ops::scale(w, 1.0 / delta);
    let mn = vec_ops::norm(&m);
    let drift = if mn == 0.0 {
        vec![0.0; w.len()]
    } else {
        vec_ops::scale(&m, mn.powf(q - 2.0))
    };
    Ok(LinearClosedForm {
        w: w.to_vec(),
        c,
        delta,
        p,
        drift,
    })
}

impl LinearClosedForm {
    fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let q = self.q();
        -(vec_ops::norm(&self.w).powf(q) / q + vec_ops::dot(&self.w, x) + self.c) / self.delta
    }

    pub fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        vec_ops::scale(&self.w, -1.0 / self.delta)
    }

    /// Flow map: x + t |w/delta|^{q-2} (w/delta).
    pub fn flow(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = x.to_vec();
        vec_ops::axpy(&mut out, t, &self.drift);
        out
    }

    /// Value of the lifted functional at a particle measure.
    pub fn measure_value(&self, mu: &ParticleMeasure) -> f64 {
        self.value(&mu.mean())
    }
}

/// Closed-form solution for the power well V(x) = -|x|^p / p:
/// u(x) = a |x|^p / p with a the positive root of
/// delta a + (p-1) a^q - 1 = 0, and exponentially contracting minimizers
/// x e^{-a^{q-1} t}.
#[derive(Debug, Clone)]
pub struct PowerClosedForm {
    pub a: f64,
    pub delta: f64,
    pub p: f64,
    /// Contraction rate a^{q-1}.
    pub rate: f64,
}

pub fn closed_form_power(p: f64, delta: f64) -> Result<PowerClosedForm> {
    if p <= 1.0 || !p.is_finite() {
        return Err(Error::InvalidExponent(p, 1.0));
    }
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::InvalidDiscount(delta));
    }
    let q = p / (p - 1.0);
    let f = |a: f64| delta * a + (p - 1.0) * a.powf(q) - 1.0;
    // f(0) = -1 and f(1/delta) = (p-1)/delta^q > 0, so the root lies in
    // (0, 1/delta]; bisect to 1e-12.
    let mut lo = 0.0;
    let mut hi = 1.0 / delta;
    assert!(f(hi) > 0.0, "root bracket must hold for p > 1, delta > 0");
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    Ok(PowerClosedForm {
        a,
        delta,
        p,
        rate: a.powf(q - 1.0),
    })
}

impl PowerClosedForm {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.a * vec_ops::norm(x).powf(self.p) / self.p
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = vec_ops::norm(x);
        if n == 0.0 {
            return vec![0.0; x.len()];
        }
        vec_ops::scale(x, self.a * n.powf(self.p - 2.0))
    }

    pub fn flow(&self, x: &[f64], t: f64) -> Vec<f64> {
        vec_ops::scale(x, (-self.rate * t).exp())
    }

    /// The matching potential, V(x) = -|x|^p / p.
    pub fn potential(&self) -> crate::potential::AnalyticPotential {
        crate::potential::AnalyticPotential::power_well(self.p)
    }

    pub fn measure_value(&self, mu: &ParticleMeasure) -> Result<f64> {
        Ok(self.a * mu.pth_moment(self.p)? / self.p)
    }
}
