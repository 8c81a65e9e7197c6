//! Numerical certification of solver outputs: every identity and inequality
//! the theory guarantees for minimizers is evaluated as a residual or a
//! slack, with explicit tolerances.

use serde::{Deserialize, Serialize};

use crate::classical::ResidualSeries;
use crate::error::{Error, Result};
use crate::measure::ParticleMeasure;
use crate::path::{partial_action, MeasurePath, MOMENTUM_EPS};
use crate::potential::MeasurePotential;
use crate::problem::{delta_validity, DeltaValidity, ProblemSpec};
use crate::transport;
use crate::vec_ops;

/// A value-function evaluation handle, fresh for each query measure.
pub type ValueHandle<'a> = &'a dyn Fn(&ParticleMeasure) -> Result<f64>;

/// A gradient handle for the classical value function.
pub type GradHandle<'a> = &'a dyn Fn(&[f64]) -> Result<Vec<f64>>;

// ---------------------------------------------------------------------------
// Test fields
// ---------------------------------------------------------------------------

/// A compactly supported C^2 vector field: a fixed direction times the bump
/// (1 - |x-c|^2/r^2)^3 on its ball, zero outside. Optionally carries a time
/// profile of the same shape, compactly supported inside (0, T).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestField {
    pub center: Vec<f64>,
    pub radius: f64,
    pub direction: Vec<f64>,
    pub time_profile: Option<TimeBump>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeBump {
    pub center: f64,
    pub radius: f64,
}

impl TimeBump {
    pub fn value(&self, t: f64) -> f64 {
        let s = ((t - self.center) / self.radius).powi(2);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s).powi(3)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.radius;
        let s = u * u;
        if s >= 1.0 {
            0.0
        } else {
            -6.0 * (1.0 - s).powi(2) * u / self.radius
        }
    }
}

impl TestField {
    fn bump(&self, x: &[f64]) -> f64 {
        let s = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s).powi(3)
        }
    }

    fn bump_gradient(&self, x: &[f64]) -> Vec<f64> {
        let r2 = self.radius * self.radius;
        let s = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            / r2;
        if s >= 1.0 {
            return vec![0.0; x.len()];
        }
        let f = -6.0 * (1.0 - s) * (1.0 - s) / r2;
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| f * (a - c))
            .collect()
    }

    /// eta(x) = direction * bump(x).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        vec_ops::scale(&self.direction, self.bump(x))
    }

    /// (v . grad) eta at x.
    pub fn advect(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let g = self.bump_gradient(x);
        vec_ops::scale(&self.direction, vec_ops::dot(&g, v))
    }

    /// Deterministic suite of `count` bumps scattered over
    /// `center +- half_width` with time profiles supported in (0, t_span).
    /// The same seed always reproduces the same fields.
    pub fn suite(
        dim: usize,
        count: usize,
        seed: u64,
        center: &[f64],
        half_width: f64,
        t_span: f64,
    ) -> Vec<TestField> {
        let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
        let mut next = move || {
            // splitmix64: a fixed bit-mixing generator, stable across
            // builds, which is what reproducible field placement needs.
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z = z ^ (z >> 31);
            (z >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..count)
            .map(|_| {
                let c: Vec<f64> = (0..dim)
                    .map(|a| {
                        center.get(a).copied().unwrap_or(0.0) + (2.0 * next() - 1.0) * half_width
                    })
                    .collect();
                let radius = 1.5 + 1.5 * next();
                let mut direction: Vec<f64> = (0..dim).map(|_| 2.0 * next() - 1.0).collect();
                let n = vec_ops::norm(&direction);
                if n < 1e-9 {
                    direction = vec![1.0; dim];
                }
                let n = vec_ops::norm(&direction);
                direction = vec_ops::scale(&direction, 1.0 / n);
                let t_center = t_span * (0.25 + 0.25 * next());
                let t_radius = 0.8 * t_center.min(t_span - t_center);
                TestField {
                    center: c,
                    radius,
                    direction,
                    time_profile: Some(TimeBump {
                        center: t_center,
                        radius: t_radius,
                    }),
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

/// One named check: a measured quantity against its target and tolerance,
/// with a human-readable provenance for the tolerance and the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub provenance: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<CheckRecord>,
}

impl DiagnosticsReport {
    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat CSV: check name, lhs, rhs, slack, pass.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,lhs,rhs,slack,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{}\n",
                c.name,
                c.lhs,
                c.rhs,
                c.rhs - c.lhs,
                c.pass
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

/// Splitting identity: value vs partial action plus the discounted re-solved
/// value at the split measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DppCheck {
    pub t_split: f64,
    pub partial_action: f64,
    pub resolved_value: f64,
    pub split_value: f64,
    pub residual: f64,
}

pub fn dpp_residual(
    value: f64,
    path: &MeasurePath,
    pot: &dyn MeasurePotential,
    t_split: f64,
    resolve: ValueHandle<'_>,
    spec: &ProblemSpec,
) -> Result<DppCheck> {
    let k = path
        .grid()
        .node_index(t_split)
        .ok_or(Error::SplitOffGrid(t_split))?;
    let partial = partial_action(path, pot, k, spec.p)?;
    let sigma = path.measure_at(k);
    let resolved = resolve(&sigma)?;
    let split_value = partial + (-spec.delta * path.grid().node(k)).exp() * resolved;
    Ok(DppCheck {
        t_split,
        partial_action: partial,
        resolved_value: resolved,
        split_value,
        residual: value - split_value,
    })
}

/// Weak momentum-balance residual: for each test field Psi(x,t) = eta(x)f(t),
///
///   int int e^{-dt} { (dPsi/dt + (v.grad)Psi) . |v|^{p-2}v
///                     - gradV(sigma) . Psi } dsigma_t dt,
///
/// integrated with the exact exponential weights, interval velocities, and
/// node values of everything else. The continuity equation holds exactly in
/// the Lagrangian representation, so only momentum balance is measured.
pub fn euler_poisson_residual(
    path: &MeasurePath,
    pot: &dyn MeasurePotential,
    fields: &[TestField],
    spec: &ProblemSpec,
) -> Result<ResidualSeries> {
    let grid = path.grid();
    let m = grid.intervals();
    let n = path.atoms();
    let weights = path.base().weights().to_vec();

    // sigma(t_k) and the potential gradient at every atom, once per node.
    let mut grads: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let sigma = path.measure_at(k);
        grads.push((0..n).map(|i| pot.particle_gradient(&sigma, i)).collect());
    }

    let mut per_field = Vec::with_capacity(fields.len());
    for field in fields {
        let profile = field.time_profile.ok_or(Error::MissingTimeProfile)?;
        let mut total = 0.0;
        for k in 0..m {
            // Node contributions of interval k, with the interval velocity.
            for (node, w_node) in [(k, grid.left_weight(k)), (k + 1, grid.right_weight(k))] {
                let t = grid.node(node);
                let f = profile.value(t);
                let df = profile.derivative(t);
                if f == 0.0 && df == 0.0 {
                    continue;
                }
                let mut integrand = 0.0;
                for i in 0..n {
                    let x = path.position(i, node);
                    let v = path.velocity(i, k);
                    let mom = vec_ops::momentum(&v, spec.p, MOMENTUM_EPS);
                    let eta = field.eval(x);
                    let mut transport_term = vec_ops::scale(&eta, df);
                    vec_ops::axpy(&mut transport_term, f, &field.advect(x, &v));
                    let drive = vec_ops::dot(&grads[node][i], &eta) * f;
                    integrand += weights[i] * (vec_ops::dot(&transport_term, &mom) - drive);
                }
                total += w_node * integrand;
            }
        }
        per_field.push(total.abs());
    }
    let max = per_field.iter().cloned().fold(0.0f64, f64::max);
    Ok(ResidualSeries {
        nodes: (0..fields.len()).collect(),
        per_node: per_field,
        max,
    })
}

/// Decay of the discounted momentum pairing along a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminalDecay {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Smallest C with |value(t)| <= C e^{-delta t} over the samples.
    pub envelope: f64,
    pub pass: bool,
}

/// Samples e^{-dt} sum_i w_i |v_i|^{p-2} v_i . eta(gamma_i(t)) on a
/// geometric time sequence; the sequence must collapse by a factor 1e-6
/// between the first and last sample (up to an absolute floor).
pub fn terminal_limit_check(
    path: &MeasurePath,
    eta: &TestField,
    spec: &ProblemSpec,
) -> TerminalDecay {
    let grid = path.grid();
    let horizon = grid.horizon();
    let mut sample_nodes = Vec::new();
    let mut t = horizon;
    loop {
        if let Some(k) = nearest_node(grid.nodes(), t) {
            if sample_nodes.last() != Some(&k) {
                sample_nodes.push(k);
            }
        }
        t /= 2.0;
        if t < 4.0 * horizon / grid.intervals() as f64 {
            break;
        }
    }
    sample_nodes.reverse();

    let weights = path.base().weights();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for &k in &sample_nodes {
        let tk = grid.node(k);
        let mut pairing = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            let v = path.node_velocity(i, k);
            let mom = vec_ops::momentum(&v, spec.p, MOMENTUM_EPS);
            pairing += w * vec_ops::dot(&mom, &eta.eval(path.position(i, k)));
        }
        times.push(tk);
        values.push((-spec.delta * tk).exp() * pairing);
    }
    let envelope = times
        .iter()
        .zip(&values)
        .map(|(t, v)| v.abs() * (spec.delta * t).exp())
        .fold(0.0f64, f64::max);
    let first = values.first().map(|v| v.abs()).unwrap_or(0.0);
    let last = values.last().map(|v| v.abs()).unwrap_or(0.0);
    TerminalDecay {
        times,
        values,
        envelope,
        pass: last <= 1e-6 * first + 1e-12,
    }
}

fn nearest_node(nodes: &[f64], t: f64) -> Option<usize> {
    nodes
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - t).abs().partial_cmp(&(*b - t).abs()).unwrap())
        .map(|(k, _)| k)
}

/// One-sided perturbation check at a node of an optimal path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubdiffCheck {
    pub epsilons: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Richardson extrapolation of the quotients towards eps -> 0+, an
    /// estimate (not a certification) of the one-sided limit.
    pub extrapolated: f64,
    /// Spread between successive extrapolants, the error estimate.
    pub extrapolation_spread: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Difference quotients of the value along (id + eps eta)# perturbations of
/// sigma(t) must stay above -<|v|^{p-2}v, eta> in the limit.
pub fn subdifferential_check(
    path: &MeasurePath,
    t: f64,
    eta: &TestField,
    resolve: ValueHandle<'_>,
    spec: &ProblemSpec,
) -> Result<SubdiffCheck> {
    let k = path.grid().node_index(t).ok_or(Error::SplitOffGrid(t))?;
    let sigma = path.measure_at(k);
    let base_value = resolve(&sigma)?;
    let epsilons = vec![1e-1, 1e-2, 1e-3];
    let mut quotients = Vec::with_capacity(epsilons.len());
    for &eps in &epsilons {
        let perturbed = sigma.map_points(|x| {
            let mut y = x.to_vec();
            vec_ops::axpy(&mut y, eps, &eta.eval(x));
            y
        })?;
        quotients.push((resolve(&perturbed)? - base_value) / eps);
    }
    // Successive Richardson steps for a first-order quotient at ratio 10.
    let l1 = (10.0 * quotients[1] - quotients[0]) / 9.0;
    let l2 = (10.0 * quotients[2] - quotients[1]) / 9.0;

    let weights = path.base().weights();
    let mut rhs = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let v = path.node_velocity(i, k);
        let mom = vec_ops::momentum(&v, spec.p, MOMENTUM_EPS);
        rhs -= w * vec_ops::dot(&mom, &eta.eval(path.position(i, k)));
    }
    Ok(SubdiffCheck {
        epsilons,
        quotients,
        extrapolated: l2,
        extrapolation_spread: (l2 - l1).abs(),
        rhs,
        pass: l2 >= rhs - 1e-2 * (1.0 + rhs.abs()),
    })
}

/// Discount level below which node positions are numerically undetermined:
/// the objective weighs a node by e^{-delta t}, so once that factor is this
/// far below one, the optimizer cannot distinguish positions to tolerance
/// and pointwise residuals there measure noise, not optimality.
pub const DETERMINED_WINDOW: f64 = 1e-6;

/// Max over atoms and sampled interior nodes of
/// | |v|^{p-2} v + grad u(gamma_i(t_k)) |, restricted to the numerically
/// determined window e^{-delta t_k} >= [`DETERMINED_WINDOW`].
pub fn gradient_condition_check(
    path: &MeasurePath,
    grad_u: GradHandle<'_>,
    spec: &ProblemSpec,
    node_stride: usize,
) -> Result<ResidualSeries> {
    let stride = node_stride.max(1);
    let mut nodes = Vec::new();
    let mut per_node = Vec::new();
    let m = path.grid().intervals();
    let t_cut = -(DETERMINED_WINDOW.ln()) / spec.delta;
    for k in (1..m).step_by(stride) {
        if path.grid().node(k) > t_cut {
            break;
        }
        let mut worst = 0.0f64;
        for i in 0..path.atoms() {
            let v = path.node_velocity(i, k);
            let mut r = vec_ops::momentum(&v, spec.p, MOMENTUM_EPS);
            let g = grad_u(path.position(i, k))?;
            vec_ops::axpy(&mut r, 1.0, &g);
            worst = worst.max(vec_ops::norm(&r));
        }
        nodes.push(k);
        per_node.push(worst);
    }
    let max = per_node.iter().cloned().fold(0.0f64, f64::max);
    Ok(ResidualSeries {
        nodes,
        per_node,
        max,
    })
}

/// Stationarity defect of the measure-level Hamilton-Jacobi equation:
/// delta U + (1/q) sum_i w_i |grad u(x_i)|^q + V(mu).
pub fn hje_residual_measure(
    mu: &ParticleMeasure,
    u_val: f64,
    grad_at_atoms: &[Vec<f64>],
    pot: &dyn MeasurePotential,
    spec: &ProblemSpec,
) -> f64 {
    let q = spec.q();
    let grad_term: f64 = mu
        .weights()
        .iter()
        .zip(grad_at_atoms)
        .map(|(w, g)| w * vec_ops::norm(g).powf(q))
        .sum();
    spec.delta * u_val + grad_term / q + pot.value(mu)
}

/// Discounted value bounds from a growth certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsCheck {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub gate: DeltaValidity,
    pub pass: bool,
}

/// -(beta + 2^p alpha W_p(mu, ref)^p)/delta <= U(mu) <= -V(mu)/delta.
/// The certificate comes from the problem spec when declared, otherwise from
/// the potential itself.
pub fn bounds_check(
    u_val: f64,
    mu: &ParticleMeasure,
    pot: &dyn MeasurePotential,
    spec: &ProblemSpec,
) -> Result<BoundsCheck> {
    let cert = spec
        .certificate
        .clone()
        .or_else(|| pot.growth(spec.p, spec.delta, mu.dimension()))
        .ok_or(Error::MissingCertificate)?;
    let wp = transport::wasserstein_p(mu, &cert.reference, spec.p)?;
    let lower = -(cert.beta + 2.0f64.powf(spec.p) * cert.alpha * wp.powf(spec.p)) / spec.delta;
    let upper = -pot.value(mu) / spec.delta;
    let gate = delta_validity(spec.p, cert.alpha, spec.delta);
    Ok(BoundsCheck {
        lower,
        value: u_val,
        upper,
        gate,
        pass: lower - 1e-9 <= u_val && u_val <= upper + 1e-9,
    })
}

/// Uniform-continuity transfer: |U(mu1) - U(mu2)| <= Lip(V) W_p(mu1,mu2)/delta.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusCheck {
    pub difference: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn modulus_check(
    mu1: &ParticleMeasure,
    mu2: &ParticleMeasure,
    resolve: ValueHandle<'_>,
    lip_v: f64,
    spec: &ProblemSpec,
) -> Result<ModulusCheck> {
    let u1 = resolve(mu1)?;
    let u2 = resolve(mu2)?;
    let wp = transport::wasserstein_p(mu1, mu2, spec.p)?;
    let bound = lip_v * wp / spec.delta;
    let difference = (u1 - u2).abs();
    Ok(ModulusCheck {
        difference,
        bound,
        pass: difference <= bound + 1e-3 * (1.0 + bound),
    })
}
