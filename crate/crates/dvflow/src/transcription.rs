//! Direct transcription of the discounted action onto node positions.
//!
//! The decision vector holds every node position except the fixed starting
//! ones, node-major: z[((k-1) N + i) d + a] is coordinate a of atom i at node
//! k >= 1. The objective is the discretized action
//!
//!   sum_k w_k^const (1/p) sum_i w_i |v_{ik}|^p
//!     - sum_k omega_k V(sigma(t_k))
//!
//! with omega the nodal quadrature weights plus the stay-put tail
//! e^{-delta T}/delta folded into the terminal node, so a constant path with
//! constant potential evaluates to -V/delta exactly. The analytic gradient
//! couples neighbouring nodes through interval momenta and each node through
//! the potential's particle gradient.

use crate::grid::TimeGrid;
use crate::measure::ParticleMeasure;
use crate::path::{MeasurePath, MOMENTUM_EPS};
use crate::potential::MeasurePotential;
use crate::vec_ops;

pub(crate) struct Transcription<'a> {
    grid: TimeGrid,
    p: f64,
    weights: Vec<f64>,
    starts: Vec<Vec<f64>>,
    dim: usize,
    pot: &'a dyn MeasurePotential,
    /// Potential quadrature weight per node, tail included at the last node.
    node_weight: Vec<f64>,
}

impl<'a> Transcription<'a> {
    pub fn new(
        grid: TimeGrid,
        p: f64,
        delta: f64,
        base: &ParticleMeasure,
        pot: &'a dyn MeasurePotential,
    ) -> Self {
        let nodes = grid.nodes().len();
        let mut node_weight: Vec<f64> = (0..nodes).map(|k| grid.node_weight(k)).collect();
        node_weight[nodes - 1] += grid.tail_factor() / delta;
        Transcription {
            grid,
            p,
            weights: base.weights().to_vec(),
            starts: base.points().to_vec(),
            dim: base.dimension(),
            pot,
            node_weight,
        }
    }

    pub fn atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn vars(&self) -> usize {
        self.grid.intervals() * self.atoms() * self.dim
    }

    fn index(&self, node: usize, atom: usize, coord: usize) -> usize {
        debug_assert!(node >= 1);
        ((node - 1) * self.atoms() + atom) * self.dim + coord
    }

    fn position<'z>(&'a self, z: &'z [f64], node: usize, atom: usize) -> &'z [f64]
    where
        'a: 'z,
    {
        if node == 0 {
            &self.starts[atom]
        } else {
            let at = self.index(node, atom, 0);
            &z[at..at + self.dim]
        }
    }

    /// Every atom frozen at its start.
    pub fn constant_start(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.vars()];
        for k in 1..=self.grid.intervals() {
            for i in 0..self.atoms() {
                let at = self.index(k, i, 0);
                z[at..at + self.dim].copy_from_slice(&self.starts[i]);
            }
        }
        z
    }

    pub fn start_from_path(&self, path: &MeasurePath) -> Option<Vec<f64>> {
        if path.grid().nodes() != self.grid.nodes() || path.atoms() != self.atoms() {
            return None;
        }
        let mut z = vec![0.0; self.vars()];
        for k in 1..=self.grid.intervals() {
            for i in 0..self.atoms() {
                let at = self.index(k, i, 0);
                z[at..at + self.dim].copy_from_slice(path.position(i, k));
            }
        }
        Some(z)
    }

    pub fn to_path(&self, z: &[f64], base: &ParticleMeasure) -> MeasurePath {
        let positions = (0..self.atoms())
            .map(|i| {
                (0..=self.grid.intervals())
                    .map(|k| self.position(z, k, i).to_vec())
                    .collect()
            })
            .collect();
        MeasurePath::new(base.clone(), self.grid.clone(), positions)
            .expect("transcription produces consistent shapes")
    }

    /// Objective value and gradient. Non-finite potential values propagate as
    /// NaN so the line search rejects the step.
    pub fn objective(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let n = self.atoms();
        let m = self.grid.intervals();
        let mut value = 0.0;

        // Kinetic part.
        let mut v = vec![0.0; self.dim];
        for k in 0..m {
            let wk = self.grid.interval_weight(k);
            let dt = self.grid.dt(k);
            for i in 0..n {
                let left = self.position(z, k, i);
                let right = self.position(z, k + 1, i);
                for a in 0..self.dim {
                    v[a] = (right[a] - left[a]) / dt;
                }
                value +=
                    wk * self.weights[i] * vec_ops::speed_power(&v, self.p, MOMENTUM_EPS) / self.p;
                let mom = vec_ops::momentum(&v, self.p, MOMENTUM_EPS);
                let pull = wk * self.weights[i] / dt;
                if k >= 1 {
                    let at = self.index(k, i, 0);
                    for a in 0..self.dim {
                        grad[at + a] -= pull * mom[a];
                    }
                }
                let at = self.index(k + 1, i, 0);
                for a in 0..self.dim {
                    grad[at + a] += pull * mom[a];
                }
            }
        }

        // Potential part; plain averages of a pointwise potential get the
        // allocation-free path, general functionals go through sigma(t_k).
        if let Some(v_point) = self.pot.as_simple() {
            for k in 0..=m {
                let omega = self.node_weight[k];
                for i in 0..n {
                    let x = self.position(z, k, i);
                    value -= omega * self.weights[i] * v_point.value(x);
                    if k >= 1 {
                        let g = v_point.gradient(x);
                        let at = self.index(k, i, 0);
                        for a in 0..self.dim {
                            grad[at + a] -= omega * self.weights[i] * g[a];
                        }
                    }
                }
            }
        } else {
            for k in 0..=m {
                let omega = self.node_weight[k];
                let sigma = self.measure_at(z, k);
                value -= omega * self.pot.value(&sigma);
                if k >= 1 {
                    for i in 0..n {
                        let g = self.pot.particle_gradient(&sigma, i);
                        let at = self.index(k, i, 0);
                        for a in 0..self.dim {
                            grad[at + a] -= omega * self.weights[i] * g[a];
                        }
                    }
                }
            }
        }

        if !value.is_finite() {
            return f64::NAN;
        }
        value
    }

    fn measure_at(&self, z: &[f64], node: usize) -> ParticleMeasure {
        let points = (0..self.atoms())
            .map(|i| self.position(z, node, i).to_vec())
            .collect();
        ParticleMeasure::new(points, self.weights.clone())
            .expect("weights stay valid under transport")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{simple_potential_lift, AnalyticPotential};
    use crate::problem::ProblemSpec;

    fn finite_difference_gradient(tr: &Transcription<'_>, z: &[f64], h: f64) -> Vec<f64> {
        let mut fd = vec![0.0; z.len()];
        let mut scratch = vec![0.0; z.len()];
        let mut zp = z.to_vec();
        for i in 0..z.len() {
            let orig = zp[i];
            zp[i] = orig + h;
            let up = tr.objective(&zp, &mut scratch);
            zp[i] = orig - h;
            let dn = tr.objective(&zp, &mut scratch);
            zp[i] = orig;
            fd[i] = (up - dn) / (2.0 * h);
        }
        fd
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let spec = ProblemSpec::new(2.0, 1.0).unwrap().with_horizon(2.0, 5);
        let mu =
            ParticleMeasure::new(vec![vec![0.2, -0.4], vec![1.0, 0.3]], vec![0.3, 0.7]).unwrap();
        let pot = simple_potential_lift(AnalyticPotential::linear(vec![0.5, -1.0], 0.2));
        let tr = Transcription::new(spec.grid().unwrap(), spec.p, spec.delta, &mu, &pot);

        // A wiggly but finite candidate point.
        let mut z = tr.constant_start();
        for (idx, zi) in z.iter_mut().enumerate() {
            *zi += 0.05 * ((idx as f64) * 0.7).sin();
        }
        let mut grad = vec![0.0; z.len()];
        tr.objective(&z, &mut grad);
        let fd = finite_difference_gradient(&tr, &z, 1e-6);
        for i in 0..z.len() {
            assert!(
                (grad[i] - fd[i]).abs() < 1e-6 * (1.0 + fd[i].abs()),
                "component {i}: {} vs {}",
                grad[i],
                fd[i]
            );
        }
    }

    #[test]
    fn gradient_matches_for_general_functionals_and_fractional_p() {
        struct Squared(crate::potential::SimpleLift<AnalyticPotential>);
        impl MeasurePotential for Squared {
            fn value(&self, mu: &ParticleMeasure) -> f64 {
                let s = self.0.value(mu);
                0.5 * s * s
            }
            fn particle_gradient(&self, mu: &ParticleMeasure, i: usize) -> Vec<f64> {
                let s = self.0.value(mu);
                vec_ops::scale(&self.0.particle_gradient(mu, i), s)
            }
        }
        let spec = ProblemSpec::new(1.6, 0.8).unwrap().with_horizon(1.5, 4);
        let mu = ParticleMeasure::new(vec![vec![0.5], vec![-0.25]], vec![0.5, 0.5]).unwrap();
        let pot = Squared(simple_potential_lift(AnalyticPotential::linear(
            vec![0.8],
            0.1,
        )));
        let tr = Transcription::new(spec.grid().unwrap(), spec.p, spec.delta, &mu, &pot);

        let mut z = tr.constant_start();
        for (idx, zi) in z.iter_mut().enumerate() {
            *zi += 0.1 * ((idx as f64) + 0.3).cos();
        }
        let mut grad = vec![0.0; z.len()];
        tr.objective(&z, &mut grad);
        let fd = finite_difference_gradient(&tr, &z, 1e-6);
        for i in 0..z.len() {
            assert!(
                (grad[i] - fd[i]).abs() < 1e-5 * (1.0 + fd[i].abs()),
                "component {i}: {} vs {}",
                grad[i],
                fd[i]
            );
        }
    }

    #[test]
    fn constant_path_objective_equals_stay_put_value() {
        let spec = ProblemSpec::new(2.0, 1.0).unwrap().with_horizon(10.0, 40);
        let mu = ParticleMeasure::dirac(vec![2.0]).unwrap();
        let pot = simple_potential_lift(AnalyticPotential::linear(vec![1.0], 0.0));
        let tr = Transcription::new(spec.grid().unwrap(), spec.p, spec.delta, &mu, &pot);
        let z = tr.constant_start();
        let mut grad = vec![0.0; z.len()];
        let v = tr.objective(&z, &mut grad);
        assert!((v - (-2.0)).abs() < 1e-12);
    }

    #[test]
    fn path_round_trip_preserves_positions() {
        let spec = ProblemSpec::new(2.0, 1.0).unwrap().with_horizon(1.0, 3);
        let mu = ParticleMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let pot = simple_potential_lift(AnalyticPotential::Zero);
        let tr = Transcription::new(spec.grid().unwrap(), spec.p, spec.delta, &mu, &pot);
        let mut z = tr.constant_start();
        z[0] = 7.0;
        let path = tr.to_path(&z, &mu);
        let back = tr.start_from_path(&path).unwrap();
        assert_eq!(z, back);
    }
}
