//! Time grids with exact exponentially weighted quadrature.
//!
//! Integrals of the form int e^{-delta t} f(t) dt are evaluated per interval
//! with f either constant (piecewise-constant speeds) or linearly
//! interpolated between node values. Both use the closed-form moments of
//! e^{-delta t} on the interval, so the only discretization error is the
//! interpolation of f itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTimeGrid", into = "RawTimeGrid")]
pub struct TimeGrid {
    nodes: Vec<f64>,
    discount: f64,
    /// int_{t_k}^{t_{k+1}} e^{-delta t} dt
    weight_const: Vec<f64>,
    /// int_{t_k}^{t_{k+1}} e^{-delta t} (t - t_k)/dt_k dt
    weight_ramp: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawTimeGrid {
    nodes: Vec<f64>,
    discount: f64,
}

impl TryFrom<RawTimeGrid> for TimeGrid {
    type Error = Error;
    fn try_from(raw: RawTimeGrid) -> Result<Self> {
        TimeGrid::from_nodes(raw.nodes, raw.discount)
    }
}

impl From<TimeGrid> for RawTimeGrid {
    fn from(g: TimeGrid) -> Self {
        RawTimeGrid {
            nodes: g.nodes,
            discount: g.discount,
        }
    }
}

/// (1 - e^{-x}(1+x)), stable for small x.
fn ramp_moment(x: f64) -> f64 {
    if x < 1e-3 {
        // x^2/2 - x^3/3 + x^4/8 - x^5/30 + x^6/144
        let x2 = x * x;
        x2 * (0.5 - x / 3.0 + x2 / 8.0 - x2 * x / 30.0 + x2 * x2 / 144.0)
    } else {
        1.0 - (-x).exp() * (1.0 + x)
    }
}

impl TimeGrid {
    /// Uniform grid over [0, horizon] with `steps` intervals.
    pub fn uniform(horizon: f64, steps: usize, discount: f64) -> Result<Self> {
        if horizon <= 0.0 || !horizon.is_finite() {
            return Err(Error::InvalidTimeNodes);
        }
        if steps == 0 {
            return Err(Error::TooFewNodes(2, 1));
        }
        let nodes = (0..=steps)
            .map(|k| horizon * k as f64 / steps as f64)
            .collect();
        Self::from_nodes(nodes, discount)
    }

    /// Arbitrary strictly increasing nodes starting at 0.
    pub fn from_nodes(nodes: Vec<f64>, discount: f64) -> Result<Self> {
        if discount <= 0.0 || !discount.is_finite() {
            return Err(Error::InvalidDiscount(discount));
        }
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes(2, nodes.len()));
        }
        if nodes[0] != 0.0 || nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTimeNodes);
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTimeNodes);
        }
        let mut weight_const = Vec::with_capacity(nodes.len() - 1);
        let mut weight_ramp = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let dt = t1 - t0;
            let x = discount * dt;
            let head = (-discount * t0).exp();
            weight_const.push(head * (-(-x).exp_m1()) / discount);
            weight_ramp.push(head * ramp_moment(x) / (discount * discount * dt));
        }
        Ok(TimeGrid {
            nodes,
            discount,
            weight_const,
            weight_ramp,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// e^{-delta T}
    pub fn tail_factor(&self) -> f64 {
        (-self.discount * self.horizon()).exp()
    }

    /// int e^{-dt} over interval k.
    pub fn interval_weight(&self, k: usize) -> f64 {
        self.weight_const[k]
    }

    /// Quadrature weight multiplying the left node value of interval k when
    /// the integrand is interpolated linearly.
    pub fn left_weight(&self, k: usize) -> f64 {
        self.weight_const[k] - self.weight_ramp[k]
    }

    /// Quadrature weight multiplying the right node value of interval k.
    pub fn right_weight(&self, k: usize) -> f64 {
        self.weight_ramp[k]
    }

    /// int_0^T e^{-delta t} g(t) dt for g constant on each interval.
    pub fn integrate_piecewise_const(&self, per_interval: &[f64]) -> f64 {
        debug_assert_eq!(per_interval.len(), self.intervals());
        per_interval
            .iter()
            .zip(&self.weight_const)
            .map(|(g, w)| g * w)
            .sum()
    }

    /// int_0^T e^{-delta t} f(t) dt for f given at nodes, linear in between.
    pub fn integrate_nodal(&self, at_nodes: &[f64]) -> f64 {
        debug_assert_eq!(at_nodes.len(), self.nodes.len());
        let mut total = 0.0;
        for k in 0..self.intervals() {
            total += self.left_weight(k) * at_nodes[k] + self.right_weight(k) * at_nodes[k + 1];
        }
        total
    }

    /// Combined weight of node k in `integrate_nodal`.
    pub fn node_weight(&self, k: usize) -> f64 {
        let mut w = 0.0;
        if k > 0 {
            w += self.right_weight(k - 1);
        }
        if k < self.intervals() {
            w += self.left_weight(k);
        }
        w
    }

    /// Index of the node equal to `t`, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + self.horizon());
        self.nodes.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// Same nodes, different discount rate (weights recomputed).
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        if (discount - self.discount).abs() <= f64::EPSILON * discount.abs() {
            return Ok(self.clone());
        }
        Self::from_nodes(self.nodes.clone(), discount)
    }

    /// Grid for the remainder [t_s, T] shifted to start at 0; `s` is a node
    /// index. Used by the splitting identity.
    pub fn shifted_tail(&self, s: usize) -> Result<Self> {
        let t_s = self.nodes[s];
        let nodes: Vec<f64> = self.nodes[s..].iter().map(|t| t - t_s).collect();
        Self::from_nodes(nodes, self.discount)
    }
}
