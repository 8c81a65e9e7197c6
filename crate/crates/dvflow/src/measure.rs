//! Finitely supported probability measures and transport plans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec_ops;

/// A finitely supported probability measure on R^d: atoms with strictly
/// positive weights summing to one. Duplicate atoms are allowed; their mass
/// simply adds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParticleMeasure", into = "RawParticleMeasure")]
pub struct ParticleMeasure {
    dimension: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Wire format: `{dimension, points, weights}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawParticleMeasure {
    dimension: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawParticleMeasure> for ParticleMeasure {
    type Error = Error;

    fn try_from(raw: RawParticleMeasure) -> Result<Self> {
        let m = ParticleMeasure::new(raw.points, raw.weights)?;
        if m.dimension != raw.dimension {
            return Err(Error::DimensionMismatch(raw.dimension, m.dimension));
        }
        Ok(m)
    }
}

impl From<ParticleMeasure> for RawParticleMeasure {
    fn from(m: ParticleMeasure) -> Self {
        RawParticleMeasure {
            dimension: m.dimension,
            points: m.points,
            weights: m.weights,
        }
    }
}

impl ParticleMeasure {
    /// Builds a measure from atoms and (not necessarily normalized) masses.
    /// Weights are renormalized to sum to one.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("points"));
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch(
                "points",
                points.len(),
                "weights",
                weights.len(),
            ));
        }
        let dimension = points[0].len();
        if dimension == 0 {
            return Err(Error::EmptyInput("point coordinates"));
        }
        for pt in &points {
            if pt.len() != dimension {
                return Err(Error::DimensionMismatch(dimension, pt.len()));
            }
            if pt.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("particle coordinates"));
            }
        }
        for &w in &weights {
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::NonpositiveWeight(w));
            }
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(ParticleMeasure {
            dimension,
            points,
            weights,
        })
    }

    /// Unit mass at a single point.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        Self::new(vec![point], vec![1.0])
    }

    /// Uniform weights over the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of atoms (duplicates counted separately).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty supports
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Total mass sitting exactly on `point`.
    pub fn mass_at(&self, point: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| p.as_slice() == point)
            .map(|(_, w)| w)
            .sum()
    }

    /// The p-th moment of the norm, sum_i w_i |x_i|^p.
    pub fn pth_moment(&self, p: f64) -> Result<f64> {
        if p < 1.0 {
            return Err(Error::InvalidExponent(p, 1.0));
        }
        Ok(self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * vec_ops::norm(x).powf(p))
            .sum())
    }

    /// Weighted mean of the atoms.
    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for (x, w) in self.points.iter().zip(&self.weights) {
            vec_ops::axpy(&mut out, *w, x);
        }
        out
    }

    /// Same weights, atoms moved by `map`.
    pub fn map_points(&self, map: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let points = self.points.iter().map(|x| map(x)).collect();
        Self::new(points, self.weights.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One arc of a transport plan: `mass` moved from source atom `source` to
/// target atom `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// A coupling of two particle measures together with its raw transport cost
/// sum_{ij} mass_ij |x_i - y_j|^p (not the p-th root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
}

impl TransportPlan {
    /// Largest violation of the marginal constraints against (mu, nu).
    pub fn marginal_residual(&self, mu: &ParticleMeasure, nu: &ParticleMeasure) -> f64 {
        let mut row = vec![0.0; mu.len()];
        let mut col = vec![0.0; nu.len()];
        for e in &self.entries {
            row[e.source] += e.mass;
            col[e.target] += e.mass;
        }
        let r = row
            .iter()
            .zip(mu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let c = col
            .iter()
            .zip(nu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        r.max(c)
    }

    /// CSV rows `i,j,mass` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,mass\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{:.16e}\n", e.source, e.target, e.mass));
        }
        out
    }
}
