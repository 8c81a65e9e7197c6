//! Brute-force Levy-Prokhorov distance between small particle measures.
//!
//! Lambda(mu, nu) is the smallest eps such that for every Borel set A,
//! mu(A) <= nu(A^eps) + eps and nu(A) <= mu(A^eps) + eps, where A^eps is the
//! closed eps-fattening {y : dist(y, A) <= eps}. For finitely supported
//! measures it is enough to test A inside the support of the measure on the
//! left-hand side: intersecting A with that support keeps the left side and
//! only shrinks the fattening. The minimizing eps is either a cross-support
//! distance (where a fattening jumps) or a probability gap mu(A) - nu(A^r)
//! on a piece where the fattening is constant, so scanning that finite
//! candidate set is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::ParticleMeasure;
use crate::transport;
use crate::vec_ops;

/// Largest per-measure support the subset enumeration accepts.
pub const MAX_ENUMERATION_SUPPORT: usize = 12;

const FEAS_TOL: f64 = 1e-12;

/// Exact Lambda(mu, nu) by subset enumeration.
pub fn levy_prokhorov(mu: &ParticleMeasure, nu: &ParticleMeasure) -> Result<f64> {
    if mu.dimension() != nu.dimension() {
        return Err(Error::DimensionMismatch(mu.dimension(), nu.dimension()));
    }
    let n = mu.len();
    let m = nu.len();
    if n > MAX_ENUMERATION_SUPPORT || m > MAX_ENUMERATION_SUPPORT {
        return Err(Error::SupportTooLarge(n.max(m), MAX_ENUMERATION_SUPPORT));
    }

    let side_mu = Side::build(mu, nu);
    let side_nu = Side::build(nu, mu);

    // Candidate eps values: 0 and 1 (always feasible), every cross distance,
    // and every probability gap over a constant piece of the fattening.
    let mut candidates = vec![0.0, 1.0];
    candidates.extend_from_slice(&side_mu.cross_distances);
    side_mu.push_gap_candidates(&mut candidates);
    side_nu.push_gap_candidates(&mut candidates);
    candidates.retain(|&e| (0.0..=1.0 + FEAS_TOL).contains(&e));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    // Feasibility is monotone in eps, so binary-search the candidate list.
    let feasible = |eps: f64| side_mu.feasible(eps) && side_nu.feasible(eps);
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1;
    debug_assert!(feasible(candidates[hi]), "eps = 1 is always feasible");
    if feasible(candidates[0]) {
        return Ok(candidates[0]);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(candidates[hi])
}

/// One direction of the Levy-Prokhorov conditions: subsets of `left`'s
/// support, fattened and measured under `right`.
struct Side {
    left_weights: Vec<f64>,
    right_weights: Vec<f64>,
    /// dist[i * m + j]: distance from left atom i to right atom j.
    cross: Vec<f64>,
    cross_distances: Vec<f64>,
    n: usize,
    m: usize,
}

impl Side {
    fn build(left: &ParticleMeasure, right: &ParticleMeasure) -> Self {
        let n = left.len();
        let m = right.len();
        let mut cross = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                cross[i * m + j] = vec_ops::dist(left.point(i), right.point(j));
            }
        }
        Side {
            left_weights: left.weights().to_vec(),
            right_weights: right.weights().to_vec(),
            cross_distances: cross.clone(),
            cross,
            n,
            m,
        }
    }

    /// dist(y_j, A) for every right atom j, A given as a bitmask of left atoms.
    fn dist_to_subset(&self, mask: usize, out: &mut [f64]) {
        for (j, slot) in out.iter_mut().enumerate().take(self.m) {
            let mut d = f64::INFINITY;
            let mut bits = mask;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                d = d.min(self.cross[i * self.m + j]);
                bits &= bits - 1;
            }
            *slot = d;
        }
    }

    fn left_mass(&self, mask: usize) -> f64 {
        let mut s = 0.0;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            s += self.left_weights[i];
            bits &= bits - 1;
        }
        s
    }

    /// Gap candidates mu(A) - nu(A^r) for each subset A and each breakpoint r.
    fn push_gap_candidates(&self, out: &mut Vec<f64>) {
        let mut dists = vec![0.0; self.m];
        for mask in 1..(1usize << self.n) {
            self.dist_to_subset(mask, &mut dists);
            let left = self.left_mass(mask);
            let mut radii: Vec<f64> = dists.clone();
            radii.push(0.0);
            radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
            radii.dedup();
            for &r in &radii {
                let fattened: f64 = (0..self.m)
                    .filter(|&j| dists[j] <= r + FEAS_TOL)
                    .map(|j| self.right_weights[j])
                    .sum();
                let gap = left - fattened;
                if gap > 0.0 {
                    out.push(gap);
                }
            }
        }
    }

    /// Do all subsets satisfy left(A) <= right(A^eps) + eps?
    fn feasible(&self, eps: f64) -> bool {
        let mut dists = vec![0.0; self.m];
        for mask in 1..(1usize << self.n) {
            self.dist_to_subset(mask, &mut dists);
            let left = self.left_mass(mask);
            let fattened: f64 = (0..self.m)
                .filter(|&j| dists[j] <= eps + FEAS_TOL)
                .map(|j| self.right_weights[j])
                .sum();
            if left > fattened + eps + FEAS_TOL {
                return false;
            }
        }
        true
    }
}

/// Report for the Lambda^2 <= W_1 comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpW1Report {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks Lambda(mu, nu)^2 <= W_1(mu, nu).
pub fn check_lp_w1_inequality(mu: &ParticleMeasure, nu: &ParticleMeasure) -> Result<LpW1Report> {
    let lambda = levy_prokhorov(mu, nu)?;
    let lhs = lambda * lambda;
    let rhs = transport::wasserstein_p(mu, nu, 1.0)?;
    Ok(LpW1Report {
        lhs,
        rhs,
        slack: rhs - lhs,
        pass: lhs <= rhs + 1e-10,
    })
}
