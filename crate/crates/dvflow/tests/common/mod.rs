//! Shared generators and independent oracles for the integration suites.
//! The oracles here deliberately avoid the library's solver paths: the
//! permutation matcher enumerates assignments, and the 1-D matcher couples
//! quantiles directly.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dvflow::grid::TimeGrid;
use dvflow::path::{MeasurePath, Trajectory};
use dvflow::potential::AnalyticPotential;
use dvflow::ParticleMeasure;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

pub fn random_measure(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> ParticleMeasure {
    let points = random_points(rng, n, dim, scale);
    let weights = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    ParticleMeasure::new(points, weights).unwrap()
}

pub fn random_uniform_measure(
    rng: &mut ChaCha8Rng,
    n: usize,
    dim: usize,
    scale: f64,
) -> ParticleMeasure {
    ParticleMeasure::uniform(random_points(rng, n, dim, scale)).unwrap()
}

/// Random affine potential with |w| <= scale: Lipschitz, growth exponent 1.
pub fn random_affine_potential(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> AnalyticPotential {
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..scale)).collect();
    let c = rng.random_range(-0.5..0.5);
    AnalyticPotential::linear(w, c)
}

/// Random piecewise-linear trajectory with bounded per-interval velocity.
pub fn random_trajectory(
    rng: &mut ChaCha8Rng,
    grid: &TimeGrid,
    dim: usize,
    speed_scale: f64,
) -> Trajectory {
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut positions = vec![x.clone()];
    for k in 0..grid.intervals() {
        let dt = grid.dt(k);
        for coord in x.iter_mut() {
            *coord += dt * rng.random_range(-speed_scale..speed_scale);
        }
        positions.push(x.clone());
    }
    Trajectory::new(grid.clone(), positions).unwrap()
}

pub fn random_measure_path(
    rng: &mut ChaCha8Rng,
    grid: &TimeGrid,
    atoms: usize,
    dim: usize,
) -> MeasurePath {
    let base = random_measure(rng, atoms, dim, 1.0);
    let trajectories: Vec<Trajectory> = (0..atoms)
        .map(|i| {
            let mut t = random_trajectory(rng, grid, dim, 1.5);
            // Anchor the first node at the atom.
            let mut positions = t.positions().to_vec();
            let shift: Vec<f64> = base
                .point(i)
                .iter()
                .zip(&positions[0])
                .map(|(a, b)| a - b)
                .collect();
            for node in positions.iter_mut() {
                for (c, s) in node.iter_mut().zip(&shift) {
                    *c += s;
                }
            }
            t = Trajectory::new(grid.clone(), positions).unwrap();
            t
        })
        .collect();
    MeasurePath::from_trajectories(base, trajectories).unwrap()
}

/// Exact minimum assignment cost over all n! matchings of two uniform
/// measures with the same atom count (ground cost |x-y|^p).
pub fn permutation_min_cost(a: &ParticleMeasure, b: &ParticleMeasure, p: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |perm| {
        let cost: f64 = (0..n)
            .map(|i| {
                let d: f64 = a
                    .point(i)
                    .iter()
                    .zip(b.point(perm[i]))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                d.powf(p) / n as f64
            })
            .sum();
        best = best.min(cost);
    });
    best
}

fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// Exact 1-D W_p by quantile coupling: sort both supports and sweep the two
/// weight profiles. Valid for the convex ground cost |x-y|^p, p >= 1.
pub fn wasserstein_1d_sorted(a: &ParticleMeasure, b: &ParticleMeasure, p: f64) -> f64 {
    assert_eq!(a.dimension(), 1);
    assert_eq!(b.dimension(), 1);
    let mut xs: Vec<(f64, f64)> = a
        .points()
        .iter()
        .zip(a.weights())
        .map(|(x, &w)| (x[0], w))
        .collect();
    let mut ys: Vec<(f64, f64)> = b
        .points()
        .iter()
        .zip(b.weights())
        .map(|(y, &w)| (y[0], w))
        .collect();
    xs.sort_by(|u, v| u.0.partial_cmp(&v.0).unwrap());
    ys.sort_by(|u, v| u.0.partial_cmp(&v.0).unwrap());
    let (mut i, mut j) = (0, 0);
    let (mut wa, mut wb) = (xs[0].1, ys[0].1);
    let mut cost = 0.0;
    loop {
        let m = wa.min(wb);
        cost += m * (xs[i].0 - ys[j].0).abs().powf(p);
        wa -= m;
        wb -= m;
        if wa <= 1e-15 {
            i += 1;
            if i == xs.len() {
                break;
            }
            wa = xs[i].1;
        }
        if wb <= 1e-15 {
            j += 1;
            if j == ys.len() {
                break;
            }
            wb = ys[j].1;
        }
    }
    cost.powf(1.0 / p)
}
