//! Shared driver for the transcription optimizers.
//!
//! Two ingredients keep the quasi-Newton iteration effective on the
//! discounted transcription, whose kinetic curvature per node decays like
//! e^{-delta t}:
//!
//! * Jacobi scaling: decision variables are scaled by the square root of the
//!   per-node kinetic curvature, flattening the e^{-delta t} spread.
//! * A coarse-to-fine cascade: the problem is first solved on a coarsened
//!   grid, whose solution (piecewise-linear in time) warm-starts the next
//!   refinement. Long-wavelength modes converge on the cheap levels.
//!
//! Warm-start paths supplied by callers (closed-form flows, decoupled
//! solutions) are run at the finest level only; the best value wins.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::measure::ParticleMeasure;
use crate::optim::{self, OptimOptions};
use crate::path::MeasurePath;
use crate::potential::MeasurePotential;
use crate::problem::ProblemSpec;
use crate::transcription::Transcription;

pub(crate) struct ActionSolve {
    pub value: f64,
    pub path: MeasurePath,
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub monotone: bool,
    pub starts: usize,
}

/// Grid sizes from coarse to fine; each level is 4x the previous.
fn cascade_levels(steps: usize) -> Vec<usize> {
    let mut levels = vec![steps];
    let mut m = steps;
    while m > 32 {
        m = m.div_ceil(4);
        levels.push(m);
    }
    levels.reverse();
    levels.dedup();
    levels
}

/// Piecewise-linear resampling of a path onto a finer grid.
fn resample_path(path: &MeasurePath, grid: &TimeGrid) -> Result<MeasurePath> {
    let coarse = path.grid();
    let mut positions = Vec::with_capacity(path.atoms());
    for i in 0..path.atoms() {
        let mut traj = Vec::with_capacity(grid.nodes().len());
        for &t in grid.nodes() {
            // Locate the coarse interval containing t.
            let nodes = coarse.nodes();
            let k = match nodes.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
                Ok(k) => k.min(nodes.len() - 1),
                Err(k) => k.saturating_sub(1).min(nodes.len() - 2),
            };
            if k + 1 >= nodes.len() {
                traj.push(path.position(i, nodes.len() - 1).to_vec());
                continue;
            }
            let (t0, t1) = (nodes[k], nodes[k + 1]);
            let lam = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let a = path.position(i, k);
            let b = path.position(i, k + 1);
            traj.push(a.iter().zip(b).map(|(x, y)| x + lam * (y - x)).collect());
        }
        positions.push(traj);
    }
    MeasurePath::new(path.base().clone(), grid.clone(), positions)
}

/// Per-variable Jacobi scale: sqrt of the kinetic curvature each node sees.
fn kinetic_scale(grid: &TimeGrid, base: &ParticleMeasure) -> Vec<f64> {
    let m = grid.intervals();
    let n = base.len();
    let d = base.dimension();
    let mut scale = vec![0.0; m * n * d];
    for k in 1..=m {
        let mut curv = grid.interval_weight(k - 1) / grid.dt(k - 1);
        if k < m {
            curv += grid.interval_weight(k) / grid.dt(k);
        }
        for (i, &w) in base.weights().iter().enumerate() {
            // Snap to a power of two so scaling and unscaling are exact and
            // a constant start stays bit-for-bit constant.
            let s = (w * curv).sqrt().max(1e-150).log2().round().exp2();
            for a in 0..d {
                scale[((k - 1) * n + i) * d + a] = s;
            }
        }
    }
    scale
}

fn minimize_scaled(
    tr: &Transcription<'_>,
    scale: &[f64],
    z0: &[f64],
    opts: &OptimOptions,
) -> optim::OptimOutcome {
    let zeta0: Vec<f64> = z0.iter().zip(scale).map(|(z, s)| z * s).collect();
    let mut z_buf = vec![0.0; z0.len()];
    let out = optim::minimize(
        |zeta, grad| {
            for i in 0..zeta.len() {
                z_buf[i] = zeta[i] / scale[i];
            }
            let v = tr.objective(&z_buf, grad);
            for (g, s) in grad.iter_mut().zip(scale) {
                *g /= *s;
            }
            v
        },
        &zeta0,
        opts,
    );
    let x: Vec<f64> = out.x.iter().zip(scale).map(|(z, s)| z / s).collect();
    optim::OptimOutcome { x, ..out }
}

/// Unscaled gradient norm at a point (the reported convergence measure).
fn raw_grad_norm(tr: &Transcription<'_>, z: &[f64]) -> f64 {
    let mut g = vec![0.0; z.len()];
    tr.objective(z, &mut g);
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes the discretized action for `base` under `pot`, cascading from a
/// coarse grid; `extra_starts` are candidate paths on the final grid.
pub(crate) fn minimize_action(
    base: &ParticleMeasure,
    pot: &dyn MeasurePotential,
    spec: &ProblemSpec,
    extra_starts: &[MeasurePath],
) -> Result<ActionSolve> {
    let levels = cascade_levels(spec.steps);
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut warm: Option<MeasurePath> = None;
    let mut final_best: Option<(optim::OptimOutcome, MeasurePath)> = None;
    let mut starts = 0;

    for (li, &steps) in levels.iter().enumerate() {
        let is_final = li == levels.len() - 1;
        let grid = TimeGrid::uniform(spec.horizon, steps, spec.delta)?;
        let tr = Transcription::new(grid.clone(), spec.p, spec.delta, base, pot);
        let scale = kinetic_scale(&grid, base);
        // The scaled gradient bounds the raw one by the largest scale entry.
        let s_max = scale.iter().cloned().fold(1.0f64, f64::max);
        let opts = OptimOptions {
            grad_tol: spec.grad_tol / s_max,
            max_iters: spec.max_iters,
            ..Default::default()
        };

        let mut level_starts: Vec<Vec<f64>> = Vec::new();
        match &warm {
            Some(path) => {
                let resampled = resample_path(path, &grid)?;
                if let Some(z) = tr.start_from_path(&resampled) {
                    level_starts.push(z);
                }
            }
            None => level_starts.push(tr.constant_start()),
        }
        if is_final {
            for path in extra_starts {
                if let Some(z) = tr.start_from_path(path) {
                    level_starts.push(z);
                }
            }
        }

        let mut best: Option<optim::OptimOutcome> = None;
        for z0 in &level_starts {
            starts += 1;
            let out = minimize_scaled(&tr, &scale, z0, &opts);
            iterations += out.iterations;
            evaluations += out.evaluations;
            if !out.value.is_finite() {
                continue;
            }
            if best.as_ref().is_none_or(|b| out.value < b.value) {
                best = Some(out);
            }
        }
        let best = best.ok_or(Error::NonFinite("discounted action"))?;
        let path = tr.to_path(&best.x, base);
        if is_final {
            final_best = Some((best, path));
        } else {
            warm = Some(path);
        }
    }

    let (out, path) = final_best.expect("cascade always has a final level");
    // Report convergence in the raw (unscaled) gradient.
    let grid = path.grid().clone();
    let tr = Transcription::new(grid, spec.p, spec.delta, base, pot);
    let z = tr
        .start_from_path(&path)
        .expect("path came from this transcription");
    let grad_norm = raw_grad_norm(&tr, &z);
    Ok(ActionSolve {
        value: out.value,
        path,
        iterations,
        evaluations,
        grad_norm,
        converged: grad_norm <= spec.grad_tol && out.value.is_finite(),
        monotone: out.monotone,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cascade_levels_are_increasing_and_end_at_steps() {
        assert_eq!(cascade_levels(400), vec![25, 100, 400]);
        assert_eq!(cascade_levels(32), vec![32]);
        assert_eq!(cascade_levels(1), vec![1]);
        let l = cascade_levels(1000);
        assert_eq!(*l.last().unwrap(), 1000);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn resampling_preserves_piecewise_linear_paths() {
        let coarse = TimeGrid::uniform(4.0, 4, 1.0).unwrap();
        let fine = TimeGrid::uniform(4.0, 16, 1.0).unwrap();
        let mu = ParticleMeasure::dirac(vec![0.0]).unwrap();
        let traj = crate::path::Trajectory::from_flow(coarse, &[0.0], |x, t| vec![x[0] + 2.0 * t])
            .unwrap();
        let path = MeasurePath::from_trajectories(mu, vec![traj]).unwrap();
        let resampled = resample_path(&path, &fine).unwrap();
        for k in 0..=16 {
            let t = fine.node(k);
            assert!((resampled.position(0, k)[0] - 2.0 * t).abs() < 1e-12);
        }
    }
}
