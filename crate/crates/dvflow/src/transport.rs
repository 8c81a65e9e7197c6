//! Exact p-Wasserstein distances between particle measures.
//!
//! The minimum-cost coupling is found with a transportation simplex on the
//! bipartite polytope: a spanning-tree basis, dual potentials recomputed from
//! the tree each pivot, Bland's smallest-index rule for the entering arc and
//! for ties in the leaving arc. The pivot rule makes the returned vertex
//! deterministic, including among degenerate optima.

use crate::error::{Error, Result};
use crate::measure::{ParticleMeasure, PlanEntry, TransportPlan};
use crate::vec_ops;

/// W_p(mu, nu) = (min coupling cost with ground cost |x-y|^p)^{1/p}.
pub fn wasserstein_p(mu: &ParticleMeasure, nu: &ParticleMeasure, p: f64) -> Result<f64> {
    let plan = optimal_plan(mu, nu, p)?;
    Ok(plan.cost.max(0.0).powf(1.0 / p))
}

/// A minimum-cost coupling of mu and nu for the ground cost |x-y|^p.
pub fn optimal_plan(mu: &ParticleMeasure, nu: &ParticleMeasure, p: f64) -> Result<TransportPlan> {
    if p < 1.0 {
        return Err(Error::InvalidExponent(p, 1.0));
    }
    if mu.dimension() != nu.dimension() {
        return Err(Error::DimensionMismatch(mu.dimension(), nu.dimension()));
    }
    let n = mu.len();
    let m = nu.len();
    let mut cost = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            cost[i * m + j] = vec_ops::dist(mu.point(i), nu.point(j)).powf(p);
        }
    }
    let basis = simplex(mu.weights(), nu.weights(), &cost, m)?;
    let mut entries = Vec::new();
    let mut total = 0.0;
    for arc in &basis {
        if arc.flow > 0.0 {
            entries.push(PlanEntry {
                source: arc.i,
                target: arc.j,
                mass: arc.flow,
            });
            total += arc.flow * cost[arc.i * m + arc.j];
        }
    }
    // Degenerate corner case: all basic flows rounded to zero cannot happen
    // for probability measures, but keep the plan well formed regardless.
    if entries.is_empty() {
        entries.push(PlanEntry {
            source: 0,
            target: 0,
            mass: mu.weight(0).min(nu.weight(0)),
        });
        total = entries[0].mass * cost[0];
    }
    Ok(TransportPlan {
        entries,
        cost: total,
    })
}

#[derive(Debug, Clone, Copy)]
struct BasicArc {
    i: usize,
    j: usize,
    flow: f64,
}

/// Transportation simplex. `supply` and `demand` must each sum to one;
/// `cost` is row-major n x m.
fn simplex(supply: &[f64], demand: &[f64], cost: &[f64], m: usize) -> Result<Vec<BasicArc>> {
    let n = supply.len();
    let mut basis = northwest_corner(supply, demand);
    debug_assert_eq!(basis.len(), n + m - 1);

    let max_cost = cost.iter().cloned().fold(0.0f64, f64::max);
    let tol = 1e-12 * (1.0 + max_cost);
    // Generous budget; Bland's rule terminates long before this at our scales.
    let budget = 1000 + 20 * n * m * (n + m);

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    for _pivot in 0..budget {
        compute_duals(&basis, cost, n, m, &mut u, &mut v);

        // Entering arc: first in row-major order with negative reduced cost.
        let mut entering = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if cost[i * m + j] - u[i] - v[j] < -tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(basis);
        };

        // Unique tree path from source ei to sink ej. Adding theta on the
        // entering arc forces alternating -theta/+theta along the path,
        // starting with -theta on the arc incident to ei.
        let path = tree_path(&basis, n, m, ei, n + ej);
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        let mut leaving_key = usize::MAX;
        for (step, &arc_idx) in path.iter().enumerate() {
            if step % 2 == 0 {
                let arc = basis[arc_idx];
                let key = arc.i * m + arc.j;
                if arc.flow < theta - tol {
                    theta = arc.flow;
                    leaving = arc_idx;
                    leaving_key = key;
                } else if arc.flow < theta + tol && key < leaving_key {
                    theta = theta.min(arc.flow);
                    leaving = arc_idx;
                    leaving_key = key;
                }
            }
        }
        debug_assert!(leaving != usize::MAX);
        let theta = theta.max(0.0);

        for (step, &arc_idx) in path.iter().enumerate() {
            if step % 2 == 0 {
                basis[arc_idx].flow = (basis[arc_idx].flow - theta).max(0.0);
            } else {
                basis[arc_idx].flow += theta;
            }
        }
        basis[leaving] = BasicArc {
            i: ei,
            j: ej,
            flow: theta,
        };
    }
    Err(Error::TransportStalled)
}

/// Deterministic initial basis with exactly n + m - 1 arcs.
fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<BasicArc> {
    let n = supply.len();
    let m = demand.len();
    let mut a = supply.to_vec();
    let mut b = demand.to_vec();
    let mut basis = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let f = a[i].min(b[j]).max(0.0);
        basis.push(BasicArc { i, j, flow: f });
        a[i] -= f;
        b[j] -= f;
        if i == n - 1 && j == m - 1 {
            break;
        }
        // Advance exactly one index per step so the arc count is n + m - 1.
        if a[i] <= b[j] && i < n - 1 {
            i += 1;
        } else if j < m - 1 {
            j += 1;
        } else {
            i += 1;
        }
    }
    basis
}

/// Solve u_i + v_j = c_ij over the spanning-tree basis, rooted at u_0 = 0.
fn compute_duals(
    basis: &[BasicArc],
    cost: &[f64],
    n: usize,
    m: usize,
    u: &mut [f64],
    v: &mut [f64],
) {
    let adj = adjacency(basis, n, m);
    let mut seen = vec![false; n + m];
    let mut stack = vec![0usize];
    u[0] = 0.0;
    seen[0] = true;
    while let Some(node) = stack.pop() {
        for &idx in &adj[node] {
            let arc = basis[idx];
            let (src, snk) = (arc.i, n + arc.j);
            let other = if node == src { snk } else { src };
            if seen[other] {
                continue;
            }
            seen[other] = true;
            let c = cost[arc.i * m + arc.j];
            if other == snk {
                v[arc.j] = c - u[arc.i];
            } else {
                u[arc.i] = c - v[arc.j];
            }
            stack.push(other);
        }
    }
}

/// Arc indices along the unique tree path from node `from` to node `to`
/// (nodes 0..n are sources, n..n+m sinks).
fn tree_path(basis: &[BasicArc], n: usize, m: usize, from: usize, to: usize) -> Vec<usize> {
    let adj = adjacency(basis, n, m);
    let mut parent_arc = vec![usize::MAX; n + m];
    let mut parent_node = vec![usize::MAX; n + m];
    let mut seen = vec![false; n + m];
    let mut queue = std::collections::VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &idx in &adj[node] {
            let arc = basis[idx];
            let (src, snk) = (arc.i, n + arc.j);
            let other = if node == src { snk } else { src };
            if !seen[other] {
                seen[other] = true;
                parent_arc[other] = idx;
                parent_node[other] = node;
                queue.push_back(other);
            }
        }
    }
    debug_assert!(seen[to], "basis must be a spanning tree");
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        path.push(parent_arc[node]);
        node = parent_node[node];
    }
    // Order the path starting at `from` so the alternating signs line up.
    path.reverse();
    path
}

fn adjacency(basis: &[BasicArc], n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for (idx, arc) in basis.iter().enumerate() {
        adj[arc.i].push(idx);
        adj[n + arc.j].push(idx);
    }
    adj
}
