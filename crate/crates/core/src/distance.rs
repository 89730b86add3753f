//! Orbit distance to the pole by fast marching.
//!
//! The eikonal equation `|grad d| = 1` is solved in the orbit-space metric
//! `a deta^2 + q dxi1^2` with second-order upwind differences where two
//! accepted upwind neighbours are available. The `eta = 0` axis is handled by
//! reflection; the collapsed row `eta = pi/2` is a single node adjacent to the
//! whole row below it.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{HopfGrid, ScalarField};
use crate::metric::{MetricField, MetricSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceField {
    pub distance: ScalarField,
    pub d_eta: ScalarField,
    pub d_xi: ScalarField,
    /// Radius (in the local pole metric) inside which nodes were initialised exactly.
    pub init_radius: f64,
}

impl DistanceField {
    /// `|grad d|` at node `(i, j)` from the stored gradients.
    pub fn gradient_norm(&self, metric: &MetricField, i: usize, j: usize) -> f64 {
        let de = self.d_eta.get(i, j);
        let dx = self.d_xi.get(i, j);
        let ie = metric.inv_eta_eta.get(i, j);
        let ix = metric.inv_xi1_xi1.get(i, j);
        let xi_term = if ix.is_finite() { ix * dx * dx } else { 0.0 };
        (ie * de * de + xi_term).sqrt()
    }
}

/// Distance in the tangent metric at the pole, exact to leading order.
pub fn local_pole_distance(spec: &MetricSpec, eta: f64, xi: f64) -> f64 {
    let (a, q) = spec.pole_scales();
    (a * eta * eta + q * xi * xi).sqrt()
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on the tentative value
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Far,
    Trial,
    Accepted,
}

/// Fast-marching distance from the pole `(eta = 0, xi1 = 0)`.
pub fn distance_field(metric: &MetricField) -> Result<DistanceField> {
    let grid = &metric.grid;
    let spec = &metric.spec;
    let n_rows = grid.n_eta - 1; // rows stored node by node
    let top = n_rows * grid.n_xi; // index of the collapsed node
    let len = top + 1;
    let de = grid.d_eta();
    let dx = grid.d_xi();
    let idx = |i: usize, j: usize| if i == n_rows { top } else { i * grid.n_xi + j };

    let mut t = vec![f64::INFINITY; len];
    let mut state = vec![State::Far; len];
    let mut heap = BinaryHeap::new();

    // exact initialisation in a few cells around the pole
    let (a0, q0) = spec.pole_scales();
    let init_radius = 2.5 * (a0.sqrt() * de).max(q0.sqrt() * dx);
    let j0 = grid.pole_column();
    for i in 0..n_rows {
        for j in 0..grid.n_xi {
            let xi = grid.xi(j);
            let d = local_pole_distance(spec, grid.eta(i), xi);
            if d <= init_radius {
                let k = idx(i, j);
                t[k] = d;
                state[k] = State::Accepted;
            }
        }
    }
    if state[idx(0, j0)] != State::Accepted {
        return Err(Error::Numerical("pole node not initialised".into()));
    }
    // seed the narrow band
    let mut seeds = Vec::new();
    for i in 0..n_rows {
        for j in 0..grid.n_xi {
            if state[idx(i, j)] == State::Accepted {
                for (ni, nj) in neighbours(grid, i, j) {
                    if state[idx(ni, nj)] == State::Far {
                        seeds.push((ni, nj));
                    }
                }
            }
        }
    }
    for (i, j) in seeds {
        let k = idx(i, j);
        if state[k] == State::Accepted {
            continue;
        }
        let v = update(metric, &t, &state, i, j, de, dx, n_rows, top);
        if v < t[k] {
            t[k] = v;
            state[k] = State::Trial;
            heap.push(Entry(v, k));
        }
    }

    let mut last = 0.0f64;
    while let Some(Entry(v, k)) = heap.pop() {
        if state[k] == State::Accepted || v > t[k] {
            continue;
        }
        if v + 1e-12 < last {
            return Err(Error::Numerical(format!(
                "non-monotone fast-marching front: accepted {v} after {last}"
            )));
        }
        last = v;
        state[k] = State::Accepted;
        let (i, j) = if k == top { (n_rows, 0) } else { (k / grid.n_xi, k % grid.n_xi) };
        for (ni, nj) in neighbours(grid, i, j) {
            let nk = idx(ni, nj);
            if state[nk] == State::Accepted {
                continue;
            }
            let cand = update(metric, &t, &state, ni, nj, de, dx, n_rows, top);
            if cand < t[nk] {
                t[nk] = cand;
                state[nk] = State::Trial;
                heap.push(Entry(cand, nk));
            }
        }
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("fast marching left unreachable nodes".into()));
    }

    let mut distance = ScalarField::zeros(grid);
    for i in 0..grid.n_eta {
        for j in 0..grid.n_xi {
            distance.set(i, j, t[idx(i.min(n_rows), j)]);
        }
    }
    // central-difference gradients with the axis reflection rules
    let mut d_eta = ScalarField::zeros(grid);
    let mut d_xi = ScalarField::zeros(grid);
    for i in 0..grid.n_eta {
        for j in 0..grid.n_xi {
            let (ii, jj) = (i as isize, j as isize);
            let ge = (distance.ghost(ii + 1, jj) - distance.ghost(ii - 1, jj)) / (2.0 * de);
            let gx = if i == grid.n_eta - 1 {
                0.0
            } else {
                (distance.ghost(ii, jj + 1) - distance.ghost(ii, jj - 1)) / (2.0 * dx)
            };
            d_eta.set(i, j, ge);
            d_xi.set(i, j, gx);
        }
    }
    Ok(DistanceField {
        distance,
        d_eta,
        d_xi,
        init_radius,
    })
}

fn neighbours(grid: &HopfGrid, i: usize, j: usize) -> Vec<(usize, usize)> {
    let n_rows = grid.n_eta - 1;
    if i == n_rows {
        return (0..grid.n_xi).map(|j| (n_rows - 1, j)).collect();
    }
    let mut out = vec![
        (i, (j + 1) % grid.n_xi),
        (i, (j + grid.n_xi - 1) % grid.n_xi),
        (i + 1, if i + 1 == n_rows { 0 } else { j }),
    ];
    if i > 0 {
        out.push((i - 1, j));
    }
    out
}

/// Upwind update of node `(i, j)` from accepted neighbours.
#[allow(clippy::too_many_arguments)]
fn update(
    metric: &MetricField,
    t: &[f64],
    state: &[State],
    i: usize,
    j: usize,
    de: f64,
    dx: f64,
    n_rows: usize,
    top: usize,
) -> f64 {
    let grid = &metric.grid;
    let r = metric.spec.reduced(grid.eta(i), if i == n_rows { 0.0 } else { grid.xi(j) });
    let acc = |k: usize| if state[k] == State::Accepted { t[k] } else { f64::INFINITY };
    let idx = |i: usize, j: usize| if i == n_rows { top } else { i * grid.n_xi + j };

    if i == n_rows {
        // the collapsed node: one step of length sqrt(a) de from the best node below
        let best = (0..grid.n_xi).map(|j| acc(idx(n_rows - 1, j))).fold(f64::INFINITY, f64::min);
        return best + r.a.sqrt() * de;
    }

    // eta direction: (value, second value or INF, spacing)
    let down = if i == 0 { acc(idx(1, j)) } else { acc(idx(i - 1, j)) };
    let down2 = if i >= 2 { acc(idx(i - 2, j)) } else { f64::INFINITY };
    let up = acc(idx(i + 1, j));
    let up2 = if i + 2 < n_rows { acc(idx(i + 2, j)) } else { f64::INFINITY };
    let (te1, te2) = if down <= up { (down, if i >= 2 { down2 } else { f64::INFINITY }) } else { (up, up2) };

    let jp = (j + 1) % grid.n_xi;
    let jm = (j + grid.n_xi - 1) % grid.n_xi;
    let jp2 = (j + 2) % grid.n_xi;
    let jm2 = (j + grid.n_xi - 2) % grid.n_xi;
    let (l1, l2) = (acc(idx(i, jm)), acc(idx(i, jm2)));
    let (r1, r2) = (acc(idx(i, jp)), acc(idx(i, jp2)));
    let (tx1, tx2) = if l1 <= r1 { (l1, l2) } else { (r1, r2) };

    // each direction contributes coeff * (c1 T - c0)^2 with either
    // first order (T - T1) or second order (3T - 4T1 + T2)/2
    let dir = |t1: f64, t2: f64, h2: f64| -> Option<(f64, f64, f64)> {
        if !t1.is_finite() {
            return None;
        }
        if t2.is_finite() && t2 <= t1 {
            Some((1.5, (4.0 * t1 - t2) / 2.0, h2))
        } else {
            Some((1.0, t1, h2))
        }
    };
    // metric weights: g^{ee} / de^2 and g^{xx} / dx^2
    let we = 1.0 / (r.a * de * de);
    let wx = if r.q > 0.0 { 1.0 / (r.q * dx * dx) } else { 0.0 };
    let terms: Vec<(f64, f64, f64, f64)> = [dir(te1, te2, we), dir(tx1, tx2, wx)]
        .into_iter()
        .flatten()
        .filter(|t| t.2 > 0.0)
        .map(|(c1, c0, w)| (c1, c0, w, c0 / c1))
        .collect();
    solve_terms(&terms).unwrap_or(f64::INFINITY)
}

/// Solve `sum w (c1 T - c0)^2 = 1` using the terms whose upwind value is below T.
fn solve_terms(terms: &[(f64, f64, f64, f64)]) -> Option<f64> {
    let mut sorted = terms.to_vec();
    sorted.sort_by(|a, b| a.3.total_cmp(&b.3));
    let mut best = None;
    for m in 1..=sorted.len() {
        let used = &sorted[..m];
        let (mut qa, mut qb, mut qc) = (0.0, 0.0, -1.0);
        for &(c1, c0, w, _) in used {
            qa += w * c1 * c1;
            qb += -2.0 * w * c1 * c0;
            qc += w * c0 * c0;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            break;
        }
        let root = (-qb + disc.sqrt()) / (2.0 * qa);
        // causality: the solution must exceed every upwind value used
        if used.iter().all(|u| root >= u.3) {
            best = Some(root);
            if m < sorted.len() && root <= sorted[m].3 {
                break;
            }
        } else {
            break;
        }
    }
    best
}
