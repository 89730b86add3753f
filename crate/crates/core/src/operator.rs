//! Finite-volume discretisation of the conformal Laplacian `-8 Lap_g + R(g)`
//! acting on `xi2`-invariant functions.
//!
//! Unknowns sit on the grid nodes except the row `eta = pi/2`, which is a single
//! orbit and carries one unknown. The quadratic form
//! `sum_faces 8 W (u_a - u_b)^2 + sum_nodes P u^2` approximates
//! `int 8|grad u|^2 + R u^2 dV`; face weights are face integrals of
//! `mu g^{..}` divided by the node spacing.

use crate::error::{Error, Result};
use crate::grid::{HopfGrid, ScalarField};
use crate::linalg::Csr;
use crate::metric::{cell_integral, MetricField, CELL_GAUSS};
use crate::quadrature::GaussRule;

#[derive(Debug, Clone)]
pub struct ConformalLaplacian {
    pub grid: HopfGrid,
    /// Stiffness of `int |grad u|^2 dV` (without the factor 8).
    pub stiffness: Csr,
    /// `-8 Lap + R` assembled.
    pub matrix: Csr,
    /// Lumped volume per unknown.
    pub mass: Vec<f64>,
    /// `int R dV` per unknown.
    pub potential: Vec<f64>,
}

impl ConformalLaplacian {
    pub fn assemble(metric: &MetricField) -> Result<Self> {
        let grid = metric.grid.clone();
        let spec = &metric.spec;
        let rule = GaussRule::new(CELL_GAUSS);
        let n_unknowns = unknown_count(&grid);
        let de = grid.d_eta();
        let dx = grid.d_xi();
        let last = grid.n_eta - 1;

        let mut triplets = Vec::with_capacity(5 * n_unknowns);
        let push_face = |t: &mut Vec<(usize, usize, f64)>, a: usize, b: usize, w: f64| {
            t.push((a, a, w));
            t.push((b, b, w));
            t.push((a, b, -w));
            t.push((b, a, -w));
        };

        for i in 0..last {
            for j in 0..grid.n_xi {
                let here = unknown(&grid, i, j);
                // eta face towards row i + 1
                let eta_f = (i as f64 + 0.5) * de;
                let (x0, x1) = grid.xi_cell(j);
                let w_eta = rule.integrate(x0, x1, |x| {
                    let r = spec.reduced(eta_f, x);
                    r.mu / r.a
                }) / de;
                push_face(&mut triplets, here, unknown(&grid, i + 1, j), w_eta);
                // xi face towards column j + 1
                let (e0, e1) = grid.eta_cell(i);
                let xi_f = grid.xi(j) + 0.5 * dx;
                let w_xi = rule.integrate(e0, e1, |e| {
                    let r = spec.reduced(e, xi_f);
                    r.mu / r.q
                }) / dx;
                push_face(&mut triplets, here, unknown(&grid, i, (j + 1) % grid.n_xi), w_xi);
            }
        }
        // every row stores its diagonal even if the face weights vanish
        for k in 0..n_unknowns {
            triplets.push((k, k, 0.0));
        }
        let stiffness = Csr::from_triplets(n_unknowns, triplets);
        if !stiffness.is_symmetric(1e-12) {
            return Err(Error::Numerical("assembled stiffness is not symmetric".into()));
        }

        let mut mass = vec![0.0; n_unknowns];
        let mut potential = vec![0.0; n_unknowns];
        for i in 0..grid.n_eta {
            for j in 0..grid.n_xi {
                let k = unknown(&grid, i, j);
                mass[k] += metric.cell_volume.get(i, j);
                potential[k] += match metric.scalar_override {
                    Some(r) => r * metric.cell_volume.get(i, j),
                    None => cell_integral(&grid, &rule, i, j, |e, x| {
                        spec.scalar_curvature_at(e, x) * spec.reduced(e, x).mu
                    }),
                };
            }
        }
        let mut matrix = stiffness.clone();
        matrix.vals.iter_mut().for_each(|v| *v *= 8.0);
        let matrix = matrix.plus_diagonal(&potential);
        Ok(Self {
            grid,
            stiffness,
            matrix,
            mass,
            potential,
        })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Discrete `int 8|grad u|^2 + R u^2 dV`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.matrix.quadratic_form(u)
    }

    /// Discrete `int |grad u|^2 dV`.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        self.stiffness.quadratic_form(u)
    }

    /// Lumped `int u^p dV`.
    pub fn power_integral(&self, u: &[f64], p: i32) -> f64 {
        u.iter().zip(&self.mass).map(|(v, m)| m * v.powi(p)).sum()
    }

    pub fn restrict(&self, field: &ScalarField) -> Vec<f64> {
        restrict(&self.grid, field)
    }

    pub fn extend(&self, u: &[f64]) -> ScalarField {
        extend(&self.grid, u)
    }
}

pub fn unknown_count(grid: &HopfGrid) -> usize {
    (grid.n_eta - 1) * grid.n_xi + 1
}

/// Unknown index of node `(i, j)`; the whole last row maps to one index.
#[inline]
pub fn unknown(grid: &HopfGrid, i: usize, j: usize) -> usize {
    if i == grid.n_eta - 1 {
        (grid.n_eta - 1) * grid.n_xi
    } else {
        grid.index(i, j)
    }
}

pub fn restrict(grid: &HopfGrid, field: &ScalarField) -> Vec<f64> {
    let mut u = vec![0.0; unknown_count(grid)];
    for i in 0..grid.n_eta - 1 {
        for j in 0..grid.n_xi {
            u[grid.index(i, j)] = field.get(i, j);
        }
    }
    u[unknown(grid, grid.n_eta - 1, 0)] = field.get(grid.n_eta - 1, 0);
    u
}

pub fn extend(grid: &HopfGrid, u: &[f64]) -> ScalarField {
    let mut f = ScalarField::zeros(grid);
    for i in 0..grid.n_eta {
        for j in 0..grid.n_xi {
            f.set(i, j, u[unknown(grid, i, j)]);
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_metric, MetricSpec};
    use std::f64::consts::PI;

    #[test]
    fn constants_are_in_the_stiffness_kernel() {
        let grid = HopfGrid::square(32).unwrap();
        let m = build_metric(&MetricSpec::berger(0.4), &grid).unwrap();
        let op = ConformalLaplacian::assemble(&m).unwrap();
        let ones = vec![1.0; op.len()];
        assert!(op.dirichlet(&ones).abs() < 1e-10);
        let e = op.energy(&ones);
        let want = (8.0 - 2.0 * 0.16) * 2.0 * PI * PI * 0.4;
        assert!((e - want).abs() < 1e-8 * want, "{e} vs {want}");
    }

    #[test]
    fn dirichlet_energy_of_first_harmonic_converges() {
        // x = cos(eta) cos(xi) on the round sphere: |grad x|^2 integrates to 3 * int x^2 = 3 * pi^2 / 2
        let exact = 1.5 * PI * PI;
        let err = |n: usize| {
            let grid = HopfGrid::square(n).unwrap();
            let m = build_metric(&MetricSpec::Round, &grid).unwrap();
            let op = ConformalLaplacian::assemble(&m).unwrap();
            let u = op.restrict(&ScalarField::from_fn(&grid, |e, x| e.cos() * x.cos()));
            (op.dirichlet(&u) - exact).abs()
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 1e-2 * exact, "{e2}");
        assert!(e1 / e2 > 3.0, "{e1} {e2}");
    }
}
