//! Symmetry-reduced grid on the 3-sphere.
//!
//! Hopf coordinates `z = cos(eta) e^{i xi1}`, `w = sin(eta) e^{i xi2}` with
//! `eta` in `[0, pi/2]` and `xi1` periodic. Fields invariant under rotation of
//! `xi2` live on the `(eta, xi1)` rectangle. Nodes include both axes: on
//! `eta = 0` the `xi2` circle collapses (each node is a distinct point of S^3),
//! on `eta = pi/2` the `xi1` circle collapses and the whole row is one orbit.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfGrid {
    pub n_eta: usize,
    pub n_xi: usize,
}

impl HopfGrid {
    pub fn new(n_eta: usize, n_xi: usize) -> Result<Self> {
        if n_eta < 16 || n_xi < 16 {
            return Err(Error::Parameter(format!(
                "grid sizes must be >= 16 per axis, got {n_eta}x{n_xi}"
            )));
        }
        if !n_xi.is_multiple_of(2) {
            return Err(Error::Parameter(format!("n_xi must be even, got {n_xi}")));
        }
        Ok(Self { n_eta, n_xi })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    #[inline]
    pub fn d_eta(&self) -> f64 {
        FRAC_PI_2 / (self.n_eta - 1) as f64
    }

    #[inline]
    pub fn d_xi(&self) -> f64 {
        2.0 * PI / self.n_xi as f64
    }

    #[inline]
    pub fn eta(&self, i: usize) -> f64 {
        if i == self.n_eta - 1 {
            FRAC_PI_2
        } else {
            i as f64 * self.d_eta()
        }
    }

    #[inline]
    pub fn xi(&self, j: usize) -> f64 {
        -PI + j as f64 * self.d_xi()
    }

    /// Column holding `xi1 = 0`; the pole sits at `(0, pole_column)`.
    #[inline]
    pub fn pole_column(&self) -> usize {
        self.n_xi / 2
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_eta * self.n_xi
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, `eta` outer and `xi1` inner.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_xi + j
    }

    #[inline]
    pub fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.n_xi as isize) as usize
    }

    /// `eta` extent of the control volume of row `i`.
    pub fn eta_cell(&self, i: usize) -> (f64, f64) {
        let h = 0.5 * self.d_eta();
        let e = self.eta(i);
        ((e - h).max(0.0), (e + h).min(FRAC_PI_2))
    }

    /// `xi1` extent of the control volume of column `j`.
    pub fn xi_cell(&self, j: usize) -> (f64, f64) {
        let h = 0.5 * self.d_xi();
        let x = self.xi(j);
        (x - h, x + h)
    }

    /// Map a fractional `(eta, xi)` position to the canonical chart:
    /// reflects through both axes and wraps `xi`.
    pub fn canonical(eta: f64, xi: f64) -> (f64, f64) {
        let mut e = eta;
        let mut x = xi;
        if e < 0.0 {
            e = -e;
        }
        if e > FRAC_PI_2 {
            e = PI - e;
            x += PI;
        }
        x = (x + PI).rem_euclid(2.0 * PI) - PI;
        (e, x)
    }
}

/// Real samples on the reduced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub n_eta: usize,
    pub n_xi: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &HopfGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &HopfGrid, v: f64) -> Self {
        Self {
            n_eta: grid.n_eta,
            n_xi: grid.n_xi,
            values: vec![v; grid.len()],
        }
    }

    /// Sample `f(eta, xi)` at every node. The collapsed row takes the value at `xi = 0`.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &HopfGrid, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_eta {
            let e = grid.eta(i);
            for j in 0..grid.n_xi {
                let x = if i == grid.n_eta - 1 { 0.0 } else { grid.xi(j) };
                values.push(f(e, x));
            }
        }
        Self {
            n_eta: grid.n_eta,
            n_xi: grid.n_xi,
            values,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_xi + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n_xi + j] = v;
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            n_eta: self.n_eta,
            n_xi: self.n_xi,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at a virtual node, using the reflection rules at both axes.
    /// Row `-k` mirrors row `k`; row `n-1+k` is row `n-1-k` shifted by half a turn.
    pub fn ghost(&self, i: isize, j: isize) -> f64 {
        let n = self.n_eta as isize;
        let (ii, jj) = if i < 0 {
            (-i, j)
        } else if i > n - 1 {
            (2 * (n - 1) - i, j + self.n_xi as isize / 2)
        } else {
            (i, j)
        };
        let jj = jj.rem_euclid(self.n_xi as isize) as usize;
        self.get(ii as usize, jj)
    }

    /// Tensor cubic Lagrange interpolation at `(eta, xi)` with first derivatives.
    /// Returns `(value, d/deta, d/dxi)`.
    pub fn interpolate(&self, eta: f64, xi: f64) -> (f64, f64, f64) {
        let grid = HopfGrid {
            n_eta: self.n_eta,
            n_xi: self.n_xi,
        };
        let de = grid.d_eta();
        let dx = grid.d_xi();
        // The last row sits at pi/2 regardless of spacing, and the spacing is uniform
        // by construction, so fractional indices are plain ratios.
        let fe = eta / de;
        let fx = (xi + PI) / dx;
        let ie = fe.floor() as isize;
        let ix = fx.floor() as isize;
        let te = fe - ie as f64;
        let tx = fx - ix as f64;
        let (we, wde) = cubic_weights(te);
        let (wx, wdx) = cubic_weights(tx);
        let mut v = 0.0;
        let mut ve = 0.0;
        let mut vx = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let s = self.ghost(ie - 1 + a as isize, ix - 1 + b as isize);
                v += we[a] * wx[b] * s;
                ve += wde[a] * wx[b] * s;
                vx += we[a] * wdx[b] * s;
            }
        }
        (v, ve / de, vx / dx)
    }
}

/// Cubic Lagrange weights on nodes -1, 0, 1, 2 at fractional position t in [0, 1),
/// with their derivatives in t.
fn cubic_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    let d = [
        -(3.0 * t * t - 6.0 * t + 2.0) / 6.0,
        (3.0 * t * t - 4.0 * t - 1.0) / 2.0,
        -(3.0 * t * t - 2.0 * t - 2.0) / 2.0,
        (3.0 * t * t - 1.0) / 6.0,
    ];
    (w, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(HopfGrid::new(8, 32).is_err());
        assert!(HopfGrid::new(32, 31).is_err());
        assert!(HopfGrid::new(16, 16).is_ok());
    }

    #[test]
    fn node_coordinates() {
        let g = HopfGrid::square(32).unwrap();
        assert_eq!(g.eta(0), 0.0);
        assert_eq!(g.eta(31), FRAC_PI_2);
        assert_eq!(g.xi(g.pole_column()), 0.0);
        assert!((g.xi(0) + PI).abs() < 1e-15);
    }

    #[test]
    fn interpolation_of_smooth_invariant_function() {
        // |z|^2 cos-like function: x = cos(eta) cos(xi) is smooth on S^3
        let g = HopfGrid::square(64).unwrap();
        let f = ScalarField::from_fn(&g, |e, x| e.cos() * x.cos() + 0.5 * (e.cos() * x.sin()).powi(2));
        let (e, x) = (0.37, -2.1);
        let (v, ve, vx) = f.interpolate(e, x);
        let exact = e.cos() * x.cos() + 0.5 * (e.cos() * x.sin()).powi(2);
        let de = -e.sin() * x.cos() - e.cos() * e.sin() * x.sin().powi(2);
        let dx = -e.cos() * x.sin() + (e.cos()).powi(2) * x.sin() * x.cos();
        assert!((v - exact).abs() < 1e-4, "{v} vs {exact}");
        assert!((ve - de).abs() < 1e-3, "{ve} vs {de}");
        assert!((vx - dx).abs() < 1e-3, "{vx} vs {dx}");
        // near both axes the ghost rules keep the stencil consistent
        for &(e, x) in &[(0.01, 0.4), (FRAC_PI_2 - 0.01, 1.3)] {
            let (v, _, _) = f.interpolate(e, x);
            let exact = e.cos() * x.cos() + 0.5 * (e.cos() * x.sin()).powi(2);
            assert!((v - exact).abs() < 1e-5, "{e} {x}: {v} vs {exact}");
        }
    }
}
