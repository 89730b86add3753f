//! Compressed sparse rows, preconditioned conjugate gradients and inverse iteration.

use rayon::prelude::*;

use crate::error::{Error, Result};

const PARALLEL_ROWS: usize = 16_384;

/// Square sparse matrix in CSR layout.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Assemble from triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        let row = |r: usize| -> f64 {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            acc
        };
        // rows are independent, so the parallel product is bit-identical to the serial one
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = row(r));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (r, dr) in d.iter_mut().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[k] == r {
                    *dr += self.vals[k];
                }
            }
        }
        d
    }

    /// `self + diag(shift)`; every row must already store its diagonal.
    pub fn plus_diagonal(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for r in 0..self.n {
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                if out.cols[k] == r {
                    out.vals[k] += shift[r];
                }
            }
        }
        out
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        dot(x, &y)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                if (self.get(c, r) - self.vals[k]).abs() > tol * self.vals[k].abs().max(1.0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct CgSettings {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Diagonally preconditioned conjugate gradients for SPD `a`, starting from `x`.
/// Stops at `||b - A x|| <= rel_tol ||b||` or after `max_iter` iterations.
pub fn pcg_solve(a: &Csr, b: &[f64], x: &mut [f64], settings: CgSettings) -> CgOutcome {
    let n = a.n;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while rel > settings.rel_tol && it < settings.max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return CgOutcome {
                iterations: it,
                relative_residual: rel,
                converged: false,
            };
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        it += 1;
        rel = norm(&r) / bnorm;
    }
    // recompute the true residual to guard against drift in the recurrence
    a.mul(x, &mut r);
    let true_rel = norm(&b.iter().zip(&r).map(|(b, ax)| b - ax).collect::<Vec<_>>()) / bnorm;
    CgOutcome {
        iterations: it,
        relative_residual: true_rel,
        converged: true_rel <= settings.rel_tol * 10.0,
    }
}

/// Solve and turn non-convergence into an error.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], settings: CgSettings) -> Result<CgOutcome> {
    let out = pcg_solve(a, b, x, settings);
    if !out.converged {
        return Err(Error::Numerical(format!(
            "conjugate gradients stagnated at relative residual {:.3e} after {} iterations",
            out.relative_residual, out.iterations
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EigenOutcome {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub change: f64,
}

/// Smallest eigenvalue of `A x = lambda M x` with `M = diag(mass)` by shifted
/// inverse iteration. `shift` must make `A + shift M` positive definite.
pub fn smallest_generalized_eigen(
    a: &Csr,
    mass: &[f64],
    shift: f64,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EigenOutcome> {
    let shifted = a.plus_diagonal(&mass.iter().map(|m| shift * m).collect::<Vec<_>>());
    let mnorm = |v: &[f64]| v.iter().zip(mass).map(|(x, m)| m * x * x).sum::<f64>().sqrt();
    let mut x = start.to_vec();
    let s = mnorm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let rayleigh = |x: &[f64]| a.quadratic_form(x) / x.iter().zip(mass).map(|(v, m)| m * v * v).sum::<f64>();
    let mut lambda = rayleigh(&x);
    // inexact inner solves are enough: the eigenvalue error is quadratic in the vector error
    let settings = CgSettings {
        rel_tol: 1e-7,
        max_iter: 50_000,
    };
    for it in 1..=max_iter {
        let rhs: Vec<f64> = x.iter().zip(mass).map(|(v, m)| v * m).collect();
        let mut y = x.clone();
        pcg(&shifted, &rhs, &mut y, settings)?;
        let s = mnorm(&y);
        y.iter_mut().for_each(|v| *v /= s);
        let next = rayleigh(&y);
        let change = (next - lambda).abs() / next.abs().max(1.0);
        x = y;
        lambda = next;
        if change < tol {
            return Ok(EigenOutcome {
                value: lambda,
                vector: x,
                iterations: it,
                change,
            });
        }
    }
    Err(Error::Numerical(format!(
        "inverse iteration did not converge in {max_iter} steps (last estimate {lambda})"
    )))
}
