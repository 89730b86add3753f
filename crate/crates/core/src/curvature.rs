//! Curvature of metrics on S^3: a structure-constant route for left-invariant
//! metrics and a finite-difference Christoffel route for anything with a
//! coefficient jet.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::metric::{MetricField, MetricSpec, Sym3};

/// Brackets of the su(2) basis: `[X1, X2] = 2 X3` and cyclic.
fn su2_bracket(i: usize, j: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    if i == j {
        return out;
    }
    let k = 3 - i - j;
    // sign of the permutation (i, j, k)
    let sign = if (i + 1) % 3 == j { 1.0 } else { -1.0 };
    out[k] = 2.0 * sign;
    out
}

/// Curvature of a left-invariant metric on SU(2) in an orthonormal frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureCurvature {
    /// Frame lengths of `X1, X2, X3`.
    pub frame_lengths: [f64; 3],
    /// `R_{ijkl} = <R(e_i, e_j) e_k, e_l>`.
    pub riemann: [[[[f64; 3]; 3]; 3]; 3],
    /// Ricci eigenvalues, ascending.
    pub ricci: [f64; 3],
    pub scalar: f64,
}

impl StructureCurvature {
    /// Left-invariant metric with `|X_i| = lengths[i]`, the `X_i` orthogonal.
    pub fn from_frame_lengths(lengths: [f64; 3]) -> Self {
        // [e_i, e_j] = sum_k c[i][j][k] e_k with e_i = X_i / L_i
        let mut c = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let b = su2_bracket(i, j);
                for k in 0..3 {
                    c[i][j][k] = b[k] * lengths[k] / (lengths[i] * lengths[j]);
                }
            }
        }
        // Koszul: <nabla_i e_j, e_k> = (c_ij^k - c_jk^i + c_ki^j) / 2
        let mut gam = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    gam[i][j][k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
                }
            }
        }
        // R(e_i, e_j) e_k = nabla_i nabla_j e_k - nabla_j nabla_i e_k - nabla_[e_i,e_j] e_k
        let mut riemann = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for m in 0..3 {
                        let mut v = 0.0;
                        for l in 0..3 {
                            v += gam[j][k][l] * gam[i][l][m] - gam[i][k][l] * gam[j][l][m]
                                - c[i][j][l] * gam[l][k][m];
                        }
                        riemann[i][j][k][m] = v;
                    }
                }
            }
        }
        let mut ric = Matrix3::zeros();
        for j in 0..3 {
            for k in 0..3 {
                let mut v = 0.0;
                for i in 0..3 {
                    v += riemann[i][j][k][i];
                }
                ric[(j, k)] = v;
            }
        }
        let ricci = sorted_eigenvalues(ric);
        let scalar = ricci.iter().sum();
        Self {
            frame_lengths: lengths,
            riemann,
            ricci,
            scalar,
        }
    }

    /// Sectional curvature of the plane spanned by frame-coordinate vectors `u`, `v`.
    pub fn sectional(&self, u: [f64; 3], v: [f64; 3]) -> f64 {
        let mut num = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        num += self.riemann[i][j][k][l] * u[i] * v[j] * v[k] * u[l];
                    }
                }
            }
        }
        let uu: f64 = u.iter().map(|x| x * x).sum();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        num / (uu * vv - uv * uv)
    }

    /// Exact sectional range: in dimension 3 the extremes are `R/2 - lambda_k`.
    pub fn sectional_range(&self) -> (f64, f64) {
        sectional_range_from_ricci(self.ricci)
    }
}

pub fn sectional_range_from_ricci(ricci: [f64; 3]) -> (f64, f64) {
    let half = 0.5 * ricci.iter().sum::<f64>();
    let ks = ricci.map(|l| half - l);
    (
        ks.iter().copied().fold(f64::INFINITY, f64::min),
        ks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Structure-constant curvature, or `None` for metrics that are not left-invariant.
pub fn structure_constant_curvature(spec: &MetricSpec) -> Option<StructureCurvature> {
    spec.frame_lengths().map(StructureCurvature::from_frame_lengths)
}

fn sorted_eigenvalues(m: Matrix3<f64>) -> [f64; 3] {
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut v = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Metric components with first and second partial derivatives at a point.
/// Derivatives in `xi2` vanish.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub g: Sym3,
    pub dg: [Sym3; 3],
    pub ddg: [[Sym3; 3]; 3],
}

/// A scalar with first and second derivatives in `(eta, xi1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarJet {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
}

fn zero3() -> Sym3 {
    [[0.0; 3]; 3]
}

fn axpy(out: &mut Sym3, a: f64, x: &Sym3) {
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] += a * x[r][c];
        }
    }
}

impl MetricJet {
    /// Central differences of `components` with the given step.
    pub fn from_spec(spec: &MetricSpec, eta: f64, xi: f64, step: f64) -> Self {
        let f = |e: f64, x: f64| spec.components(e, x);
        let g = f(eta, xi);
        let ep = f(eta + step, xi);
        let em = f(eta - step, xi);
        let xp = f(eta, xi + step);
        let xm = f(eta, xi - step);
        let pp = f(eta + step, xi + step);
        let pm = f(eta + step, xi - step);
        let mp = f(eta - step, xi + step);
        let mm = f(eta - step, xi - step);
        let mut dg = [zero3(); 3];
        let mut ddg = [[zero3(); 3]; 3];
        let h2 = step * step;
        for r in 0..3 {
            for c in 0..3 {
                dg[0][r][c] = (ep[r][c] - em[r][c]) / (2.0 * step);
                dg[1][r][c] = (xp[r][c] - xm[r][c]) / (2.0 * step);
                ddg[0][0][r][c] = (ep[r][c] - 2.0 * g[r][c] + em[r][c]) / h2;
                ddg[1][1][r][c] = (xp[r][c] - 2.0 * g[r][c] + xm[r][c]) / h2;
                let cross = (pp[r][c] - pm[r][c] - mp[r][c] + mm[r][c]) / (4.0 * h2);
                ddg[0][1][r][c] = cross;
                ddg[1][0][r][c] = cross;
            }
        }
        Self { g, dg, ddg }
    }

    /// Jet of `u^4 g` given the jet of `u`.
    pub fn conformal(&self, u: &ScalarJet) -> Self {
        let u2 = u.v * u.v;
        let u3 = u2 * u.v;
        let u4 = u2 * u2;
        let du = [u.d[0], u.d[1], 0.0];
        let ddu = |a: usize, b: usize| if a < 2 && b < 2 { u.dd[a][b] } else { 0.0 };
        let mut g = zero3();
        axpy(&mut g, u4, &self.g);
        let mut dg = [zero3(); 3];
        for a in 0..3 {
            axpy(&mut dg[a], 4.0 * u3 * du[a], &self.g);
            axpy(&mut dg[a], u4, &self.dg[a]);
        }
        let mut ddg = [[zero3(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let coeff = 12.0 * u2 * du[a] * du[b] + 4.0 * u3 * ddu(a, b);
                axpy(&mut ddg[a][b], coeff, &self.g);
                axpy(&mut ddg[a][b], 4.0 * u3 * du[a], &self.dg[b]);
                axpy(&mut ddg[a][b], 4.0 * u3 * du[b], &self.dg[a]);
                axpy(&mut ddg[a][b], u4, &self.ddg[a][b]);
            }
        }
        Self { g, dg, ddg }
    }

    /// Ricci tensor in coordinates.
    pub fn ricci_tensor(&self) -> Result<Matrix3<f64>> {
        let gm = Matrix3::from_fn(|r, c| self.g[r][c]);
        let ginv = gm
            .try_inverse()
            .ok_or_else(|| Error::Domain("degenerate metric in curvature evaluation".into()))?;
        let gi = |a: usize, b: usize| ginv[(a, b)];
        // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
        let mut dginv = [[[0.0; 3]; 3]; 3];
        for m in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut v = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            v -= gi(k, a) * self.dg[m][a][b] * gi(b, l);
                        }
                    }
                    dginv[m][k][l] = v;
                }
            }
        }
        // first-kind symbols and their derivatives
        let first = |i: usize, j: usize, l: usize| -> f64 {
            0.5 * (self.dg[i][j][l] + self.dg[j][i][l] - self.dg[l][i][j])
        };
        let dfirst = |m: usize, i: usize, j: usize, l: usize| -> f64 {
            0.5 * (self.ddg[m][i][j][l] + self.ddg[m][j][i][l] - self.ddg[m][l][i][j])
        };
        let mut gam = [[[0.0; 3]; 3]; 3]; // gam[k][i][j]
        let mut dgam = [[[[0.0; 3]; 3]; 3]; 3]; // dgam[m][k][i][j]
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut v = 0.0;
                    for l in 0..3 {
                        v += gi(k, l) * first(i, j, l);
                    }
                    gam[k][i][j] = v;
                    for m in 0..3 {
                        let mut dv = 0.0;
                        for l in 0..3 {
                            dv += dginv[m][k][l] * first(i, j, l) + gi(k, l) * dfirst(m, i, j, l);
                        }
                        dgam[m][k][i][j] = dv;
                    }
                }
            }
        }
        let mut ric = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    v += dgam[k][k][i][j] - dgam[j][k][i][k];
                    for l in 0..3 {
                        v += gam[k][k][l] * gam[l][i][j] - gam[k][j][l] * gam[l][i][k];
                    }
                }
                ric[(i, j)] = v;
            }
        }
        Ok(0.5 * (ric + ric.transpose()))
    }

    /// Ricci eigenvalues relative to g (ascending), scalar curvature and sectional range.
    pub fn ricci_sample(&self) -> Result<RicciSample> {
        let ric = self.ricci_tensor()?;
        let gm = Matrix3::from_fn(|r, c| self.g[r][c]);
        let chol = gm
            .cholesky()
            .ok_or_else(|| Error::Domain("metric not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .try_inverse()
            .ok_or_else(|| Error::Domain("degenerate metric".into()))?;
        let m = linv * ric * linv.transpose();
        let ricci = sorted_eigenvalues(m);
        let (lo, hi) = sectional_range_from_ricci(ricci);
        Ok(RicciSample {
            ricci,
            scalar: ricci.iter().sum(),
            sectional_min: lo,
            sectional_max: hi,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RicciSample {
    pub ricci: [f64; 3],
    pub scalar: f64,
    pub sectional_min: f64,
    pub sectional_max: f64,
}

/// Finite-difference Christoffel curvature of `spec` at a chart point.
///
/// Panics only if the metric is degenerate there; callers stay inside the chart.
pub fn ricci_fd_at(spec: &MetricSpec, eta: f64, xi: f64, step: f64) -> RicciSample {
    MetricJet::from_spec(spec, eta, xi, step)
        .ricci_sample()
        .expect("metric is nondegenerate inside the chart")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureMethod {
    StructureConstants,
    FiniteDifference,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub method: CurvatureMethod,
    /// Range of sampled sectional curvatures.
    pub sectional_min: f64,
    pub sectional_max: f64,
    /// Ricci eigenvalue triple at the node where the smallest eigenvalue is attained.
    pub ricci: [f64; 3],
    pub min_ricci: f64,
    pub max_ricci: f64,
    pub scalar_min: f64,
    pub scalar_max: f64,
    /// Number of sampled planes (structure route) or nodes (finite-difference route).
    pub samples: usize,
}

/// Curvature of a built metric.
///
/// Left-invariant variants use the structure constants of su(2) and sample
/// random planes; other variants fall back to the finite-difference route
/// evaluated on the coefficient fields.
pub fn curvature(metric: &MetricField) -> Result<CurvatureReport> {
    curvature_with(metric, CurvatureMethod::StructureConstants)
}

pub fn curvature_with(metric: &MetricField, method: CurvatureMethod) -> Result<CurvatureReport> {
    let structure = structure_constant_curvature(&metric.spec);
    match (method, structure) {
        (CurvatureMethod::StructureConstants, Some(sc)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            let mut planes: Vec<([f64; 3], [f64; 3])> = vec![
                (basis[0], basis[1]),
                (basis[0], basis[2]),
                (basis[1], basis[2]),
            ];
            for _ in 0..512 {
                let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                planes.push((u, v));
            }
            let mut count = 0;
            for (u, v) in planes {
                let k = sc.sectional(u, v);
                if k.is_finite() {
                    lo = lo.min(k);
                    hi = hi.max(k);
                    count += 1;
                }
            }
            let r = metric.scalar_curvature.values.as_slice();
            Ok(CurvatureReport {
                method: CurvatureMethod::StructureConstants,
                sectional_min: lo,
                sectional_max: hi,
                ricci: sc.ricci,
                min_ricci: sc.ricci[0],
                max_ricci: sc.ricci[2],
                scalar_min: r.iter().copied().fold(f64::INFINITY, f64::min),
                scalar_max: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                samples: count,
            })
        }
        _ => fd_report(metric),
    }
}

fn fd_report(metric: &MetricField) -> Result<CurvatureReport> {
    let grid = &metric.grid;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut min_triple = [f64::INFINITY; 3];
    let mut max_ricci = f64::NEG_INFINITY;
    let mut count = 0;
    // interior rows only: the chart is singular on the axes
    for i in 1..grid.n_eta - 1 {
        let eta = grid.eta(i);
        for j in 0..grid.n_xi {
            let s = MetricJet::from_spec(&metric.spec, eta, grid.xi(j), 1e-4).ricci_sample()?;
            lo = lo.min(s.sectional_min);
            hi = hi.max(s.sectional_max);
            if s.ricci[0] < min_triple[0] {
                min_triple = s.ricci;
            }
            max_ricci = max_ricci.max(s.ricci[2]);
            count += 1;
        }
    }
    let r = metric.scalar_curvature.values.as_slice();
    Ok(CurvatureReport {
        method: CurvatureMethod::FiniteDifference,
        sectional_min: lo,
        sectional_max: hi,
        ricci: min_triple,
        min_ricci: min_triple[0],
        max_ricci,
        scalar_min: r.iter().copied().fold(f64::INFINITY, f64::min),
        scalar_max: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        samples: count,
    })
}

/// Volume by quadrature of the reduced weight.
pub fn volume(metric: &MetricField) -> f64 {
    metric.cell_volume.values.iter().sum()
}

/// Largest homothety `c^2 g` with `Ric >= 2 c^2 g`, and the volume it certifies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VmaxBound {
    pub c_star: f64,
    pub min_ricci: f64,
    pub ricci: [f64; 3],
    pub volume: f64,
    /// `c_star^3 * volume`, a lower bound for V_max within the homothety family.
    pub vmax_lower_bound: f64,
    /// Half the volume of the unit round sphere, `pi^2`.
    pub threshold: f64,
    pub meets_threshold: bool,
}

pub fn vmax_rescaling(metric: &MetricField) -> Result<VmaxBound> {
    let report = curvature(metric)?;
    let min_ricci = report.min_ricci.min(metric.min_ricci());
    if !(min_ricci > 0.0) {
        return Err(Error::NotApplicable(format!(
            "minimum Ricci eigenvalue {min_ricci} is not positive"
        )));
    }
    let c_star = (0.5 * min_ricci).sqrt();
    let vol = volume(metric);
    let bound = c_star.powi(3) * vol;
    let threshold = PI * PI;
    Ok(VmaxBound {
        c_star,
        min_ricci,
        ricci: report.ricci,
        volume: vol,
        vmax_lower_bound: bound,
        threshold,
        meets_threshold: bound >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::HopfGrid;
    use crate::metric::{build_metric, ConformalFactor};

    #[test]
    fn bracket_table() {
        assert_eq!(su2_bracket(0, 1), [0.0, 0.0, 2.0]);
        assert_eq!(su2_bracket(1, 2), [2.0, 0.0, 0.0]);
        assert_eq!(su2_bracket(2, 0), [0.0, 2.0, 0.0]);
        assert_eq!(su2_bracket(1, 0), [0.0, 0.0, -2.0]);
    }

    #[test]
    fn round_sphere_structure_constants() {
        let sc = StructureCurvature::from_frame_lengths([1.0; 3]);
        for r in sc.ricci {
            assert!((r - 2.0).abs() < 1e-13);
        }
        assert!((sc.scalar - 6.0).abs() < 1e-12);
        let (lo, hi) = sc.sectional_range();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn berger_structure_constants() {
        let e: f64 = 0.5;
        let sc = StructureCurvature::from_frame_lengths([e, 1.0, 1.0]);
        let want = [2.0 * e * e, 4.0 - 2.0 * e * e, 4.0 - 2.0 * e * e];
        for (a, b) in sc.ricci.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{:?}", sc.ricci);
        }
        let (lo, hi) = sc.sectional_range();
        assert!((lo - e * e).abs() < 1e-12);
        assert!((hi - (4.0 - 3.0 * e * e)).abs() < 1e-12);
        assert!((sc.sectional([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) - e * e).abs() < 1e-12);
        assert!((sc.sectional([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]) - (4.0 - 3.0 * e * e)).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_route_matches_on_round() {
        for &(eta, xi) in &[(0.4, 0.3), (1.0, -2.0)] {
            let s = ricci_fd_at(&MetricSpec::Round, eta, xi, 1e-4);
            for r in s.ricci {
                assert!((r - 2.0).abs() < 1e-5, "{:?}", s.ricci);
            }
        }
    }

    #[test]
    fn routes_agree_to_second_order_on_berger() {
        let spec = MetricSpec::berger(0.5);
        let exact = structure_constant_curvature(&spec).unwrap().ricci;
        let err = |h: f64| {
            let s = ricci_fd_at(&spec, 0.7, 0.2, h);
            s.ricci
                .iter()
                .zip(exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
        assert!(e2 < 1e-2);
    }

    #[test]
    fn conformal_scalar_curvature_matches_fd_route() {
        let spec = MetricSpec::ConformalOfRound {
            factor: ConformalFactor::cos_eta(0.1),
        };
        for &(eta, xi) in &[(0.3, 0.0), (0.8, 1.0), (1.2, -2.0)] {
            let s = ricci_fd_at(&spec, eta, xi, 1e-4);
            let r = spec.scalar_curvature_at(eta, xi);
            assert!((s.scalar - r).abs() < 1e-5, "{} vs {r}", s.scalar);
        }
    }

    #[test]
    fn volume_and_vmax() {
        let grid = HopfGrid::square(32).unwrap();
        let round = build_metric(&MetricSpec::Round, &grid).unwrap();
        let v = vmax_rescaling(&round).unwrap();
        assert!((v.c_star - 1.0).abs() < 1e-12);
        assert!((v.vmax_lower_bound - 2.0 * PI * PI).abs() < 1e-9);
        assert!(v.meets_threshold);

        let b = build_metric(&MetricSpec::berger(0.5), &grid).unwrap();
        let v = vmax_rescaling(&b).unwrap();
        assert!((v.c_star - 0.5).abs() < 1e-12);
        assert!((v.vmax_lower_bound - 2.0 * PI * PI * 0.0625).abs() < 1e-9);
        assert!(!v.meets_threshold);
    }

    #[test]
    fn nonpositive_ricci_is_not_applicable() {
        let grid = HopfGrid::square(16).unwrap();
        let mut m = build_metric(&MetricSpec::Round, &grid).unwrap();
        m.spec = MetricSpec::ConformalOfRound {
            factor: ConformalFactor::cos_eta(0.0),
        };
        for f in m.ricci.iter_mut() {
            *f = f.map(|_| -1.0);
        }
        assert!(matches!(vmax_rescaling(&m), Err(Error::NotApplicable(_))));
    }
}
