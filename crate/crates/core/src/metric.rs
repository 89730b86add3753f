//! Metric families on S^3 in Hopf coordinates and their gridded coefficients.
//!
//! Coordinates are ordered `(eta, xi1, xi2)`. The Hopf fibre is generated by
//! `d/dxi1 + d/dxi2`; its round dual one-form is `cos^2(eta) dxi1 + sin^2(eta) dxi2`.
//! The Berger metric shrinks the fibre to length `eps`:
//! `g_eps = g_round - (1 - eps^2) sigma (x) sigma`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::curvature;
use crate::error::{Error, Result};
use crate::grid::{HopfGrid, ScalarField};
use crate::quadrature::GaussRule;

pub type Sym3 = [[f64; 3]; 3];

/// One term `amplitude * cos(eta_freq * eta) * cos(xi_freq * xi1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosTerm {
    pub amplitude: f64,
    pub eta_freq: f64,
    #[serde(default)]
    pub xi_freq: i32,
}

/// Positive conformal factor `phi = constant + sum of cosine terms`, invariant under `xi2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactor {
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<CosTerm>,
}

/// `phi` with its first and second partial derivatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct FactorJet {
    pub v: f64,
    pub e: f64,
    pub x: f64,
    pub ee: f64,
    pub xx: f64,
    pub ex: f64,
}

impl ConformalFactor {
    /// `1 + amplitude * cos(eta)`, the family used by the covariance checks.
    pub fn cos_eta(amplitude: f64) -> Self {
        Self {
            constant: 1.0,
            terms: vec![CosTerm {
                amplitude,
                eta_freq: 1.0,
                xi_freq: 0,
            }],
        }
    }

    pub fn jet(&self, eta: f64, xi: f64) -> FactorJet {
        let mut j = FactorJet {
            v: self.constant,
            ..Default::default()
        };
        for t in &self.terms {
            let k = t.eta_freq;
            let m = t.xi_freq as f64;
            let (se, ce) = (k * eta).sin_cos();
            let (sx, cx) = (m * xi).sin_cos();
            let a = t.amplitude;
            j.v += a * ce * cx;
            j.e += -a * k * se * cx;
            j.x += -a * m * ce * sx;
            j.ee += -a * k * k * ce * cx;
            j.xx += -a * m * m * ce * cx;
            j.ex += a * k * m * se * sx;
        }
        j
    }

    pub fn value(&self, eta: f64, xi: f64) -> f64 {
        self.jet(eta, xi).v
    }

    fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.xi_freq != 0 && (t.eta_freq * FRAC_PI_2).cos().abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "term with xi frequency {} does not vanish on the far axis",
                    t.xi_freq
                )));
            }
        }
        let n = 257;
        for a in 0..n {
            let eta = FRAC_PI_2 * a as f64 / (n - 1) as f64;
            for b in 0..n {
                let xi = -PI + 2.0 * PI * b as f64 / (n - 1) as f64;
                if self.value(eta, xi) <= 0.0 {
                    return Err(Error::Domain(format!(
                        "conformal factor is not positive at eta={eta:.4}, xi={xi:.4}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Symbolic selector for a metric on S^3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum MetricSpec {
    Round,
    Berger { eps: f64 },
    ConformalOfRound { factor: ConformalFactor },
    ScaledBerger { eps: f64, scale: f64 },
}

/// Coefficients of the reduced problem at one point.
///
/// `a` and `q` are the orbit-space metric `a deta^2 + q dxi1^2` (the inverse of
/// the `(eta, xi1)` block of the inverse metric); `mu` is the volume density
/// integrated over the collapsed `xi2` circle; `ell` is the length of the `xi2` orbit.
#[derive(Debug, Clone, Copy)]
pub struct Reduced {
    pub a: f64,
    pub q: f64,
    pub mu: f64,
    pub ell: f64,
}

impl Reduced {
    #[inline]
    pub fn inv_eta(&self) -> f64 {
        1.0 / self.a
    }
    #[inline]
    pub fn inv_xi(&self) -> f64 {
        1.0 / self.q
    }
}

impl MetricSpec {
    pub fn berger(eps: f64) -> Self {
        MetricSpec::Berger { eps }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MetricSpec::Round => Ok(()),
            MetricSpec::Berger { eps } => check_eps(*eps),
            MetricSpec::ScaledBerger { eps, scale } => {
                check_eps(*eps)?;
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::Parameter(format!("scale must be > 0, got {scale}")));
                }
                Ok(())
            }
            MetricSpec::ConformalOfRound { factor } => factor.validate(),
        }
    }

    /// `(eps, scale)` for the left-invariant family; `None` for conformal variants.
    pub fn berger_params(&self) -> Option<(f64, f64)> {
        match self {
            MetricSpec::Round => Some((1.0, 1.0)),
            MetricSpec::Berger { eps } => Some((*eps, 1.0)),
            MetricSpec::ScaledBerger { eps, scale } => Some((*eps, *scale)),
            MetricSpec::ConformalOfRound { .. } => None,
        }
    }

    pub fn is_left_invariant(&self) -> bool {
        self.berger_params().is_some()
    }

    /// Lengths of the frame `X1, X2, X3` for left-invariant variants.
    pub fn frame_lengths(&self) -> Option<[f64; 3]> {
        self.berger_params().map(|(e, s)| [e * s, s, s])
    }

    pub fn label(&self) -> String {
        match self {
            MetricSpec::Round => "round".to_string(),
            MetricSpec::Berger { eps } => format!("berger(eps={eps})"),
            MetricSpec::ScaledBerger { eps, scale } => format!("berger(eps={eps},scale={scale})"),
            MetricSpec::ConformalOfRound { .. } => "conformal-round".to_string(),
        }
    }

    /// Metric components in `(eta, xi1, xi2)`.
    pub fn components(&self, eta: f64, xi: f64) -> Sym3 {
        let (s, c) = eta.sin_cos();
        let (c2, s2) = (c * c, s * s);
        match self.berger_params() {
            Some((eps, k)) => {
                let shrink = 1.0 - eps * eps;
                let k2 = k * k;
                let g11 = c2 - shrink * c2 * c2;
                let g22 = s2 - shrink * s2 * s2;
                let g12 = -shrink * c2 * s2;
                [
                    [k2, 0.0, 0.0],
                    [0.0, k2 * g11, k2 * g12],
                    [0.0, k2 * g12, k2 * g22],
                ]
            }
            None => {
                let phi = self.conformal_factor().unwrap().value(eta, xi);
                let p4 = phi.powi(4);
                [[p4, 0.0, 0.0], [0.0, p4 * c2, 0.0], [0.0, 0.0, p4 * s2]]
            }
        }
    }

    pub fn conformal_factor(&self) -> Option<&ConformalFactor> {
        match self {
            MetricSpec::ConformalOfRound { factor } => Some(factor),
            _ => None,
        }
    }

    /// Closed-form reduced coefficients; well defined on both axes.
    pub fn reduced(&self, eta: f64, xi: f64) -> Reduced {
        let (s, c) = eta.sin_cos();
        let (c2, s2) = (c * c, s * s);
        match self.berger_params() {
            Some((eps, k)) => {
                let e2 = eps * eps;
                let k2 = k * k;
                let denom = c2 + e2 * s2;
                Reduced {
                    a: k2,
                    q: k2 * e2 * c2 / denom,
                    mu: 2.0 * PI * k2 * k * eps * c * s,
                    ell: 2.0 * PI * k * s * denom.sqrt(),
                }
            }
            None => {
                let phi = self.conformal_factor().unwrap().value(eta, xi);
                let p2 = phi * phi;
                Reduced {
                    a: p2 * p2,
                    q: p2 * p2 * c2,
                    mu: 2.0 * PI * p2 * p2 * p2 * c * s,
                    ell: 2.0 * PI * p2 * s,
                }
            }
        }
    }

    /// Coefficients of the orbit-space metric at the pole `(0, 0)`.
    pub fn pole_scales(&self) -> (f64, f64) {
        let r = self.reduced(0.0, 0.0);
        (r.a, r.q)
    }

    /// Scalar curvature at a point.
    pub fn scalar_curvature_at(&self, eta: f64, xi: f64) -> f64 {
        match self.berger_params() {
            Some((eps, k)) => (8.0 - 2.0 * eps * eps) / (k * k),
            None => {
                // R(phi^4 g) = phi^-5 (6 phi - 8 Lap_round phi)
                let f = self.conformal_factor().unwrap().jet(eta, xi);
                let lap = round_laplacian(&f, eta);
                (6.0 * f.v - 8.0 * lap) / f.v.powi(5)
            }
        }
    }

    /// Volume of the metric in closed form where available.
    pub fn exact_volume(&self) -> Option<f64> {
        self.berger_params()
            .map(|(eps, k)| 2.0 * PI * PI * eps * k * k * k)
    }
}

/// Round Laplacian of a `xi2`-invariant function from its jet, with the axis limits.
pub(crate) fn round_laplacian(f: &FactorJet, eta: f64) -> f64 {
    let (s, c) = eta.sin_cos();
    let cot_term = if s < 1e-8 { f.ee } else { c / s * f.e };
    let tan_term = if c < 1e-8 { -f.ee } else { s / c * f.e };
    let xi_term = if c < 1e-8 { 0.0 } else { f.xx / (c * c) };
    f.ee + cot_term - tan_term + xi_term
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// Discretised metric on a [`HopfGrid`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricField {
    pub spec: MetricSpec,
    pub grid: HopfGrid,
    pub g_eta_eta: ScalarField,
    pub g_xi1_xi1: ScalarField,
    pub g_xi2_xi2: ScalarField,
    pub g_xi1_xi2: ScalarField,
    /// Inverse-metric entries acting on `xi2`-invariant functions.
    pub inv_eta_eta: ScalarField,
    pub inv_xi1_xi1: ScalarField,
    /// Reduced volume weight `mu = 2 pi sqrt(det g)`.
    pub mu: ScalarField,
    /// Integral of `mu` over each control volume (the quadrature weights).
    pub cell_volume: ScalarField,
    pub scalar_curvature: ScalarField,
    /// Ricci eigenvalues relative to g, ascending.
    pub ricci: [ScalarField; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar_override: Option<f64>,
}

/// Number of Gauss points per axis used for cell integrals.
pub(crate) const CELL_GAUSS: usize = 3;

impl MetricField {
    /// Scalar curvature used by the conformal Laplacian at an arbitrary point.
    pub fn potential_at(&self, eta: f64, xi: f64) -> f64 {
        match self.scalar_override {
            Some(r) => r,
            None => self.spec.scalar_curvature_at(eta, xi),
        }
    }

    /// Replace the scalar curvature by a constant (synthetic operator tests).
    pub fn with_scalar_override(mut self, r: f64) -> Self {
        self.scalar_override = Some(r);
        self.scalar_curvature = ScalarField::constant(&self.grid, r);
        self
    }

    /// Quadrature of a nodal field against the volume form.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        self.cell_volume
            .values
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn min_ricci(&self) -> f64 {
        self.ricci[0].min()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Integrate `f(eta, xi)` over the control volume of node `(i, j)`.
pub(crate) fn cell_integral<F: Fn(f64, f64) -> f64>(
    grid: &HopfGrid,
    rule: &GaussRule,
    i: usize,
    j: usize,
    f: F,
) -> f64 {
    let (e0, e1) = grid.eta_cell(i);
    let (x0, x1) = grid.xi_cell(j);
    let mut acc = 0.0;
    for (e, we) in rule.on(e0, e1) {
        for (x, wx) in rule.on(x0, x1) {
            acc += we * wx * f(e, x);
        }
    }
    acc
}

/// Populate every coefficient field for `spec` on `grid`.
pub fn build_metric(spec: &MetricSpec, grid: &HopfGrid) -> Result<MetricField> {
    spec.validate()?;
    let rule = GaussRule::new(CELL_GAUSS);
    let n = grid.len();
    let mut gee = Vec::with_capacity(n);
    let mut g11 = Vec::with_capacity(n);
    let mut g22 = Vec::with_capacity(n);
    let mut g12 = Vec::with_capacity(n);
    let mut iee = Vec::with_capacity(n);
    let mut i11 = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut vol = Vec::with_capacity(n);
    let mut scal = Vec::with_capacity(n);
    let mut ric = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];

    let constant_ricci = curvature::structure_constant_curvature(spec).map(|r| r.ricci);
    let row_invariant = spec
        .conformal_factor()
        .is_some_and(|f| f.terms.iter().all(|t| t.xi_freq == 0));

    for i in 0..grid.n_eta {
        let eta = grid.eta(i);
        let mut row_ricci: Option<[f64; 3]> = None;
        for j in 0..grid.n_xi {
            let xi = if i == grid.n_eta - 1 { 0.0 } else { grid.xi(j) };
            let m = spec.components(eta, xi);
            let r = spec.reduced(eta, xi);
            gee.push(m[0][0]);
            g11.push(m[1][1]);
            g22.push(m[2][2]);
            g12.push(m[1][2]);
            iee.push(r.inv_eta());
            i11.push(if r.q > 0.0 { r.inv_xi() } else { f64::INFINITY });
            mu.push(r.mu);
            vol.push(cell_integral(grid, &rule, i, j, |e, x| spec.reduced(e, x).mu));
            scal.push(spec.scalar_curvature_at(eta, xi));
            let eig = match constant_ricci {
                Some(e) => e,
                None => match row_ricci {
                    Some(e) if row_invariant => e,
                    _ => {
                        // axis nodes use the limit from just inside the chart
                        let e_eval = eta.clamp(1e-3, FRAC_PI_2 - 1e-3);
                        let e = curvature::ricci_fd_at(spec, e_eval, xi, 1e-4).ricci;
                        row_ricci = Some(e);
                        e
                    }
                },
            };
            for k in 0..3 {
                ric[k].push(eig[k]);
            }
        }
    }

    let wrap = |values: Vec<f64>| ScalarField {
        n_eta: grid.n_eta,
        n_xi: grid.n_xi,
        values,
    };
    let [r0, r1, r2] = ric;
    let field = MetricField {
        spec: spec.clone(),
        grid: grid.clone(),
        g_eta_eta: wrap(gee),
        g_xi1_xi1: wrap(g11),
        g_xi2_xi2: wrap(g22),
        g_xi1_xi2: wrap(g12),
        inv_eta_eta: wrap(iee),
        inv_xi1_xi1: wrap(i11),
        mu: wrap(mu),
        cell_volume: wrap(vol),
        scalar_curvature: wrap(scal),
        ricci: [wrap(r0), wrap(r1), wrap(r2)],
        scalar_override: None,
    };
    check_positive_definite(&field)?;
    Ok(field)
}

fn check_positive_definite(field: &MetricField) -> Result<()> {
    let grid = &field.grid;
    for i in 1..grid.n_eta - 1 {
        for j in 0..grid.n_xi {
            let k = grid.index(i, j);
            let a = field.g_eta_eta.values[k];
            let b11 = field.g_xi1_xi1.values[k];
            let b22 = field.g_xi2_xi2.values[k];
            let b12 = field.g_xi1_xi2.values[k];
            if !(a > 0.0 && b11 > 0.0 && b11 * b22 - b12 * b12 > 0.0) {
                return Err(Error::Domain(format!(
                    "metric block not positive definite at node ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Lengths of `X1, X2, X3` recovered by pulling the left-invariant frame back
/// through the coefficient fields at `(eta, xi1, xi2)`.
///
/// In these coordinates `X1` is the fibre field `d/dxi1 + d/dxi2`, and the
/// horizontal plane is spanned by `d/deta` and `cos^2 d/dxi1 - sin^2 d/dxi2`
/// rescaled to unit round length.
pub fn frame_lengths_at(spec: &MetricSpec, eta: f64, xi: f64) -> [f64; 3] {
    let g = spec.components(eta, xi);
    let (s, c) = eta.sin_cos();
    let quad = |v: [f64; 3]| -> f64 {
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                acc += g[a][b] * v[a] * v[b];
            }
        }
        acc.sqrt()
    };
    let fibre = [0.0, 1.0, 1.0];
    let radial = [1.0, 0.0, 0.0];
    // round-orthogonal to the fibre and to d/deta, unit round length
    let h = [0.0, s / c, -c / s];
    [quad(fibre), quad(radial), quad(h)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_out_of_range_is_rejected() {
        assert!(matches!(MetricSpec::berger(0.0).validate(), Err(Error::Parameter(_))));
        assert!(matches!(MetricSpec::berger(1.2).validate(), Err(Error::Parameter(_))));
        assert!(MetricSpec::berger(1.0).validate().is_ok());
    }

    #[test]
    fn nonpositive_conformal_factor_is_a_domain_error() {
        let spec = MetricSpec::ConformalOfRound {
            factor: ConformalFactor::cos_eta(-1.5),
        };
        assert!(matches!(spec.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn berger_frame_lengths() {
        let spec = MetricSpec::berger(0.5);
        for &(e, x) in &[(0.3, 0.1), (1.1, -2.0), (0.7, 3.0)] {
            let l = frame_lengths_at(&spec, e, x);
            assert!((l[0] - 0.5).abs() < 1e-12, "{l:?}");
            assert!((l[1] - 1.0).abs() < 1e-12);
            assert!((l[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn berger_one_is_round() {
        let grid = HopfGrid::square(16).unwrap();
        let a = build_metric(&MetricSpec::Round, &grid).unwrap();
        let b = build_metric(&MetricSpec::berger(1.0), &grid).unwrap();
        assert_eq!(a.g_xi1_xi1, b.g_xi1_xi1);
        assert_eq!(a.g_xi1_xi2, b.g_xi1_xi2);
        assert_eq!(a.g_xi2_xi2, b.g_xi2_xi2);
        assert_eq!(a.g_eta_eta, b.g_eta_eta);
    }

    #[test]
    fn berger_fibre_block_determinant() {
        let spec = MetricSpec::berger(0.3);
        let g = spec.components(std::f64::consts::FRAC_PI_4, 0.0);
        let det = g[1][1] * g[2][2] - g[1][2] * g[1][2];
        assert!((det - 0.0225).abs() < 1e-14, "{det}");
    }

    #[test]
    fn reduced_coefficients_match_components() {
        let specs = [
            MetricSpec::berger(0.4),
            MetricSpec::ScaledBerger { eps: 0.7, scale: 1.8 },
            MetricSpec::ConformalOfRound {
                factor: ConformalFactor::cos_eta(0.1),
            },
        ];
        for spec in &specs {
            for &(e, x) in &[(0.2, 0.5), (0.9, -1.0), (1.4, 2.5)] {
                let g = spec.components(e, x);
                let r = spec.reduced(e, x);
                let det_b = g[1][1] * g[2][2] - g[1][2] * g[1][2];
                assert!((r.a - g[0][0]).abs() < 1e-12);
                assert!((r.q - det_b / g[2][2]).abs() < 1e-12);
                assert!((r.mu - 2.0 * PI * (g[0][0] * det_b).sqrt()).abs() < 1e-12);
                assert!((r.ell - 2.0 * PI * g[2][2].sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_weights_sum_to_volume() {
        let grid = HopfGrid::square(32).unwrap();
        let m = build_metric(&MetricSpec::berger(0.6), &grid).unwrap();
        let v = m.integrate(&ScalarField::constant(&grid, 1.0));
        assert!((v - 2.0 * PI * PI * 0.6).abs() < 1e-10, "{v}");
        assert!(m.mu.min() >= 0.0);
        // mu vanishes on both axes
        for j in 0..grid.n_xi {
            assert_eq!(m.mu.get(0, j), 0.0);
            assert!(m.mu.get(grid.n_eta - 1, j).abs() < 1e-15);
        }
    }
}
