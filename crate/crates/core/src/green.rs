//! Green's function of the conformal Laplacian with a pole at `(eta, xi1) = (0, 0)`.
//!
//! `L G = 32 pi delta_P` for `L = -8 Lap_g + R(g)`, which normalises
//! `G d -> 1` at the pole. The singular part is carried by the parametrix
//! `p = chi(r) / r`, where `r` is the distance in the tangent metric at the pole
//! and `chi` a smooth cutoff; the remainder `w = G - p` solves `L w = -L p`
//! (the right side is integrable) with the finite-volume operator.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::distance::local_pole_distance;
use crate::error::{Error, Result};
use crate::grid::{HopfGrid, ScalarField};
use crate::linalg::{pcg, smallest_generalized_eigen, CgSettings};
use crate::metric::{build_metric, MetricField, MetricSpec};
use crate::operator::ConformalLaplacian;
use crate::quadrature::{richardson_derivative, GaussRule};

/// Smallest eigenvalue of `-8 Lap_g + R` (relative to the volume form) by inverse iteration.
pub fn yamabe_positivity_check(metric: &MetricField) -> Result<f64> {
    let op = ConformalLaplacian::assemble(metric)?;
    lowest_eigenvalue(&op)
}

pub(crate) fn lowest_eigenvalue(op: &ConformalLaplacian) -> Result<f64> {
    let start = vec![1.0; op.len()];
    // The mean potential bounds the lowest eigenvalue from above and is a
    // cheap shift; the pointwise minimum is always safe but can be very
    // negative where R has integrable singularities, which slows the iteration.
    let mean = op.potential.iter().sum::<f64>() / op.mass.iter().sum::<f64>();
    let min_density = op
        .potential
        .iter()
        .zip(&op.mass)
        .filter(|(_, m)| **m > 0.0)
        .map(|(p, m)| p / m)
        .fold(f64::INFINITY, f64::min);
    let cheap = (-mean).max(0.0) + 1.0;
    let safe = (-min_density).max(0.0) + 1.0;
    match smallest_generalized_eigen(&op.matrix, &op.mass, cheap, &start, 1e-9, 400) {
        Ok(out) if out.value > -cheap + 0.5 => Ok(out.value),
        _ => smallest_generalized_eigen(&op.matrix, &op.mass, safe, &start, 1e-9, 4000).map(|o| o.value),
    }
}

/// Transition profile of the parametrix cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CutoffProfile {
    /// Quintic smoothstep: twice differentiable, gentle.
    #[default]
    Quintic,
    /// `f(1-s) / (f(1-s) + f(s))` with `f(x) = exp(-1/x)`: infinitely flat at both ends.
    Flat,
}

/// Cutoff equal to 1 at the origin and 0 beyond `rho`. Returns the value and
/// the first two derivatives in `r`.
pub fn cutoff(profile: CutoffProfile, r: f64, rho: f64) -> (f64, f64, f64) {
    if r <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if r >= rho {
        return (0.0, 0.0, 0.0);
    }
    let s = r / rho;
    let (v, v1, v2) = match profile {
        CutoffProfile::Quintic => {
            let s2 = s * s;
            (
                1.0 - s2 * s * (10.0 - 15.0 * s + 6.0 * s2),
                -30.0 * s2 * (1.0 - s) * (1.0 - s),
                -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
            )
        }
        CutoffProfile::Flat => {
            let flat = |x: f64| -> (f64, f64, f64) {
                let f = (-1.0 / x).exp();
                let x2 = x * x;
                (f, f / x2, f * (1.0 / (x2 * x2) - 2.0 / (x2 * x)))
            };
            let (a, a1, a2) = flat(1.0 - s);
            let a1 = -a1;
            let (b, b1, b2) = flat(s);
            let d = a + b;
            let (d1, d2) = (a1 + b1, a2 + b2);
            let v1 = (a1 * d - a * d1) / (d * d);
            (a / d, v1, (a2 * d - a * d2) / (d * d) - 2.0 * d1 * v1 / d)
        }
    };
    (v, v1 / rho, v2 / (rho * rho))
}

/// Default parametrix radius in the tangent metric at the pole.
pub const PARAMETRIX_RADIUS: f64 = 0.6;

/// Parametrix radius: `radius` in the tangent metric at the pole, shrunk where the
/// `xi1` extent of its support would exceed a quarter turn.
pub fn parametrix_radius(spec: &MetricSpec, radius: f64) -> f64 {
    let (a, q) = spec.pole_scales();
    a.sqrt() * radius.min(FRAC_PI_2 * (q / a).sqrt())
}

/// Parametrix `chi(r)/r` with first and second partial derivatives in `(eta, xi1)`.
#[derive(Debug, Clone, Copy)]
pub struct Parametrix {
    pub a: f64,
    pub q: f64,
    pub radius: f64,
    pub profile: CutoffProfile,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Jet2 {
    pub v: f64,
    pub e: f64,
    pub x: f64,
    pub ee: f64,
    pub xx: f64,
}

impl Parametrix {
    pub fn new(spec: &MetricSpec, radius: f64, profile: CutoffProfile) -> Self {
        let (a, q) = spec.pole_scales();
        Self {
            a,
            q,
            radius: parametrix_radius(spec, radius),
            profile,
        }
    }

    pub fn jet(&self, eta: f64, xi: f64) -> Jet2 {
        let r = (self.a * eta * eta + self.q * xi * xi).sqrt();
        if r >= self.radius || r == 0.0 {
            return Jet2::default();
        }
        let (c, c1, c2) = cutoff(self.profile, r, self.radius);
        let p = c / r;
        let pr = c1 / r - c / (r * r);
        let prr = c2 / r - 2.0 * c1 / (r * r) + 2.0 * c / (r * r * r);
        let re = self.a * eta / r;
        let rx = self.q * xi / r;
        let ree = self.a / r - re * re / r;
        let rxx = self.q / r - rx * rx / r;
        Jet2 {
            v: p,
            e: pr * re,
            x: pr * rx,
            ee: prr * re * re + pr * ree,
            xx: prr * rx * rx + pr * rxx,
        }
    }

    pub fn value(&self, eta: f64, xi: f64) -> f64 {
        self.jet(eta, xi).v
    }
}

/// `Lap_g u` for a `xi2`-invariant `u` given its jet, at an interior chart point.
pub fn reduced_laplacian(spec: &MetricSpec, eta: f64, xi: f64, u: &Jet2) -> f64 {
    let r = spec.reduced(eta, xi);
    let h = 1e-4 * eta.min(FRAC_PI_2 - eta).min(0.05);
    let log_eta = |e: f64| {
        let s = spec.reduced(e, xi);
        (s.mu / s.a).ln()
    };
    let log_xi = |x: f64| {
        let s = spec.reduced(eta, x);
        (s.mu / s.q).ln()
    };
    let be = richardson_derivative(log_eta, eta, h) / r.a;
    let bx = if spec.is_left_invariant() {
        0.0
    } else {
        richardson_derivative(log_xi, xi, 1e-4) / r.q
    };
    u.ee / r.a + u.xx / r.q + be * u.e + bx * u.x
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GreenSettings {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Parametrix radius in the tangent metric at the pole.
    #[serde(default = "default_radius")]
    pub parametrix_radius: f64,
    #[serde(default)]
    pub cutoff: CutoffProfile,
}

fn default_radius() -> f64 {
    PARAMETRIX_RADIUS
}

impl Default for GreenSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 50_000,
            parametrix_radius: PARAMETRIX_RADIUS,
            cutoff: CutoffProfile::Quintic,
        }
    }
}

impl GreenSettings {
    /// A compact, infinitely flat parametrix (radius 0.4). The discrete
    /// remainder is then smooth on `d >= 0.5`, which is what second-derivative
    /// diagnostics there need; near the pole the default is more accurate.
    pub fn compact() -> Self {
        Self {
            parametrix_radius: 0.4,
            cutoff: CutoffProfile::Flat,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenResult {
    pub spec: MetricSpec,
    pub grid: HopfGrid,
    /// `G` at the nodes; the pole node holds 0 and is excluded from every check.
    pub field: ScalarField,
    /// Regular part `w = G - p` at the nodes.
    pub regular: ScalarField,
    pub pole: (usize, usize),
    /// Extrapolated `lim G d` at the pole.
    pub normalization: f64,
    /// Spread of the three ray extrapolations around `normalization`.
    pub normalization_error: f64,
    /// Relative residual of the linear solve.
    pub residual_norm: f64,
    /// Relative finite-difference residual of `L G` beyond `3 * parametrix_radius`.
    pub pde_residual: f64,
    pub parametrix_radius: f64,
    pub cutoff: CutoffProfile,
    pub lowest_eigenvalue: f64,
    pub iterations: usize,
    pub min_value: f64,
}

impl GreenResult {
    fn parametrix(&self) -> Parametrix {
        Parametrix {
            a: self.spec.pole_scales().0,
            q: self.spec.pole_scales().1,
            radius: self.parametrix_radius,
            profile: self.cutoff,
        }
    }

    /// `G` and its partial derivatives at an arbitrary chart point.
    pub fn eval(&self, eta: f64, xi: f64) -> (f64, f64, f64) {
        let (e, x) = HopfGrid::canonical(eta, xi);
        let p = self.parametrix().jet(e, x);
        let (w, we, wx) = self.regular.interpolate(e, x);
        (p.v + w, p.e + we, p.x + wx)
    }

    pub fn value(&self, eta: f64, xi: f64) -> f64 {
        self.eval(eta, xi).0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Solve for the Green's function of `metric` with pole at `(0, 0)`.
pub fn green_function(metric: &MetricField, settings: GreenSettings) -> Result<GreenResult> {
    let op = ConformalLaplacian::assemble(metric)?;
    let lambda = lowest_eigenvalue(&op)?;
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!(
            "conformal Laplacian is not positive (lowest eigenvalue {lambda:.6})"
        )));
    }
    let grid = &metric.grid;
    let spec = &metric.spec;
    if !(settings.parametrix_radius > 0.0) {
        return Err(Error::Parameter("parametrix radius must be positive".into()));
    }
    let par = Parametrix::new(spec, settings.parametrix_radius, settings.cutoff);
    let rhs = parametrix_source(metric, &par);
    let mut w = vec![0.0; op.len()];
    let out = pcg(
        &op.matrix,
        &rhs,
        &mut w,
        CgSettings {
            rel_tol: settings.rel_tol,
            max_iter: settings.max_iter,
        },
    )?;
    let regular = op.extend(&w);
    let pole = (0, grid.pole_column());
    let mut field = ScalarField::zeros(grid);
    for i in 0..grid.n_eta {
        for j in 0..grid.n_xi {
            if (i, j) == pole {
                continue;
            }
            let x = if i == grid.n_eta - 1 { 0.0 } else { grid.xi(j) };
            field.set(i, j, par.value(grid.eta(i), x) + regular.get(i, j));
        }
    }
    let mut min_value = f64::INFINITY;
    for (k, &v) in field.values.iter().enumerate() {
        if k != grid.index(pole.0, pole.1) {
            min_value = min_value.min(v);
        }
    }
    let mut result = GreenResult {
        spec: spec.clone(),
        grid: grid.clone(),
        field,
        regular,
        pole,
        normalization: f64::NAN,
        normalization_error: f64::NAN,
        residual_norm: out.relative_residual,
        pde_residual: f64::NAN,
        parametrix_radius: par.radius,
        cutoff: par.profile,
        lowest_eigenvalue: lambda,
        iterations: out.iterations,
        min_value,
    };
    if !(min_value > 0.0) {
        return Err(Error::Positivity(format!(
            "Green's function has a nonpositive node value {min_value:.4e}"
        )));
    }
    let (norm, spread) = extrapolate_normalization(&result);
    result.normalization = norm;
    result.normalization_error = spread;
    result.pde_residual = pde_residual(metric, &result);
    Ok(result)
}

/// `-int_cell (L p) dV` per unknown; cells overlapping the parametrix support are subdivided.
fn parametrix_source(metric: &MetricField, par: &Parametrix) -> Vec<f64> {
    let grid = &metric.grid;
    let spec = &metric.spec;
    let rule = GaussRule::new(3);
    let op_len = crate::operator::unknown_count(grid);
    let mut rhs = vec![0.0; op_len];
    let lp = |e: f64, x: f64| -> f64 {
        let j = par.jet(e, x);
        if j.v == 0.0 && j.e == 0.0 {
            return 0.0;
        }
        let lap = reduced_laplacian(spec, e, x, &j);
        -8.0 * lap + spec.scalar_curvature_at(e, x) * j.v
    };
    let reach_eta = par.radius / par.a.sqrt();
    let reach_xi = par.radius / par.q.sqrt();
    for i in 0..grid.n_eta - 1 {
        let (e0, e1) = grid.eta_cell(i);
        if e0 > reach_eta {
            break;
        }
        for j in 0..grid.n_xi {
            let (x0, x1) = grid.xi_cell(j);
            if x0 > reach_xi || x1 < -reach_xi {
                continue;
            }
            let near = grid.eta(i) * par.a.sqrt() < 4.0 * par.a.sqrt() * grid.d_eta()
                && grid.xi(j).abs() * par.q.sqrt() < 4.0 * par.q.sqrt() * grid.d_xi();
            let sub = if near { 8 } else { 2 };
            let mut acc = 0.0;
            for si in 0..sub {
                let a0 = e0 + (e1 - e0) * si as f64 / sub as f64;
                let a1 = e0 + (e1 - e0) * (si + 1) as f64 / sub as f64;
                for sj in 0..sub {
                    let b0 = x0 + (x1 - x0) * sj as f64 / sub as f64;
                    let b1 = x0 + (x1 - x0) * (sj + 1) as f64 / sub as f64;
                    for (e, we) in rule.on(a0, a1) {
                        for (x, wx) in rule.on(b0, b1) {
                            acc += we * wx * lp(e, x) * spec.reduced(e, x).mu;
                        }
                    }
                }
            }
            rhs[grid.index(i, j)] = -acc;
        }
    }
    rhs
}

/// `lim G d` by quadratic extrapolation of `G d` along three rays into the pole.
fn extrapolate_normalization(g: &GreenResult) -> (f64, f64) {
    let grid = &g.grid;
    let (a, q) = g.spec.pole_scales();
    let cell = (a.sqrt() * grid.d_eta()).max(q.sqrt() * grid.d_xi());
    let radii: Vec<f64> = (0..6).map(|k| (4.0 + 2.0 * k as f64) * cell).collect();
    let mut estimates = Vec::new();
    for alpha in [0.25 * PI, 0.5 * PI, 0.75 * PI] {
        let samples: Vec<(f64, f64)> = radii
            .iter()
            .map(|&s| {
                let eta = s * alpha.sin() / a.sqrt();
                let xi = s * alpha.cos() / q.sqrt();
                (s, g.value(eta, xi) * local_pole_distance(&g.spec, eta, xi))
            })
            .collect();
        estimates.push(quadratic_intercept(&samples));
    }
    let mean = estimates.iter().sum::<f64>() / 3.0;
    let spread = estimates.iter().map(|e| (e - mean).abs()).fold(0.0, f64::max);
    (mean, spread)
}

/// Least-squares quadratic through the samples, evaluated at 0.
pub(crate) fn quadratic_intercept(samples: &[(f64, f64)]) -> f64 {
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &(x, y) in samples {
        let row = nalgebra::Vector3::new(1.0, x, x * x);
        ata += row * row.transpose();
        atb += row * y;
    }
    ata.lu().solve(&atb).map(|c| c[0]).unwrap_or(f64::NAN)
}

const RESIDUAL_AXIS_BAND: f64 = 0.15;

/// Relative residual `|L G| / |R G|` by centred differences over rows at least
/// `RESIDUAL_AXIS_BAND` from both axes and beyond `3 * parametrix_radius` from the pole.
fn pde_residual(metric: &MetricField, g: &GreenResult) -> f64 {
    let local = pde_residual_field(metric, g);
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &(res, rg)) in local.iter().enumerate() {
        if res.is_nan() {
            continue;
        }
        let w = metric.cell_volume.values[k];
        num += w * res * res;
        den += w * rg * rg;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Nodewise `(L G, R G)`; NaN where the stencil is not evaluated.
pub fn pde_residual_field(metric: &MetricField, g: &GreenResult) -> Vec<(f64, f64)> {
    let grid = &metric.grid;
    let spec = &metric.spec;
    let de = grid.d_eta();
    let dx = grid.d_xi();
    let f = &g.field;
    let mut out = vec![(f64::NAN, f64::NAN); grid.len()];
    for i in 2..grid.n_eta - 2 {
        let eta = grid.eta(i);
        // the polar-coordinate stencils lose accuracy next to the axes
        if !(RESIDUAL_AXIS_BAND..=FRAC_PI_2 - RESIDUAL_AXIS_BAND).contains(&eta) {
            continue;
        }
        for j in 0..grid.n_xi {
            let xi = grid.xi(j);
            if local_pole_distance(spec, eta, xi) < 3.0 * g.parametrix_radius {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            let c = f.get(i, j);
            let jet = Jet2 {
                v: c,
                e: (f.ghost(ii + 1, jj) - f.ghost(ii - 1, jj)) / (2.0 * de),
                x: (f.ghost(ii, jj + 1) - f.ghost(ii, jj - 1)) / (2.0 * dx),
                ee: (f.ghost(ii + 1, jj) - 2.0 * c + f.ghost(ii - 1, jj)) / (de * de),
                xx: (f.ghost(ii, jj + 1) - 2.0 * c + f.ghost(ii, jj - 1)) / (dx * dx),
            };
            let lap = reduced_laplacian(spec, eta, xi, &jet);
            let rg = metric.potential_at(eta, xi) * c;
            out[grid.index(i, j)] = (-8.0 * lap + rg, rg);
        }
    }
    out
}

/// Exact Green's function of the unit round sphere, `1 / (2 sin(d/2))`.
pub fn round_green_exact(eta: f64, xi: f64) -> f64 {
    let d = (eta.cos() * xi.cos()).clamp(-1.0, 1.0).acos();
    1.0 / (2.0 * (0.5 * d).sin())
}

/// Relative spread `(max - min) / mean` of `(G_bar / G)^4 phi^4` over nodes beyond `exclusion`
/// from the pole, for `g_bar = phi^4 g`.
pub fn conformal_ratio_spread(
    base: &GreenResult,
    conformal: &GreenResult,
    factor: &dyn Fn(f64, f64) -> f64,
    exclusion: f64,
) -> (f64, f64) {
    let grid = &base.grid;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..grid.n_eta {
        for j in 0..grid.n_xi {
            let x = if i == grid.n_eta - 1 { 0.0 } else { grid.xi(j) };
            if local_pole_distance(&base.spec, grid.eta(i), x) < exclusion {
                continue;
            }
            let r = (conformal.field.get(i, j) / base.field.get(i, j) * factor(grid.eta(i), x)).powi(4);
            lo = lo.min(r);
            hi = hi.max(r);
            sum += r;
            count += 1;
        }
    }
    let mean = sum / count as f64;
    ((hi - lo) / mean, mean)
}

/// Probe annulus for the rescaled Green's profile, in coordinates `(eta/eps, xi1)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeAnnulus {
    pub inner: f64,
    pub outer: f64,
    pub radial_samples: usize,
    pub angular_samples: usize,
    /// Reference point `Q` in rescaled coordinates `(eta/eps, xi1)`.
    pub reference: (f64, f64),
}

impl Default for ProbeAnnulus {
    fn default() -> Self {
        Self {
            inner: 1.0,
            outer: 2.0,
            radial_samples: 9,
            angular_samples: 17,
            reference: (1.5, 0.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledProfile {
    pub eps: f64,
    /// `(rho, angle, G / G(Q))` samples.
    pub samples: Vec<(f64, f64, f64)>,
    pub sup_deviation: f64,
    pub reference_value: f64,
    pub green: GreenResult,
}

/// `G / G(Q)` for the rescaled Berger metric `eps^-2 g_eps` on a fixed annulus.
pub fn rescaled_green_profile(
    eps: f64,
    grid: &HopfGrid,
    annulus: ProbeAnnulus,
    settings: GreenSettings,
) -> Result<RescaledProfile> {
    let spec = MetricSpec::ScaledBerger {
        eps,
        scale: 1.0 / eps,
    };
    let metric = build_metric(&spec, grid)?;
    let (a, q) = spec.pole_scales();
    let exclusion = 3.0 * (a.sqrt() * grid.d_eta()).max(q.sqrt() * grid.d_xi());
    let (qe, qx) = annulus.reference;
    let (q_eta, q_xi) = (qe * eps, qx);
    if local_pole_distance(&spec, q_eta, q_xi) <= exclusion || annulus.inner * 1.0 <= exclusion {
        return Err(Error::Parameter(format!(
            "reference point or annulus lies inside the pole exclusion radius {exclusion:.3}"
        )));
    }
    // points past the far axis are fine (the chart continues by reflection),
    // but the annulus must not wrap around in xi1 or reach the antipodal circle
    if annulus.outer * eps >= PI || annulus.outer >= PI {
        return Err(Error::Parameter("annulus leaves the coordinate chart".into()));
    }
    let green = green_function(&metric, settings)?;
    let gq = green.value(q_eta, q_xi);
    let mut samples = Vec::new();
    let mut sup: f64 = 0.0;
    for ir in 0..annulus.radial_samples {
        let rho = annulus.inner
            + (annulus.outer - annulus.inner) * ir as f64 / (annulus.radial_samples - 1).max(1) as f64;
        for ia in 0..annulus.angular_samples {
            let ang = PI * ia as f64 / (annulus.angular_samples - 1).max(1) as f64;
            let eta_hat = rho * ang.sin();
            let xi = rho * ang.cos();
            let v = green.value(eta_hat * eps, xi) / gq;
            sup = sup.max((v - 1.0).abs());
            samples.push((rho, ang, v));
        }
    }
    Ok(RescaledProfile {
        eps,
        samples,
        sup_deviation: sup,
        reference_value: gq,
        green,
    })
}
