//! Distance spheres around the pole in the blowup `h = G^4 g`, their mean
//! curvature and Hawking mass, horizon detection and the consistency check.
//!
//! A `xi2`-invariant surface is the orbit of a curve in the orbit space
//! `(eta, xi1)` with metric `a deta^2 + q dxi1^2`. The distance sphere of radius
//! `r` is the orbit of the geodesic circle of radius `r` about the pole, traced
//! by unit-speed geodesics shot from the pole at angle `alpha in (0, pi)`.
//! Along each ray a Jacobi field `j'' + K j = 0` measures the front's line
//! element `j dalpha` and its geodesic curvature `j'/j`; the mean curvature in
//! `g` adds the orbit term `d_nu log ell`, and the conformal law
//! `H_h = G^-2 H_g + 4 G^-3 d_nu G` gives the mean curvature in `h`.
//!
//! Sign convention: `nu` points away from the pole, towards the compact side of
//! the blowup. Round spheres near infinity of a flat end then have `H_h < 0`,
//! and a level with `H_h > 0` is a trapped barrier.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::distance::DistanceField;
use crate::error::{Error, Result};
use crate::green::GreenResult;
use crate::curvature::{MetricJet, ScalarJet};
use crate::imcf::hawking_mass;
use crate::metric::{MetricField, MetricSpec};
use crate::quadrature::{richardson_derivative, richardson_second_derivative, GaussRule};

pub const SIGN_CONVENTION: &str =
    "normal points away from the pole; H_h < 0 on large coordinate spheres of a flat end; H_h > 0 marks a trapped barrier";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSample {
    pub r: f64,
    pub area_g: f64,
    pub area_h: f64,
    /// `dA_g`-weighted mean of the mean curvature in g.
    pub h_g: f64,
    /// `dA_h`-weighted mean of the mean curvature in h.
    pub h_h: f64,
    pub h_h_min: f64,
    pub h_h_max: f64,
    pub hawking_mass_h: f64,
    /// First variation `int H_h G^2 dA_h`, equal to `d area_h / dr`.
    pub area_h_rate: f64,
    pub skipped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<String>,
}

impl LevelSample {
    fn skipped(r: f64, reason: String) -> Self {
        Self {
            r,
            area_g: f64::NAN,
            area_h: f64::NAN,
            h_g: f64::NAN,
            h_h: f64::NAN,
            h_h_min: f64::NAN,
            h_h_max: f64::NAN,
            hawking_mass_h: f64::NAN,
            area_h_rate: f64::NAN,
            skipped: true,
            skip_reason: Some(reason),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceFamilyReport {
    pub metric: String,
    pub levels: Vec<LevelSample>,
    pub r_min: f64,
    pub r_max: f64,
    pub rays: usize,
    pub normalization: f64,
    pub convention: String,
}

impl SurfaceFamilyReport {
    pub fn valid_levels(&self) -> impl Iterator<Item = &LevelSample> {
        self.levels.iter().filter(|l| !l.skipped)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSettings {
    /// Geodesic rays (Gauss-Legendre nodes in the shooting angle).
    pub rays: usize,
    /// Maximum integration step as a fraction of the largest level.
    pub max_step_fraction: f64,
    /// Minimum `|grad d|` of the fast-marching distance on a front.
    pub min_gradient: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            rays: 64,
            max_step_fraction: 1.0 / 1500.0,
            min_gradient: 0.5,
        }
    }
}

/// Largest radius that stays clear of the far axis and of the shortest
/// closed orbit-space loop through the pole, with a 5% margin.
pub fn default_r_max(spec: &MetricSpec) -> f64 {
    let (a, q) = spec.pole_scales();
    0.95 * (PI * q.sqrt()).min(FRAC_PI_2 * a.sqrt())
}

/// `count` levels spaced geometrically in `[r_max * ratio, r_max]`.
pub fn geometric_levels(r_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    let lo = r_max * ratio;
    (0..count)
        .map(|k| lo * (r_max / lo).powf(k as f64 / (count - 1).max(1) as f64))
        .collect()
}

/// Derivatives of the orbit-space metric needed by the geodesic and Jacobi equations.
struct OrbitGeometry<'a> {
    spec: &'a MetricSpec,
    xi_dependent: bool,
}

struct LocalFrame {
    a: f64,
    q: f64,
    a_e: f64,
    a_x: f64,
    q_e: f64,
    q_x: f64,
    curvature: f64,
}

impl<'a> OrbitGeometry<'a> {
    fn new(spec: &'a MetricSpec) -> Self {
        Self {
            spec,
            xi_dependent: !spec.is_left_invariant(),
        }
    }

    fn at(&self, eta: f64, xi: f64) -> LocalFrame {
        let h = 1e-3;
        let a_of = |e: f64, x: f64| self.spec.reduced(e, x).a;
        let q_of = |e: f64, x: f64| self.spec.reduced(e, x).q;
        let r = self.spec.reduced(eta, xi);
        let a_e = richardson_derivative(|e| a_of(e, xi), eta, h);
        let q_e = richardson_derivative(|e| q_of(e, xi), eta, h);
        let q_ee = richardson_second_derivative(|e| q_of(e, xi), eta, h);
        let (a_x, q_x, a_xx) = if self.xi_dependent {
            (
                richardson_derivative(|x| a_of(eta, x), xi, h),
                richardson_derivative(|x| q_of(eta, x), xi, h),
                richardson_second_derivative(|x| a_of(eta, x), xi, h),
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        // Brioschi formula for an orthogonal metric E du^2 + G dv^2 with E = a, G = q
        let w = (r.a * r.q).sqrt();
        let w_e = (a_e * r.q + r.a * q_e) / (2.0 * w);
        let w_x = (a_x * r.q + r.a * q_x) / (2.0 * w);
        let t1 = q_ee / w - q_e * w_e / (w * w);
        let t2 = a_xx / w - a_x * w_x / (w * w);
        let curvature = -(t1 + t2) / (2.0 * w);
        LocalFrame {
            a: r.a,
            q: r.q,
            a_e,
            a_x,
            q_e,
            q_x,
            curvature,
        }
    }

    /// Right side of the geodesic + Jacobi system; state `(eta, xi, eta', xi', j, j')`.
    fn rhs(&self, s: &[f64; 6]) -> [f64; 6] {
        let f = self.at(s[0], s[1]);
        let (ue, ux) = (s[2], s[3]);
        let g_eee = f.a_e / (2.0 * f.a);
        let g_eex = f.a_x / (2.0 * f.a);
        let g_exx = -f.q_e / (2.0 * f.a);
        let g_xee = -f.a_x / (2.0 * f.q);
        let g_xex = f.q_e / (2.0 * f.q);
        let g_xxx = f.q_x / (2.0 * f.q);
        [
            ue,
            ux,
            -(g_eee * ue * ue + 2.0 * g_eex * ue * ux + g_exx * ux * ux),
            -(g_xee * ue * ue + 2.0 * g_xex * ue * ux + g_xxx * ux * ux),
            s[5],
            -f.curvature * s[4],
        ]
    }

    fn rk4(&self, s: &[f64; 6], h: f64) -> [f64; 6] {
        let add = |a: &[f64; 6], b: &[f64; 6], t: f64| -> [f64; 6] {
            let mut o = *a;
            for k in 0..6 {
                o[k] += t * b[k];
            }
            o
        };
        let k1 = self.rhs(s);
        let k2 = self.rhs(&add(s, &k1, 0.5 * h));
        let k3 = self.rhs(&add(s, &k2, 0.5 * h));
        let k4 = self.rhs(&add(s, &k3, h));
        let mut o = *s;
        for k in 0..6 {
            o[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        o
    }
}

/// Front point of one ray at one level.
#[derive(Debug, Clone, Copy)]
struct FrontPoint {
    state: [f64; 6],
    valid: bool,
}

fn trace_ray(geom: &OrbitGeometry, alpha: f64, levels: &[f64], max_step: f64) -> Vec<FrontPoint> {
    let (a0, q0) = geom.spec.pole_scales();
    let mut s = [0.0, 0.0, alpha.sin() / a0.sqrt(), alpha.cos() / q0.sqrt(), 0.0, 1.0];
    let mut pos = 0.0;
    let mut alive = true;
    let mut out = Vec::with_capacity(levels.len());
    for &r in levels {
        while alive && pos < r {
            let h = max_step.min(r - pos);
            s = geom.rk4(&s, h);
            pos += h;
            if !(s[0] > 0.0 && s[0] < FRAC_PI_2 - 1e-6) || s[4] <= 0.0 || !s.iter().all(|v| v.is_finite()) {
                alive = false;
            }
        }
        out.push(FrontPoint { state: s, valid: alive });
    }
    out
}

/// Sweep the distance spheres `levels` (ascending) in the blowup of `metric`.
pub fn blowup_scan(
    metric: &MetricField,
    green: &GreenResult,
    distance: &DistanceField,
    levels: &[f64],
    settings: &ScanSettings,
) -> Result<SurfaceFamilyReport> {
    if levels.is_empty() {
        return Err(Error::Parameter("no levels requested".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels[0] <= 0.0 {
        return Err(Error::Parameter("levels must be positive and strictly increasing".into()));
    }
    let spec = &metric.spec;
    let grid = &metric.grid;
    let geom = OrbitGeometry::new(spec);
    let rule = GaussRule::new(settings.rays);
    let alphas: Vec<(f64, f64)> = rule.on(0.0, PI).collect();
    let r_top = *levels.last().unwrap();
    let max_step = r_top * settings.max_step_fraction;

    let fronts: Vec<Vec<FrontPoint>> = alphas
        .iter()
        .map(|&(alpha, _)| trace_ray(&geom, alpha, levels, max_step))
        .collect();

    let (a0, q0) = spec.pole_scales();
    let cell = (a0.sqrt() * grid.d_eta()).max(q0.sqrt() * grid.d_xi());

    let mut samples = Vec::with_capacity(levels.len());
    'level: for (k, &r) in levels.iter().enumerate() {
        let mut area_g = 0.0;
        let mut area_h = 0.0;
        let mut hg_int = 0.0;
        let mut hh_int = 0.0;
        let mut hh2_int = 0.0;
        let mut rate = 0.0;
        let mut hh_min = f64::INFINITY;
        let mut hh_max = f64::NEG_INFINITY;
        for (ray, &(_, w)) in alphas.iter().enumerate() {
            let fp = fronts[ray][k];
            if !fp.valid {
                samples.push(LevelSample::skipped(
                    r,
                    "front reached an axis or a conjugate point".into(),
                ));
                continue 'level;
            }
            let [eta, xi, ue, ux, j, jp] = fp.state;
            // cut locus and gradient checks against the fast-marching distance
            if r > distance.init_radius {
                let (d, de, dx) = distance.distance.interpolate(eta, xi);
                if d < r - (2.0 * cell + 0.02 * r) {
                    samples.push(LevelSample::skipped(r, format!("beyond the cut locus (d = {d:.4})")));
                    continue 'level;
                }
                let red = spec.reduced(eta, xi);
                let grad = (de * de / red.a + dx * dx / red.q).sqrt();
                if grad < settings.min_gradient {
                    samples.push(LevelSample::skipped(r, format!("|grad d| = {grad:.3} on the front")));
                    continue 'level;
                }
            }
            let red = spec.reduced(eta, xi);
            let step = 0.02 * eta.min(FRAC_PI_2 - eta).min(0.5);
            let ell_e = richardson_derivative(|e| spec.reduced(e, xi).ell.ln(), eta, step);
            let ell_x = if geom.xi_dependent {
                richardson_derivative(|x| spec.reduced(eta, x).ell.ln(), xi, 1e-3)
            } else {
                0.0
            };
            let h_g = jp / j + ell_e * ue + ell_x * ux;
            let (g, g_e, g_x) = green.eval(eta, xi);
            if !(g > 0.0) {
                return Err(Error::Positivity(format!(
                    "Green's function is not positive on the level r = {r}"
                )));
            }
            let dnu_g = g_e * ue + g_x * ux;
            let h_h = h_g / (g * g) + 4.0 * dnu_g / (g * g * g);
            let da_g = red.ell * j * w;
            let g4 = g.powi(4);
            area_g += da_g;
            area_h += g4 * da_g;
            hg_int += h_g * da_g;
            hh_int += h_h * g4 * da_g;
            hh2_int += h_h * h_h * g4 * da_g;
            rate += h_h * g * g * g4 * da_g;
            hh_min = hh_min.min(h_h);
            hh_max = hh_max.max(h_h);
        }
        samples.push(LevelSample {
            r,
            area_g,
            area_h,
            h_g: hg_int / area_g,
            h_h: hh_int / area_h,
            h_h_min: hh_min,
            h_h_max: hh_max,
            hawking_mass_h: hawking_mass(area_h, hh2_int),
            area_h_rate: rate,
            skipped: false,
            skip_reason: None,
        });
    }
    for l in samples.iter().filter(|l| l.skipped) {
        log::debug!("level r = {:.5} skipped: {}", l.r, l.skip_reason.as_deref().unwrap_or(""));
    }
    Ok(SurfaceFamilyReport {
        metric: spec.label(),
        levels: samples,
        r_min: levels[0],
        r_max: r_top,
        rays: settings.rays,
        normalization: green.normalization,
        convention: SIGN_CONVENTION.to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupCurvature {
    pub sectional_min: f64,
    pub sectional_max: f64,
    pub scalar_max_abs: f64,
    pub samples: usize,
}

impl BlowupCurvature {
    pub fn max_abs_sectional(&self) -> f64 {
        self.sectional_min.abs().max(self.sectional_max.abs())
    }
}

/// Sectional curvature range of `G^4 g` over the grid nodes whose distance to
/// the pole lies in `[d_lo, d_hi]`, with nodal fourth-order differences of `G` and
/// nodes within [`AXIS_BAND`] of `eta = 0` and [`FAR_AXIS_BAND`] of `eta = pi/2`
/// left out.
pub const AXIS_BAND: f64 = 0.15;
/// Excluded band at `eta = pi/2`, where `q -> 0` amplifies `xi` differences.
pub const FAR_AXIS_BAND: f64 = 0.5;

pub fn blowup_curvature(
    metric: &MetricField,
    green: &GreenResult,
    distance: &DistanceField,
    d_lo: f64,
    d_hi: f64,
) -> Result<BlowupCurvature> {
    let grid = &metric.grid;
    let (he, hx) = (grid.d_eta(), grid.d_xi());
    let g = &green.field;
    let mut out = BlowupCurvature {
        sectional_min: f64::INFINITY,
        sectional_max: f64::NEG_INFINITY,
        scalar_max_abs: 0.0,
        samples: 0,
    };
    for i in 2..grid.n_eta - 3 {
        let eta = grid.eta(i);
        if !(AXIS_BAND..=FRAC_PI_2 - FAR_AXIS_BAND).contains(&eta) {
            continue;
        }
        for j in 0..grid.n_xi {
            let d = distance.distance.get(i, j);
            if d < d_lo || d > d_hi {
                continue;
            }
            // fourth-order central stencils on the nodal values
            let at = |di: isize, dj: isize| g.get((i as isize + di) as usize, grid.wrap(j as isize + dj));
            let d1 = |f: &dyn Fn(isize) -> f64, h: f64| (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h);
            let d2 = |f: &dyn Fn(isize) -> f64, h: f64| {
                (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) / (12.0 * h * h)
            };
            let ex = d1(&|di| d1(&|dj| at(di, dj), hx), he);
            let jet = ScalarJet {
                v: at(0, 0),
                d: [d1(&|di| at(di, 0), he), d1(&|dj| at(0, dj), hx)],
                dd: [[d2(&|di| at(di, 0), he), ex], [ex, d2(&|dj| at(0, dj), hx)]],
            };
            let sample = MetricJet::from_spec(&metric.spec, grid.eta(i), grid.xi(j), 1e-4)
                .conformal(&jet)
                .ricci_sample()?;
            out.sectional_min = out.sectional_min.min(sample.sectional_min);
            out.sectional_max = out.sectional_max.max(sample.sectional_max);
            out.scalar_max_abs = out.scalar_max_abs.max(sample.scalar.abs());
            out.samples += 1;
        }
    }
    if out.samples == 0 {
        return Err(Error::InsufficientData(format!("no nodes with distance in [{d_lo}, {d_hi}]")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonVerdict {
    pub detected: bool,
    /// Consecutive valid levels `(r1, r2)` across which `H_h` changes sign.
    pub bracket: Option<(f64, f64)>,
    /// Largest `H_h` over the valid levels.
    pub margin: f64,
    /// A level with `H_h > 0` pointwise exists together with a level with `H_h < 0` pointwise.
    pub strict_barrier: bool,
}

/// Detect a sign change of the mean curvature in h across consecutive valid levels.
///
/// The first sign change from negative to positive is returned; it is the
/// tightest bracket the sweep can give around the outermost crossing seen from infinity.
pub fn horizon_indicator(report: &SurfaceFamilyReport) -> Result<HorizonVerdict> {
    let valid: Vec<&LevelSample> = report.valid_levels().collect();
    if valid.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} valid levels in the sweep, need at least 2",
            valid.len()
        )));
    }
    let margin = valid.iter().map(|l| l.h_h).fold(f64::NEG_INFINITY, f64::max);
    let bracket = valid
        .windows(2)
        .find(|w| w[0].h_h * w[1].h_h < 0.0)
        .map(|w| (w[0].r, w[1].r));
    let trapped = valid.iter().any(|l| l.h_h_min > 0.0);
    let untrapped = valid.iter().any(|l| l.h_h_max < 0.0);
    Ok(HorizonVerdict {
        detected: bracket.is_some(),
        bracket,
        margin,
        strict_barrier: trapped && untrapped,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencySample {
    pub metric: MetricSpec,
    pub vmax_lower_bound: f64,
    pub verdict: HorizonVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub metric: String,
    pub vmax_lower_bound: f64,
    pub hypothesis_met: bool,
    pub detected: bool,
    pub contradiction: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub threshold: f64,
    pub rows: Vec<ConsistencyRow>,
    pub contradictions: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.contradictions.is_empty()
    }
}

/// Flag every sample whose certified volume bound meets `pi^2` while a horizon was detected.
pub fn theorem_consistency(samples: &[ConsistencySample]) -> ConsistencyReport {
    let threshold = PI * PI;
    let rows: Vec<ConsistencyRow> = samples
        .iter()
        .map(|s| {
            let met = s.vmax_lower_bound >= threshold;
            ConsistencyRow {
                metric: s.metric.label(),
                vmax_lower_bound: s.vmax_lower_bound,
                hypothesis_met: met,
                detected: s.verdict.detected,
                contradiction: met && s.verdict.detected,
            }
        })
        .collect();
    let contradictions = rows.iter().filter(|r| r.contradiction).cloned().collect();
    ConsistencyReport {
        threshold,
        rows,
        contradictions,
    }
}
