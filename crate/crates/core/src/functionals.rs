//! Variational quantities: the Yamabe quotient on the reduced grid, the Ilias
//! inequality, the coarea-reduced Sobolev quotient `J[f]` on the Schwarzschild
//! quotient model, its optimizer `f0`, and Euler-Lagrange residuals of radial
//! profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::curvature::curvature;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::imcf::RadialModel;
use crate::linalg::{dot, pcg_solve, CgSettings};
use crate::metric::MetricField;
use crate::operator::ConformalLaplacian;
use crate::quadrature::GaussRule;

/// `(int 8|grad v|^2 + R v^2 dV) / (int v^6 dV)^{1/3}` for a `xi2`-invariant `v`.
pub fn yamabe_quotient(metric: &MetricField, v: &ScalarField) -> Result<f64> {
    let op = ConformalLaplacian::assemble(metric)?;
    quotient_of(&op, &op.restrict(v))
}

fn quotient_of(op: &ConformalLaplacian, u: &[f64]) -> Result<f64> {
    let p6 = op.power_integral(u, 6);
    if !(p6 > 0.0) {
        return Err(Error::Domain("test function vanishes identically".into()));
    }
    Ok(op.energy(u) / p6.cbrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientReport {
    pub functional: String,
    pub value: f64,
    pub normalization: String,
    pub error_estimate: f64,
    pub iterations: usize,
    pub starts: usize,
    pub caveat: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinimizeSettings {
    pub max_iter: usize,
    pub rel_decrease: f64,
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for MinimizeSettings {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_decrease: 1e-6,
            random_starts: 3,
            seed: 7,
        }
    }
}

/// Upper estimate of the Yamabe constant within the `xi2`-invariant class.
///
/// Each start runs gradient descent preconditioned by the conformal Laplacian
/// itself: the full step is the fixed-point map `u -> c L^{-1}(u^5)`, shortened
/// by backtracking until the quotient decreases.
pub fn yamabe_minimize(metric: &MetricField, settings: MinimizeSettings) -> Result<QuotientReport> {
    let op = ConformalLaplacian::assemble(metric)?;
    let grid = &metric.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut starts = vec![vec![1.0; op.len()]];
    for _ in 0..settings.random_starts {
        let terms: Vec<(f64, f64, i32, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(0..4) as f64 * 2.0,
                    rng.gen_range(0..3),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let field = ScalarField::from_fn(grid, |eta, xi| {
            1.0 + terms
                .iter()
                .map(|&(a, k, l, ph)| a * (k * eta).cos() * (l as f64 * xi + ph).cos())
                .sum::<f64>()
        });
        starts.push(op.restrict(&field));
    }
    let mut best = f64::INFINITY;
    let mut total_iter = 0;
    let mut last_change = 0.0;
    for u in starts {
        let (value, iters, change) = descend(&op, u, settings)?;
        total_iter += iters;
        if value < best {
            best = value;
            last_change = change;
        }
    }
    Ok(QuotientReport {
        functional: "yamabe".into(),
        value: best,
        normalization: "int v^6 dV = 1".into(),
        error_estimate: last_change * best,
        iterations: total_iter,
        starts: settings.random_starts + 1,
        caveat: "upper bound over xi2-invariant test functions".into(),
    })
}

fn descend(op: &ConformalLaplacian, mut u: Vec<f64>, settings: MinimizeSettings) -> Result<(f64, usize, f64)> {
    let cg = CgSettings {
        rel_tol: 1e-8,
        max_iter: 50_000,
    };
    let mut q = quotient_of(op, &u)?;
    let mut change = 0.0;
    for it in 0..settings.max_iter {
        let p6 = op.power_integral(&u, 6);
        let rhs: Vec<f64> = u.iter().zip(&op.mass).map(|(v, m)| m * v.powi(5)).collect();
        let mut w = u.clone();
        // inexact direction; backtracking below enforces descent
        let solve = pcg_solve(&op.matrix, &rhs, &mut w, cg);
        if !solve.relative_residual.is_finite() || solve.relative_residual > 1e-4 {
            return Err(Error::Numerical(format!(
                "descent direction solve failed at relative residual {:.3e}",
                solve.relative_residual
            )));
        }
        // scale so that the full step is the normalized fixed-point update
        let c = op.energy(&u) / p6;
        let dir: Vec<f64> = w.iter().zip(&u).map(|(w, u)| c * w - u).collect();
        if dot(&dir, &dir).sqrt() <= 1e-14 * dot(&u, &u).sqrt() {
            return Ok((q, it, 0.0));
        }
        let mut tau = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = u.iter().zip(&dir).map(|(u, d)| (u + tau * d).abs()).collect();
            let qt = quotient_of(op, &trial)?;
            if !qt.is_finite() {
                return Err(Error::Numerical("Yamabe quotient became non-finite".into()));
            }
            if qt <= q {
                accepted = Some((trial, qt));
                break;
            }
            tau *= 0.5;
        }
        let Some((next, qn)) = accepted else {
            return Ok((q, it, 0.0));
        };
        change = (q - qn) / q.abs();
        let s = op.power_integral(&next, 6).powf(1.0 / 6.0);
        u = next.into_iter().map(|v| v / s).collect();
        q = qn;
        if change < settings.rel_decrease {
            return Ok((q, it + 1, change));
        }
    }
    Ok((q, settings.max_iter, change))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IliasSides {
    pub lhs: f64,
    pub rhs: f64,
}

/// Both sides of `int 8|grad v|^2 + 6 v^2 >= 6 Vol^{2/3} (int v^6)^{1/3}` for a
/// metric with `Ric >= 2g`.
pub fn ilias_check(metric: &MetricField, v: &ScalarField) -> Result<IliasSides> {
    let min_ricci = curvature(metric)?.min_ricci.min(metric.min_ricci());
    if min_ricci < 2.0 * (1.0 - 1e-6) {
        return Err(Error::Precondition(format!(
            "Ric >= 2g is not certified (minimum eigenvalue {min_ricci})"
        )));
    }
    let op = ConformalLaplacian::assemble(metric)?;
    let u = op.restrict(v);
    let p6 = op.power_integral(&u, 6);
    if !(p6 > 0.0) {
        return Err(Error::Domain("test function vanishes identically".into()));
    }
    let vol: f64 = op.mass.iter().sum();
    Ok(IliasSides {
        lhs: 8.0 * op.dirichlet(&u) + 6.0 * op.power_integral(&u, 2),
        rhs: 6.0 * vol.powf(2.0 / 3.0) * p6.cbrt(),
    })
}

/// `f0(t) = (2 e^t - e^{t/2})^{-1/2}`.
pub fn f0(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("f0 needs t >= 0, got {t}")));
    }
    Ok(f0_unchecked(t))
}

fn f0_unchecked(t: f64) -> f64 {
    (2.0 * t.exp() - (0.5 * t).exp()).powf(-0.5)
}

/// Radial profile `f(t)`, `t >= 0`, for the reduced quotient.
pub trait Profile: Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct F0;

impl Profile for F0 {
    fn value(&self, t: f64) -> f64 {
        f0_unchecked(t)
    }
    fn derivative(&self, t: f64) -> f64 {
        let e = t.exp();
        let h = (0.5 * t).exp();
        -0.5 * (2.0 * e - h).powf(-1.5) * (2.0 * e - 0.5 * h)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Scaled<P>(pub f64, pub P);

impl<P: Profile> Profile for Scaled<P> {
    fn value(&self, t: f64) -> f64 {
        self.0 * self.1.value(t)
    }
    fn derivative(&self, t: f64) -> f64 {
        self.0 * self.1.derivative(t)
    }
}

/// `f0(t) + amplitude e^{-t} sum_k b_k sin(k t + phase_k)`.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub amplitude: f64,
    pub modes: Vec<(f64, f64, f64)>,
}

impl Perturbed {
    pub fn single(amplitude: f64) -> Self {
        Self {
            amplitude,
            modes: vec![(1.0, 1.0, 0.0)],
        }
    }

    pub fn random(amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (1..=3)
            .map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        Self { amplitude, modes }
    }
}

impl Profile for Perturbed {
    fn value(&self, t: f64) -> f64 {
        let s: f64 = self.modes.iter().map(|&(k, b, p)| b * (k * t + p).sin()).sum();
        f0_unchecked(t) + self.amplitude * (-t).exp() * s
    }
    fn derivative(&self, t: f64) -> f64 {
        let s: f64 = self.modes.iter().map(|&(k, b, p)| b * (k * t + p).sin()).sum();
        let ds: f64 = self.modes.iter().map(|&(k, b, p)| b * k * (k * t + p).cos()).sum();
        F0.derivative(t) + self.amplitude * (-t).exp() * (ds - s)
    }
}

/// Profile sampled on an increasing grid, interpolated by cubic Hermite
/// segments with centered slopes.
#[derive(Debug, Clone)]
pub struct SampledProfile {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledProfile {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() || t.len() < 4 {
            return Err(Error::Parameter("profile needs at least 4 matching samples".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) || t[0] != 0.0 {
            return Err(Error::Parameter("profile grid must start at 0 and increase".into()));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(Error::Domain("profile vanishes identically".into()));
        }
        Ok(Self { t, values })
    }

    pub fn from_profile(p: &dyn Profile, t_max: f64, samples: usize) -> Result<Self> {
        let t: Vec<f64> = (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect();
        let values = t.iter().map(|&t| p.value(t)).collect();
        Self::new(t, values)
    }

    fn slope(&self, k: usize) -> f64 {
        let n = self.t.len();
        let (a, b) = match k {
            0 => (0, 1),
            k if k == n - 1 => (n - 2, n - 1),
            k => (k - 1, k + 1),
        };
        (self.values[b] - self.values[a]) / (self.t[b] - self.t[a])
    }

    fn segment(&self, t: f64) -> (usize, f64, f64) {
        let n = self.t.len();
        let k = match self.t.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(k) => k.min(n - 2),
            Err(k) => k.clamp(1, n - 1) - 1,
        };
        let h = self.t[k + 1] - self.t[k];
        (k, h, (t - self.t[k]) / h)
    }

    /// Decay rate `lambda` in `f ~ e^{-lambda t}` fitted on the last unit of the grid.
    pub fn tail_rate(&self) -> f64 {
        let n = self.t.len();
        let t1 = self.t[n - 1];
        let k0 = self.t.iter().position(|&t| t >= t1 - 1.0).unwrap_or(0).min(n - 2);
        let (a, b) = (self.values[k0].abs(), self.values[n - 1].abs());
        if a == 0.0 || b == 0.0 {
            return f64::INFINITY;
        }
        (a / b).ln() / (t1 - self.t[k0])
    }
}

impl Profile for SampledProfile {
    fn value(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t >= self.t[n - 1] {
            let lam = self.tail_rate();
            return self.values[n - 1] * (-lam * (t - self.t[n - 1])).exp();
        }
        let (k, h, s) = self.segment(t);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slope(k) * h, self.slope(k + 1) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }
    fn derivative(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t >= self.t[n - 1] {
            return -self.tail_rate() * self.value(t);
        }
        let (k, h, s) = self.segment(t);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slope(k) * h, self.slope(k + 1) * h);
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1) / h
    }
}

/// Quadrature for the pair `int f'^2 w_num dt`, `int f^6 w_den dt` over
/// `[0, inf)`, with `t = s^2` on `[0, t_max]` and an exponential tail beyond.
/// The weights are assumed to grow like `e^{t/2}` and `e^{3t/2}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReducedQuadrature {
    pub t_max: f64,
    pub panels: usize,
    pub order: usize,
}

impl Default for ReducedQuadrature {
    fn default() -> Self {
        Self {
            t_max: 40.0,
            panels: 400,
            order: 8,
        }
    }
}

const NUM_GROWTH: f64 = 0.5;
const DEN_GROWTH: f64 = 1.5;

impl ReducedQuadrature {
    pub fn refined(&self) -> Self {
        Self {
            panels: 2 * self.panels,
            ..*self
        }
    }

    pub fn integrate_pair(
        &self,
        f: &dyn Profile,
        w_num: impl Fn(f64) -> f64,
        w_den: impl Fn(f64) -> f64,
    ) -> Result<(f64, f64)> {
        if self.t_max < 40.0 || self.panels == 0 {
            return Err(Error::Parameter("reduced quadrature needs t_max >= 40".into()));
        }
        let t1 = self.t_max;
        let rate = decay_rate(f, t1)?;
        let rule = GaussRule::new(self.order);
        let s1 = t1.sqrt();
        let h = s1 / self.panels as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..self.panels {
            for (s, w) in rule.on(k as f64 * h, (k + 1) as f64 * h) {
                let t = s * s;
                let jac = 2.0 * s * w;
                num += jac * f.derivative(t).powi(2) * w_num(t);
                den += jac * f.value(t).powi(6) * w_den(t);
            }
        }
        num += f.derivative(t1).powi(2) * w_num(t1) / (2.0 * rate - NUM_GROWTH);
        den += f.value(t1).powi(6) * w_den(t1) / (6.0 * rate - DEN_GROWTH);
        if !(num.is_finite() && den.is_finite() && den > 0.0) {
            return Err(Error::Domain("reduced integrals are not finite and positive".into()));
        }
        Ok((num, den))
    }
}

/// Decay rate of `f` near `t1`; rejects profiles whose integrals diverge.
fn decay_rate(f: &dyn Profile, t1: f64) -> Result<f64> {
    let (a, b) = (f.value(t1 - 1.0).abs(), f.value(t1).abs());
    let rate = if b == 0.0 { f64::INFINITY } else { (a / b).ln() };
    if !(rate > 0.25 + 1e-3) {
        return Err(Error::Domain(format!(
            "profile decays at rate {rate:.4}; the reduced integrals diverge below 1/4"
        )));
    }
    Ok(rate.min(50.0))
}

/// Weights of the reduced quotient on the Schwarzschild quotient model.
pub fn reduced_weights(t: f64) -> (f64, f64) {
    let e = t.exp();
    let h = (0.5 * t).exp();
    // e^t - e^{t/2} = e^{t/2} (e^{t/2} - 1), written to avoid cancellation at small t
    let d = h * (0.5 * t).exp_m1();
    (d.sqrt(), e * e / d.sqrt())
}

/// `J[f] = (16 pi)^{2/3} int f'^2 (e^t - e^{t/2})^{1/2} dt /
/// (int f^6 e^{2t} (e^t - e^{t/2})^{-1/2} dt)^{1/3}`.
pub fn reduced_quotient_j(f: &dyn Profile, quad: &ReducedQuadrature) -> Result<f64> {
    let (num, den) = quad.integrate_pair(f, |t| reduced_weights(t).0, |t| reduced_weights(t).1)?;
    Ok((16.0 * PI).powf(2.0 / 3.0) * num / den.cbrt())
}

/// `J` together with the change under one panel doubling.
pub fn reduced_quotient_report(f: &dyn Profile, quad: &ReducedQuadrature) -> Result<QuotientReport> {
    let coarse = reduced_quotient_j(f, quad)?;
    let fine = reduced_quotient_j(f, &quad.refined())?;
    Ok(QuotientReport {
        functional: "reduced_sobolev".into(),
        value: fine,
        normalization: "none (degree-0 homogeneous)".into(),
        error_estimate: (fine - coarse).abs(),
        iterations: 0,
        starts: 1,
        caveat: format!("t in [0, {}] plus exponential tail", quad.t_max),
    })
}

/// `(3/4) (pi^2)^{2/3}`: one eighth of the Yamabe constant of round projective space.
pub fn reduced_target() -> f64 {
    0.75 * (PI * PI).powf(2.0 / 3.0)
}

/// Radial grid `R_k` log-uniform on `[r_min, r_max]` for a rotationally symmetric model.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub model: RadialModel,
    pub radius: Vec<f64>,
}

impl RadialGrid {
    pub fn log_uniform(model: RadialModel, r_min: f64, r_max: f64, samples: usize) -> Result<Self> {
        model.validate()?;
        if !(r_min > 0.0 && r_max > r_min) || samples < 5 {
            return Err(Error::Parameter("need 0 < r_min < r_max and at least 5 samples".into()));
        }
        let radius = (0..samples)
            .map(|k| r_min * (r_max / r_min).powf(k as f64 / (samples - 1) as f64))
            .collect();
        Ok(Self { model, radius })
    }

    pub fn len(&self) -> usize {
        self.radius.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radius.is_empty()
    }

    /// Samples of `f(t(R))` where `t = log(A(R) / A_neck)` is the flow time.
    pub fn sample_profile(&self, f: &dyn Profile) -> Vec<f64> {
        let m = &self.model;
        let a_neck = m.area(m.neck());
        self.radius
            .iter()
            .map(|&r| f.value((m.area(r) / a_neck).ln().max(0.0)))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElResidual {
    pub residual: f64,
    pub c_fit: f64,
    pub laplacian_norm: f64,
    pub samples: usize,
}

/// Residual of `Lap_h u + C u^5 = 0` for a radial profile on a conformally flat
/// model `psi^4 delta`, with `C` fitted by weighted least squares. The residual
/// is normalized by the larger of `|Lap u|` and `|C u^5|`; it is zero when both
/// vanish.
pub fn el_residual(u: &[f64], grid: &RadialGrid) -> Result<ElResidual> {
    let n = grid.len();
    if u.len() < n {
        return Err(Error::Parameter(format!(
            "profile has {} samples but the model grid has {n}",
            u.len()
        )));
    }
    let m = &grid.model;
    let r = &grid.radius;
    let ds = (r[n - 1] / r[0]).ln() / (n - 1) as f64;
    let flux = |k: usize| {
        let rh = (r[k] * r[k + 1]).sqrt();
        rh * m.psi(rh).powi(2) * (u[k + 1] - u[k]) / ds
    };
    let mut lap = Vec::with_capacity(n - 2);
    let mut pow5 = Vec::with_capacity(n - 2);
    let mut weight = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let psi = m.psi(r[k]);
        lap.push((flux(k) - flux(k - 1)) / ds / (psi.powi(6) * r[k].powi(3)));
        pow5.push(u[k].powi(5));
        weight.push(psi.powi(6) * r[k].powi(3) * ds);
    }
    let wdot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(&weight).map(|((a, b), w)| a * b * w).sum() };
    let pp = wdot(&pow5, &pow5);
    let c = if pp > 0.0 { -wdot(&lap, &pow5) / pp } else { 0.0 };
    let res: Vec<f64> = lap.iter().zip(&pow5).map(|(l, p)| l + c * p).collect();
    let lap_norm = wdot(&lap, &lap).sqrt();
    let scale = lap_norm.max(c.abs() * pp.sqrt());
    let residual = if scale > 0.0 { wdot(&res, &res).sqrt() / scale } else { 0.0 };
    Ok(ElResidual {
        residual,
        c_fit: c,
        laplacian_norm: lap_norm,
        samples: n,
    })
}

/// `C = S ||u||_6^{-4}` for `u = f0(t)` on the Schwarzschild quotient of mass
/// `m`, with `S = J[f0]` and `int u^6` from the coarea identity.
pub fn el_constant_formula(m: f64, quad: &ReducedQuadrature) -> Result<f64> {
    let (_, den) = quad.integrate_pair(&F0, |t| reduced_weights(t).0, |t| reduced_weights(t).1)?;
    let j = reduced_quotient_j(&F0, quad)?;
    Ok(j / (16.0 * PI * m.powi(3) * den).powf(2.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::HopfGrid;
    use crate::metric::{build_metric, MetricSpec};

    #[test]
    fn f0_values() {
        assert_eq!(f0(0.0).unwrap(), 1.0);
        assert!(matches!(f0(-1.0), Err(Error::Domain(_))));
        assert!((f0(60.0).unwrap() * 30f64.exp() - 0.5f64.sqrt()).abs() < 1e-12);
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            assert!(f0(t + 0.01).unwrap() < f0(t).unwrap());
            let fd = (F0.value(t + 1e-6) - F0.value(t + 1e-6 - 2e-6)) / 2e-6;
            assert!((fd - F0.derivative(t + 1e-6 - 1e-6)).abs() < 1e-6);
        }
    }

    #[test]
    fn reduced_quotient_of_f0_hits_target() {
        let q = ReducedQuadrature::default();
        let j = reduced_quotient_j(&F0, &q).unwrap();
        assert!((j - reduced_target()).abs() < 5e-3, "{j} vs {}", reduced_target());
        let j2 = reduced_quotient_j(&F0, &q.refined()).unwrap();
        assert!((j - j2).abs() < 1e-4);
        let j7 = reduced_quotient_j(&Scaled(7.0, F0), &q).unwrap();
        assert!(((j7 - j) / j).abs() < 1e-12);
    }

    #[test]
    fn perturbations_do_not_lower_j() {
        let q = ReducedQuadrature::default();
        let j0 = reduced_quotient_j(&F0, &q).unwrap();
        assert!(reduced_quotient_j(&Perturbed::single(0.05), &q).unwrap() >= j0);
        for seed in 0..5 {
            let p = Perturbed::random(0.05, seed);
            assert!(reduced_quotient_j(&p, &q).unwrap() >= j0 - 1e-9);
        }
    }

    #[test]
    fn non_decaying_profile_is_rejected() {
        struct Flat;
        impl Profile for Flat {
            fn value(&self, _: f64) -> f64 {
                1.0
            }
            fn derivative(&self, _: f64) -> f64 {
                0.0
            }
        }
        let q = ReducedQuadrature::default();
        assert!(matches!(reduced_quotient_j(&Flat, &q), Err(Error::Domain(_))));
    }

    #[test]
    fn sampled_profile_matches_f0() {
        let s = SampledProfile::from_profile(&F0, 45.0, 9001).unwrap();
        let q = ReducedQuadrature::default();
        let j = reduced_quotient_j(&s, &q).unwrap();
        let j0 = reduced_quotient_j(&F0, &q).unwrap();
        assert!((j - j0).abs() < 1e-3, "{j} {j0}");
    }

    #[test]
    fn euler_lagrange_residual_of_the_optimizer() {
        let model = RadialModel::SchwarzschildQuotient { m: 2.0 };
        let mut last = f64::INFINITY;
        for n in [1000, 2000] {
            let grid = RadialGrid::log_uniform(model, 1.0, 20.0, n).unwrap();
            let u = grid.sample_profile(&F0);
            let closed: Vec<f64> = grid
                .radius
                .iter()
                .map(|&r| 2.0 * 2f64.sqrt() * r / ((r + 1.0) * (r * r + 1.0).sqrt()))
                .collect();
            for (a, b) in u.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-12);
            }
            let res = el_residual(&u, &grid).unwrap();
            assert!(res.residual < 1e-3, "{}", res.residual);
            assert!((res.c_fit - 3.0 / 64.0).abs() < 1e-4, "{}", res.c_fit);
            assert!(res.residual < last / 2.0);
            last = res.residual;
        }
        let formula = el_constant_formula(2.0, &ReducedQuadrature::default()).unwrap();
        assert!((formula - 3.0 / 64.0).abs() < 1e-3, "{formula}");
    }

    #[test]
    fn euler_lagrange_residual_trivial_cases() {
        let flat = RadialGrid::log_uniform(RadialModel::FlatSpace, 0.5, 10.0, 200).unwrap();
        let res = el_residual(&vec![1.0; 200], &flat).unwrap();
        assert_eq!(res.c_fit, 0.0);
        assert_eq!(res.residual, 0.0);
        assert!(matches!(el_residual(&[1.0; 10], &flat), Err(Error::Parameter(_))));
        let wiggly: Vec<f64> = flat.radius.iter().map(|r| 1.0 + 0.3 * (3.0 * r).sin()).collect();
        assert!(el_residual(&wiggly, &flat).unwrap().residual > 0.1);
    }

    #[test]
    fn round_yamabe_quotient_and_ilias() {
        let metric = build_metric(&MetricSpec::Round, &HopfGrid::square(64).unwrap()).unwrap();
        let one = ScalarField::constant(&metric.grid, 1.0);
        let target = 6.0 * (2.0 * PI * PI).powf(2.0 / 3.0);
        let q = yamabe_quotient(&metric, &one).unwrap();
        assert!((q - target).abs() < 0.05, "{q}");
        let two = ScalarField::constant(&metric.grid, 2.0);
        assert!(((yamabe_quotient(&metric, &two).unwrap() - q) / q).abs() < 1e-12);
        assert!(matches!(
            yamabe_quotient(&metric, &ScalarField::zeros(&metric.grid)),
            Err(Error::Domain(_))
        ));
        let sides = ilias_check(&metric, &one).unwrap();
        assert!((sides.lhs - sides.rhs).abs() < 1e-6 * sides.rhs);
        let v = ScalarField::from_fn(&metric.grid, |e, x| 1.0 + 0.3 * e.cos() * x.cos());
        let sides = ilias_check(&metric, &v).unwrap();
        assert!(sides.lhs >= sides.rhs);
    }

    #[test]
    fn berger_constant_quotient() {
        let metric = build_metric(&MetricSpec::berger(0.5), &HopfGrid::square(64).unwrap()).unwrap();
        let q = yamabe_quotient(&metric, &ScalarField::constant(&metric.grid, 1.0)).unwrap();
        assert!((q - 7.5 * (PI * PI).powf(2.0 / 3.0)).abs() < 0.1, "{q}");
        assert!(matches!(
            ilias_check(&metric, &ScalarField::constant(&metric.grid, 1.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn round_minimizer_stays_at_constants() {
        let metric = build_metric(&MetricSpec::Round, &HopfGrid::square(48).unwrap()).unwrap();
        let rep = yamabe_minimize(&metric, MinimizeSettings::default()).unwrap();
        let one = yamabe_quotient(&metric, &ScalarField::constant(&metric.grid, 1.0)).unwrap();
        assert!(rep.value <= one + 1e-9);
        assert!((rep.value - 6.0 * (2.0 * PI * PI).powf(2.0 / 3.0)).abs() < 0.5, "{}", rep.value);
    }
}
