//! Inverse mean curvature flow by coordinate spheres on rotationally symmetric
//! models, and the Hawking mass.
//!
//! On the Schwarzschild slice `psi^4 delta`, `psi = 1 + m/(2R)`, the coordinate
//! spheres `|x| = R >= m/2` are the flow surfaces. The flow time is defined by
//! exponential area growth, `t = log(A / A_0)`, which is exact for smooth
//! symmetric flows.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functionals::{Profile, ReducedQuadrature};

/// `sqrt(A / 16 pi) (1 - int H^2 / 16 pi)`.
pub fn hawking_mass(area: f64, h_sq_integral: f64) -> f64 {
    (area / (16.0 * PI)).sqrt() * (1.0 - h_sq_integral / (16.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum RadialModel {
    /// `{|x| >= m/2}` with `(1 + m/(2|x|))^4 delta`.
    SchwarzschildHalf { m: f64 },
    /// The half with antipodal points of the neck identified.
    SchwarzschildQuotient { m: f64 },
    FlatSpace,
}

impl RadialModel {
    pub fn mass(&self) -> f64 {
        match self {
            RadialModel::SchwarzschildHalf { m } | RadialModel::SchwarzschildQuotient { m } => *m,
            RadialModel::FlatSpace => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.mass();
        if !matches!(self, RadialModel::FlatSpace) && !(m > 0.0 && m.is_finite()) {
            return Err(Error::Parameter(format!("mass must be > 0, got {m}")));
        }
        Ok(())
    }

    /// Neck radius `m/2`; the flat model starts at the origin.
    pub fn neck(&self) -> f64 {
        0.5 * self.mass()
    }

    pub fn psi(&self, r: f64) -> f64 {
        1.0 + self.mass() / (2.0 * r)
    }

    /// Area of the coordinate sphere of radius `r`.
    pub fn area(&self, r: f64) -> f64 {
        4.0 * PI * r * r * self.psi(r).powi(4)
    }

    /// Mean curvature of the coordinate sphere, `(dA/dR) / (A psi^2)`,
    /// which simplifies to `2 (1 - m/(2R)) / (R psi^3)`.
    pub fn mean_curvature(&self, r: f64) -> f64 {
        2.0 * (1.0 - self.mass() / (2.0 * r)) / (r * self.psi(r).powi(3))
    }

    /// Radius of the sphere at flow time `t` from the neck, `A = A_neck e^t`.
    /// Solves `(R + m/2)^2 = y R` with `y = sqrt(A / 4 pi) = 2m e^{t/2}`.
    pub fn radius_at_time(&self, t: f64) -> f64 {
        let m = self.mass();
        if m == 0.0 {
            return (self.area(1.0) * t.exp() / (4.0 * PI)).sqrt();
        }
        let y = 2.0 * m * (0.5 * t).exp();
        let y_minus = 2.0 * m * (0.5 * t).exp_m1();
        0.5 * ((y - m) + (y * y_minus).sqrt())
    }

    /// Area of the initial surface: the neck sphere, halved for the quotient.
    pub fn initial_area(&self) -> f64 {
        match self {
            RadialModel::SchwarzschildQuotient { .. } => 0.5 * self.area(self.neck()),
            _ => self.area(self.neck()),
        }
    }

    /// Coordinate radius whose sphere has area `area` (outside the neck).
    pub fn radius_for_area(&self, area: f64) -> f64 {
        let mut lo = self.neck().max(1e-300);
        let mut hi = lo.max(1.0);
        while self.area(hi) < area {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.area(mid) < area {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSamples {
    pub model: RadialModel,
    pub radius: Vec<f64>,
    pub t: Vec<f64>,
    pub area: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    pub hawking_mass: Vec<f64>,
}

impl FlowSamples {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, r: f64, t: f64, a: f64, h: f64) {
        self.radius.push(r);
        self.t.push(t);
        self.area.push(a);
        self.mean_curvature.push(h);
        self.hawking_mass.push(hawking_mass(a, h * h * a));
    }
}

/// Coordinate-sphere flow on the Schwarzschild half, `steps` samples on a
/// log-uniform radius grid from the neck to the sphere with `t = t_max`.
pub fn schwarzschild_flow(m: f64, steps: usize, t_max: f64) -> Result<FlowSamples> {
    flow_on(RadialModel::SchwarzschildHalf { m }, steps, t_max)
}

pub fn flow_on(model: RadialModel, steps: usize, t_max: f64) -> Result<FlowSamples> {
    model.validate()?;
    if matches!(model, RadialModel::FlatSpace) {
        return Err(Error::Parameter("the flat model has no neck; use warped_flow".into()));
    }
    if steps < 100 {
        return Err(Error::Parameter(format!("need at least 100 steps, got {steps}")));
    }
    if !(t_max > 0.0) {
        return Err(Error::Parameter(format!("t_max must be > 0, got {t_max}")));
    }
    let a0 = model.initial_area();
    let r0 = model.neck();
    let full_neck = model.area(r0);
    let r1 = model.radius_for_area(full_neck * t_max.exp());
    let mut out = FlowSamples {
        model,
        radius: Vec::with_capacity(steps),
        t: Vec::with_capacity(steps),
        area: Vec::with_capacity(steps),
        mean_curvature: Vec::with_capacity(steps),
        hawking_mass: Vec::with_capacity(steps),
    };
    let quotient = matches!(model, RadialModel::SchwarzschildQuotient { .. });
    if quotient {
        // the projective plane at the neck, a minimal surface of half the area
        out.push(r0, 0.0, a0, 0.0);
    }
    let n = if quotient { steps - 1 } else { steps };
    let start = if quotient { 1 } else { 0 };
    for k in start..start + n {
        let s = k as f64 / (start + n - 1) as f64;
        let r = r0 * (r1 / r0).powf(s);
        let a = model.area(r);
        let h = if k == 0 { 0.0 } else { model.mean_curvature(r) };
        out.push(r, (a / a0).ln(), a, h);
    }
    Ok(out)
}

/// Rotationally symmetric `dr^2 + phi(r)^2 dOmega^2` with mass function
/// `M(phi) = m phi^3 / (phi^3 + a^3)`, so that `phi'^2 = 1 - 2 M / phi` and the
/// scalar curvature `4 M'(phi) / phi^2` is nonnegative.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WarpedModel {
    pub m: f64,
    pub a: f64,
}

impl WarpedModel {
    pub fn mass_function(&self, phi: f64) -> f64 {
        let p3 = phi.powi(3);
        self.m * p3 / (p3 + self.a.powi(3))
    }

    pub fn scalar_curvature(&self, phi: f64) -> f64 {
        let a3 = self.a.powi(3);
        let dm = self.m * 3.0 * phi * phi * a3 / (phi.powi(3) + a3).powi(2);
        4.0 * dm / (phi * phi)
    }

    /// Whether `phi' > 0` (no minimal sphere) on `[phi0, phi1]`.
    pub fn is_regular_on(&self, phi0: f64, phi1: f64) -> bool {
        (0..=1000).all(|k| {
            let phi = phi0 + (phi1 - phi0) * k as f64 / 1000.0;
            1.0 - 2.0 * self.mass_function(phi) / phi > 0.0
        })
    }
}

/// Flow by the coordinate spheres `phi in [phi0, phi1]` of a warped model.
pub fn warped_flow(model: WarpedModel, phi0: f64, phi1: f64, steps: usize) -> Result<FlowSamples> {
    if !(phi0 > 0.0 && phi1 > phi0) || steps < 2 {
        return Err(Error::Parameter("need 0 < phi0 < phi1 and at least 2 steps".into()));
    }
    if !model.is_regular_on(phi0, phi1) {
        return Err(Error::Domain("warped model has a minimal sphere in the range".into()));
    }
    let a0 = 4.0 * PI * phi0 * phi0;
    let mut out = FlowSamples {
        model: RadialModel::FlatSpace,
        radius: Vec::new(),
        t: Vec::new(),
        area: Vec::new(),
        mean_curvature: Vec::new(),
        hawking_mass: Vec::new(),
    };
    for k in 0..steps {
        let phi = phi0 * (phi1 / phi0).powf(k as f64 / (steps - 1) as f64);
        let dphi = (1.0 - 2.0 * model.mass_function(phi) / phi).sqrt();
        let a = 4.0 * PI * phi * phi;
        out.push(phi, (a / a0).ln(), a, 2.0 * dphi / phi);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub pass: bool,
    /// Largest decrease `m_H(t_k) - m_H(t_{k+1})` (negative when strictly increasing).
    pub worst_violation: f64,
    pub worst_index: Option<usize>,
    pub tolerance: f64,
}

/// Check `m_H(t_{k+1}) >= m_H(t_k) - tol` along the flow.
pub fn monotonicity_check(values: &[f64], tol: f64) -> Result<MonotonicityVerdict> {
    if values.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 samples".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut idx = None;
    for (k, w) in values.windows(2).enumerate() {
        let drop = w[0] - w[1];
        if drop > worst {
            worst = drop;
            idx = Some(k);
        }
    }
    Ok(MonotonicityVerdict {
        pass: worst <= tol,
        worst_violation: worst,
        worst_index: idx,
        tolerance: tol,
    })
}

/// Sobolev quotient of `u = f(t)` on the Schwarzschild quotient, assembled
/// from the flow data by the coarea identities
/// `int |grad u|^2 = int f'^2 (int_{Sigma_t} H) dt` and
/// `int u^6 = int f^6 (int_{Sigma_t} 1/H) dt`.
pub fn quotient_model_energy(f: &dyn Profile, m: f64, quad: &ReducedQuadrature) -> Result<f64> {
    let model = RadialModel::SchwarzschildHalf { m };
    model.validate()?;
    let a_neck = model.area(model.neck());
    let sample = |t: f64| -> (f64, f64) {
        let a = a_neck * t.exp();
        let r = model.radius_at_time(t);
        let h = model.mean_curvature(r);
        (h * a, a / h)
    };
    let (num, den) = quad.integrate_pair(f, |t| sample(t).0, |t| sample(t).1)?;
    Ok(num / den.cbrt())
}
