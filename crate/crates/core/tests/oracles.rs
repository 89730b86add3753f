use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use approx::assert_relative_eq;
use horizon_core::blowup::{
    blowup_scan, default_r_max, geometric_levels, horizon_indicator, theorem_consistency,
    ConsistencySample, ScanSettings,
};
use horizon_core::curvature::{curvature, vmax_rescaling};
use horizon_core::distance::distance_field;
use horizon_core::functionals::{f0, reduced_quotient_j, ReducedQuadrature, Scaled, F0};
use horizon_core::green::{green_function, round_green_exact, GreenSettings};
use horizon_core::imcf::{hawking_mass, quotient_model_energy, schwarzschild_flow, RadialModel};
use horizon_core::metric::frame_lengths_at;
use horizon_core::{build_metric, Error, HopfGrid, MetricSpec};

#[test]
fn berger_frame_lengths_and_fibre_block() {
    let spec = MetricSpec::berger(0.5);
    for (eta, xi) in [(0.3, -1.0), (FRAC_PI_4, 0.5), (1.2, 2.9)] {
        let l = frame_lengths_at(&spec, eta, xi);
        assert_relative_eq!(l[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(l[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(l[2], 1.0, epsilon = 1e-12);
    }
    let g = MetricSpec::berger(0.3).components(FRAC_PI_4, 0.7);
    let det = g[1][1] * g[2][2] - g[1][2] * g[2][1];
    assert_relative_eq!(det, 0.0225, epsilon = 1e-12);
}

#[test]
fn berger_one_is_round() {
    let grid = HopfGrid::square(64).unwrap();
    let a = build_metric(&MetricSpec::Round, &grid).unwrap();
    let b = build_metric(&MetricSpec::berger(1.0), &grid).unwrap();
    for (x, y) in a.g_xi1_xi1.values.iter().zip(&b.g_xi1_xi1.values) {
        assert_relative_eq!(x, y, epsilon = 1e-14);
    }
    assert!(matches!(build_metric(&MetricSpec::berger(1.5), &grid), Err(Error::Parameter(_))));
    assert!(matches!(build_metric(&MetricSpec::berger(0.0), &grid), Err(Error::Parameter(_))));
}

#[test]
fn berger_sectional_range_and_volume_bound() {
    let grid = HopfGrid::square(64).unwrap();
    for eps in [0.2, 0.5, 0.9] {
        let metric = build_metric(&MetricSpec::berger(eps), &grid).unwrap();
        let c = curvature(&metric).unwrap();
        assert!(c.sectional_min >= eps * eps - 1e-9, "{eps}: {}", c.sectional_min);
        assert!(c.sectional_max <= 4.0 - 3.0 * eps * eps + 1e-9, "{eps}: {}", c.sectional_max);
        assert_relative_eq!(c.scalar_min, c.scalar_max, max_relative = 1e-9);
        let v = vmax_rescaling(&metric).unwrap();
        // Ric = diag(2 eps^2, 4 - 2 eps^2, 4 - 2 eps^2) and volume 2 pi^2 eps
        assert_relative_eq!(v.vmax_lower_bound, 2.0 * PI * PI * eps.powi(4), max_relative = 1e-6);
    }
    let round = build_metric(&MetricSpec::Round, &grid).unwrap();
    let c = curvature(&round).unwrap();
    assert_relative_eq!(c.sectional_min, 1.0, epsilon = 1e-9);
    assert_relative_eq!(c.sectional_max, 1.0, epsilon = 1e-9);
    assert_relative_eq!(c.scalar_max, 6.0, epsilon = 1e-9);
}

#[test]
fn round_green_function_against_closed_form() {
    let grid = HopfGrid::square(64).unwrap();
    let metric = build_metric(&MetricSpec::Round, &grid).unwrap();
    let g = green_function(&metric, GreenSettings::default()).unwrap();
    assert!((g.normalization - 1.0).abs() < 1e-2);
    for (eta, xi) in [(0.5, 1.0), (1.0, PI - 0.3), (FRAC_PI_2 - 0.1, 0.0)] {
        assert_relative_eq!(g.value(eta, xi), round_green_exact(eta, xi), max_relative = 5e-3);
    }
}

#[test]
fn horizon_scan_round_vs_small_eps() {
    let grid = HopfGrid::square(128).unwrap();
    let mut samples = Vec::new();
    for (spec, expect) in [(MetricSpec::Round, false), (MetricSpec::berger(0.1), true)] {
        let metric = build_metric(&spec, &grid).unwrap();
        let green = green_function(&metric, GreenSettings::default()).unwrap();
        let distance = distance_field(&metric).unwrap();
        let levels = geometric_levels(default_r_max(&spec), 1e-3, 48);
        let scan = blowup_scan(&metric, &green, &distance, &levels, &ScanSettings::default()).unwrap();
        let verdict = horizon_indicator(&scan).unwrap();
        assert_eq!(verdict.detected, expect, "{}", spec.label());
        if !expect {
            // the round blowup is flat space: coordinate spheres have zero Hawking mass
            for l in scan.valid_levels() {
                assert!(l.hawking_mass_h.abs() < 5e-3, "{} {}", l.r, l.hawking_mass_h);
            }
        }
        samples.push(ConsistencySample {
            vmax_lower_bound: vmax_rescaling(&metric).unwrap().vmax_lower_bound,
            metric: spec,
            verdict,
        });
    }
    let report = theorem_consistency(&samples);
    assert!(report.is_consistent());
    assert!(report.rows[0].hypothesis_met && !report.rows[1].hypothesis_met);
}

#[test]
fn hawking_mass_examples() {
    assert_relative_eq!(hawking_mass(64.0 * PI, 0.0), 2.0, epsilon = 1e-15);
    let r: f64 = 3.7;
    let area = 4.0 * PI * r * r;
    assert!(hawking_mass(area, (2.0 / r).powi(2) * area).abs() < 1e-14);
    let flow = schwarzschild_flow(2.0, 1000, 6.0).unwrap();
    assert_relative_eq!(flow.area[0], 64.0 * PI, max_relative = 1e-14);
    assert_eq!(flow.mean_curvature[0], 0.0);
    assert_eq!(flow.t[0], 0.0);
    assert!(flow.t.windows(2).all(|w| w[1] > w[0]));
    assert!(matches!(schwarzschild_flow(0.0, 1000, 6.0), Err(Error::Parameter(_))));
}

#[test]
fn reduced_quotient_and_coarea_energy_agree() {
    let quad = ReducedQuadrature::default();
    assert_eq!(f0(0.0).unwrap(), 1.0);
    assert!(matches!(f0(-0.1), Err(Error::Domain(_))));
    let j = reduced_quotient_j(&F0, &quad).unwrap();
    assert_relative_eq!(j, 0.75 * (PI * PI).powf(2.0 / 3.0), epsilon = 5e-3);
    assert_relative_eq!(reduced_quotient_j(&Scaled(7.0, F0), &quad).unwrap(), j, max_relative = 1e-12);
    let e = quotient_model_energy(&F0, 2.0, &quad).unwrap();
    assert_relative_eq!(e, j, max_relative = 1e-3);
    assert_eq!(RadialModel::SchwarzschildQuotient { m: 2.0 }.neck(), 1.0);
}
