//! Acceptance criteria AC1-AC10. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use horizon_cli::sweep::SweepSummary;
use horizon_cli::{load_report, RunReport, OUTPUT_ROOT_ENV};
use horizon_core::blowup::blowup_curvature;
use horizon_core::distance::distance_field;
use horizon_core::functionals::{
    el_residual, ilias_check, reduced_quotient_j, reduced_target, Perturbed, RadialGrid,
    ReducedQuadrature, F0,
};
use horizon_core::green::{
    conformal_ratio_spread, green_function, rescaled_green_profile, GreenSettings, ProbeAnnulus,
};
use horizon_core::imcf::{schwarzschild_flow, RadialModel};
use horizon_core::{build_metric, ConformalFactor, HopfGrid, MetricSpec, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SWEEP_EPS: [f64; 6] = [0.05, 0.1, 0.2, 0.4, 0.7, 1.0];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let mut max_k = Vec::new();
    for n in [128, 256] {
        let grid = HopfGrid::square(n).unwrap();
        let metric = build_metric(&MetricSpec::Round, &grid).unwrap();
        let green = green_function(&metric, GreenSettings::compact()).unwrap();
        let distance = distance_field(&metric).unwrap();
        let k = blowup_curvature(&metric, &green, &distance, 0.5, 2.5).unwrap();
        max_k.push(k.max_abs_sectional());
    }
    let secs = start.elapsed().as_secs_f64();
    let ratio = max_k[0] / max_k[1];
    verdict(
        max_k[0] <= 1e-2 && ratio >= 2.5 && secs <= 60.0,
        format!(
            "max|K| n=128 {:.3e} (<= 1e-2), n=256 {:.3e}, ratio {ratio:.2} (>= 2.5), {secs:.1}s (<= 60s)",
            max_k[0], max_k[1]
        ),
    )
}

fn ac2() -> Verdict {
    let grid = HopfGrid::square(128).unwrap();
    let factor = ConformalFactor::cos_eta(0.1);
    let specs = [
        MetricSpec::Round,
        MetricSpec::berger(0.5),
        MetricSpec::ConformalOfRound { factor: factor.clone() },
    ];
    let mut worst: f64 = 0.0;
    let mut greens = Vec::new();
    for spec in &specs {
        let metric = build_metric(spec, &grid).unwrap();
        let g = green_function(&metric, GreenSettings::default()).unwrap();
        worst = worst.max((g.normalization - 1.0).abs());
        greens.push(g);
    }
    let (spread, _) = conformal_ratio_spread(&greens[0], &greens[2], &|e, x| factor.value(e, x), 0.1);
    verdict(
        worst <= 1e-2 && spread <= 1e-2,
        format!("max |G d - 1| {worst:.2e} (<= 1e-2), conformal ratio spread {spread:.2e} (<= 1e-2)"),
    )
}

fn ac3() -> Verdict {
    let start = Instant::now();
    let quad = ReducedQuadrature::default();
    let j0 = reduced_quotient_j(&F0, &quad).unwrap();
    let mut below = 0;
    let mut min_excess = f64::INFINITY;
    for amplitude in [0.01, 0.05, 0.1] {
        for seed in 0..20 {
            let j = reduced_quotient_j(&Perturbed::random(amplitude, seed), &quad).unwrap();
            min_excess = min_excess.min(j - j0);
            if j < j0 {
                below += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let err = (j0 - reduced_target()).abs();
    verdict(
        err <= 5e-3 && below == 0 && secs <= 5.0,
        format!(
            "J[f0] = {j0:.6}, |J - {:.6}| = {err:.2e} (<= 5e-3), 60 perturbations below J[f0]: {below}, min excess {min_excess:.2e}, {secs:.2}s (<= 5s)",
            reduced_target()
        ),
    )
}

fn ac4() -> Verdict {
    let flow = schwarzschild_flow(2.0, 1000, 6.0).unwrap();
    let dev = flow.hawking_mass.iter().map(|m| (m - 2.0).abs()).fold(0.0, f64::max);
    let area = flow
        .t
        .iter()
        .zip(&flow.area)
        .map(|(t, a)| ((a - 64.0 * PI * t.exp()) / a).abs())
        .fold(0.0, f64::max);
    let neck_h = flow.mean_curvature[0];
    let span = flow.t[0] == 0.0 && (flow.t[flow.len() - 1] - 6.0).abs() < 1e-9;
    verdict(
        dev <= 1e-3 && area <= 1e-12 && neck_h == 0.0 && span,
        format!(
            "max |m_H - 2| {dev:.2e} (<= 1e-3) on t in [0, 6], max rel |A - 64 pi e^t| {area:.1e}, neck H = {neck_h}"
        ),
    )
}

struct SweepRun {
    exit_code: Option<i32>,
    secs: f64,
    summary: SweepSummary,
    reports: Vec<RunReport>,
}

fn run_sweep(root: &Path) -> SweepRun {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sweep.json");
    let eps: Vec<String> = SWEEP_EPS.iter().map(|e| e.to_string()).collect();
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_horizon-lab"))
        .arg("sweep")
        .arg(&config)
        .arg("--eps")
        .arg(eps.join(","))
        .env(OUTPUT_ROOT_ENV, root)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let dir: PathBuf = root.join("out/sweep");
    let text = std::fs::read_to_string(dir.join("sweep.json")).unwrap();
    let summary: SweepSummary = serde_json::from_str(&text).unwrap();
    let reports = summary
        .rows
        .iter()
        .map(|r| load_report(&dir.join(&r.id)).unwrap())
        .collect();
    SweepRun {
        exit_code: status.code(),
        secs,
        summary,
        reports,
    }
}

fn ac5(s: &SweepRun) -> Verdict {
    let rows = &s.summary.rows;
    let detected: Vec<bool> = rows.iter().map(|r| r.detected == Some(true)).collect();
    let smallest = detected[0];
    let none_at_one = rows.last().map(|r| r.eps == 1.0 && r.detected == Some(false)) == Some(true);
    let t = &s.summary.threshold;
    let list: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{}", r.eps, if r.detected == Some(true) { "yes" } else { "no" }))
        .collect();
    verdict(
        rows.len() == SWEEP_EPS.len() && smallest && none_at_one && t.monotone && t.eps_star.is_some() && s.secs <= 600.0,
        format!(
            "horizons [{}], eps* = {:?} (next sampled eps {:?}), {:.1}s (<= 600s)",
            list.join(" "),
            t.eps_star,
            t.smallest_undetected,
            s.secs
        ),
    )
}

fn ac6(s: &SweepRun) -> Verdict {
    let c = &s.summary.consistency;
    let met = c.rows.iter().filter(|r| r.hypothesis_met).count();
    verdict(
        c.contradictions.is_empty() && s.exit_code == Some(0) && c.rows.len() == SWEEP_EPS.len(),
        format!(
            "{} rows, {met} with V_max bound >= pi^2, {} contradictions, exit code {:?}",
            c.rows.len(),
            c.contradictions.len(),
            s.exit_code
        ),
    )
}

fn ac7(s: &SweepRun) -> Verdict {
    let mut pass = true;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut checked = 0;
    let mut round_rel = f64::NAN;
    for r in &s.reports {
        let (Some(y), true) = (r.yamabe, r.vmax.applicable) else {
            continue;
        };
        let lhs = 6.0 * r.vmax.lower_bound.value.powf(2.0 / 3.0);
        worst_gap = worst_gap.max(lhs - y.value);
        pass &= lhs <= y.value + 0.5;
        checked += 1;
        if r.config.metric.berger_params().map(|(e, _)| e) == Some(1.0) {
            round_rel = (lhs - y.value).abs() / y.value;
        }
    }
    pass &= checked == SWEEP_EPS.len() && round_rel <= 0.015;
    verdict(
        pass,
        format!(
            "{checked} certified samples, max (6 V^(2/3) - Y) = {worst_gap:.3} (<= 0.5), round relative gap {round_rel:.2e} (<= 1.5e-2)"
        ),
    )
}

fn ac8() -> Verdict {
    let metric = build_metric(&MetricSpec::Round, &HopfGrid::square(64).unwrap()).unwrap();
    let grid = &metric.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for trial in 0..100 {
        // amplitudes from near-constant to sign-changing
        let scale = [0.01, 0.1, 1.0][trial % 3];
        let c0: f64 = rng.gen_range(0.5..2.0);
        let terms: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    scale * rng.gen_range(-1.0..1.0),
                    rng.gen_range(0..5) as f64,
                    rng.gen_range(0..5) as f64,
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let v = ScalarField::from_fn(grid, |eta, xi| {
            c0 + terms
                .iter()
                .map(|&(a, k, l, ph)| a * (2.0 * k * eta).cos() * (l * xi + ph).cos())
                .sum::<f64>()
        });
        let s = ilias_check(&metric, &v).unwrap();
        let rel = (s.lhs - s.rhs) / s.rhs;
        worst = worst.min(rel);
        if s.lhs < s.rhs {
            failures += 1;
        }
    }
    let mut const_gap: f64 = 0.0;
    for c in [0.5, 1.0, 3.0] {
        let s = ilias_check(&metric, &ScalarField::constant(grid, c)).unwrap();
        const_gap = const_gap.max((s.lhs - s.rhs).abs() / s.rhs);
    }
    verdict(
        failures == 0 && const_gap <= 1e-6,
        format!(
            "100 random functions, {failures} with lhs < rhs, min (lhs - rhs)/rhs {worst:.3e}; constants |lhs - rhs|/rhs {const_gap:.1e} (<= 1e-6)"
        ),
    )
}

fn ac9() -> Verdict {
    let grid = HopfGrid::square(128).unwrap();
    let sups: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&eps| {
            rescaled_green_profile(eps, &grid, ProbeAnnulus::default(), GreenSettings::default())
                .unwrap()
                .sup_deviation
        })
        .collect();
    verdict(
        sups.windows(2).all(|w| w[1] < w[0]),
        format!(
            "sup|G_hat - 1| at eps 0.4, 0.2, 0.1: {:.4}, {:.4}, {:.4} (strictly decreasing)",
            sups[0], sups[1], sups[2]
        ),
    )
}

fn ac10() -> Verdict {
    let model = RadialModel::SchwarzschildQuotient { m: 2.0 };
    let res: Vec<f64> = [1000, 2000]
        .iter()
        .map(|&n| {
            let grid = RadialGrid::log_uniform(model, 1.0, 20.0, n).unwrap();
            el_residual(&grid.sample_profile(&F0), &grid).unwrap().residual
        })
        .collect();
    verdict(
        res[0] <= 1e-3 && res[1] <= res[0] / 2.0,
        format!(
            "residual {:.3e} at 1000 samples (<= 1e-3), {:.3e} at 2000 (ratio {:.2}, >= 2)",
            res[0],
            res[1],
            res[0] / res[1]
        ),
    )
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            verdict(false, format!("error: {msg}"))
        }
    }
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = catch_unwind(AssertUnwindSafe(|| run_sweep(tmp.path())));
    let from_sweep = |f: fn(&SweepRun) -> Verdict| -> Verdict {
        match &sweep {
            Ok(s) => guarded(|| f(s)),
            Err(_) => verdict(false, "sweep did not complete".into()),
        }
    };
    let results = [
        ("AC1", "round blowup flatness", guarded(ac1)),
        ("AC2", "Green normalization and conformal covariance", guarded(ac2)),
        ("AC3", "reduced quotient target and minimality", guarded(ac3)),
        ("AC4", "Schwarzschild Hawking mass", guarded(ac4)),
        ("AC5", "Berger horizon reproduction", from_sweep(ac5)),
        ("AC6", "theorem consistency", from_sweep(ac6)),
        ("AC7", "inequality chain", from_sweep(ac7)),
        ("AC8", "Ilias battery", guarded(ac8)),
        ("AC9", "rescaled Green profile", guarded(ac9)),
        ("AC10", "Euler-Lagrange residual", guarded(ac10)),
    ];
    let mut failed = 0;
    for (id, name, v) in &results {
        println!("{id} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
