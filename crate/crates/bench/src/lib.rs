//! Fixtures shared by the solver benchmarks in `benches/`.

use horizon_core::distance::{distance_field, DistanceField};
use horizon_core::green::{green_function, GreenResult, GreenSettings};
use horizon_core::operator::ConformalLaplacian;
use horizon_core::{build_metric, HopfGrid, MetricField, MetricSpec};

pub fn metric(spec: &MetricSpec, n: usize) -> MetricField {
    let grid = HopfGrid::square(n).expect("benchmark grid size is valid");
    build_metric(spec, &grid).expect("benchmark metric is valid")
}

pub fn operator(metric: &MetricField) -> ConformalLaplacian {
    ConformalLaplacian::assemble(metric).expect("benchmark operator assembles")
}

/// Metric, Green's function and distance field ready for a blowup scan.
pub fn scan_inputs(spec: &MetricSpec, n: usize) -> (MetricField, GreenResult, DistanceField) {
    let m = metric(spec, n);
    let g = green_function(&m, GreenSettings::default()).expect("benchmark Green's function solves");
    let d = distance_field(&m).expect("benchmark distance field");
    (m, g, d)
}
