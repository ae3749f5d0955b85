//! Shared fixtures for the criterion benchmarks.

use hybrbf::harness::franke_point;
use hybrbf::{make_tensor_grid, HybridParams, KernelSpec, PointSet};

/// Franke samples on a `k x k` grid of the unit square.
pub fn franke_grid(k: usize) -> PointSet {
    make_tensor_grid(k, 2, 0.0, 1.0)
        .expect("valid grid")
        .sample(franke_point)
}

/// Hybrid kernel near the optimum for Franke data at moderate N.
pub fn reference_kernel() -> KernelSpec {
    KernelSpec::hybrid(HybridParams::new(5.5, 0.7, 0.3).expect("valid parameters"))
}
