//! Test surfaces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RbfError, Result};
use crate::geometry::{closest_pair, PointSet};

/// Franke's bivariate test function.
///
/// This is the standard form with negative exponents in every term; the
/// fourth term peaks at `(4/9, 7/9)` with value `0.2`.
pub fn franke(x: f64, y: f64) -> f64 {
    let f1 = 0.75 * (-((9.0 * x - 2.0).powi(2) + (9.0 * y - 2.0).powi(2)) / 4.0).exp();
    let f2 = 0.75 * (-(9.0 * x + 1.0).powi(2) / 49.0 - (9.0 * y + 1.0) / 10.0).exp();
    let f3 = 0.5 * (-((9.0 * x - 7.0).powi(2) + (9.0 * y - 3.0).powi(2)) / 4.0).exp();
    let f4 = 0.2 * (-(9.0 * x - 4.0).powi(2) - (9.0 * y - 7.0).powi(2)).exp();
    f1 + f2 + f3 - f4
}

pub fn franke_point(p: &[f64]) -> f64 {
    franke(p[0], p[1])
}

/// `(x + y) / 2`, the linear reproduction target.
pub fn linear_half_sum(p: &[f64]) -> f64 {
    0.5 * (p[0] + p[1])
}

/// Side length of the square synthetic fault domain, in km.
pub const FAULT_DOMAIN: f64 = 50.0;
/// Vertical throw across the fault.
pub const FAULT_STEP: f64 = 25.0;
const FOOTWALL_AMPLITUDE: f64 = 2.0;
const FAULT_SLOPE: f64 = 0.6;
const FAULT_OFFSET: f64 = 5.0;
const BASINS: [(f64, f64, f64, f64); 2] = [
    // (cx, cy, depth, width)
    (30.0, 10.0, 30.0, 7.0),
    (42.0, 22.0, 20.0, 5.0),
];

/// True on the footwall (above the fault line `y = 0.6 x + 5`).
pub fn on_footwall(x: f64, y: f64) -> bool {
    y > FAULT_SLOPE * x + FAULT_OFFSET
}

/// Horizon elevation of the synthetic normal-fault model.
///
/// The footwall varies smoothly within `[0, 2]`; the hanging wall sits at least
/// [`FAULT_STEP`] lower and holds two sedimentary basins.
pub fn fault_surface(x: f64, y: f64) -> f64 {
    if on_footwall(x, y) {
        0.5 * FOOTWALL_AMPLITUDE * (1.0 + (x / 8.0).sin() * (y / 11.0).cos())
    } else {
        let basins: f64 = BASINS
            .iter()
            .map(|&(cx, cy, depth, width)| {
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                depth * (-d2 / (2.0 * width * width)).exp()
            })
            .sum();
        -FAULT_STEP - basins
    }
}

pub fn fault_surface_point(p: &[f64]) -> f64 {
    fault_surface(p[0], p[1])
}

/// Scattered samples of [`fault_surface`] on `[0, 50]^2`, deterministic per seed.
pub fn synthetic_fault_surface(n_points: usize, seed: u64) -> Result<PointSet> {
    if n_points < 10 {
        return Err(RbfError::Config(format!(
            "synthetic fault set needs at least 10 points, got {n_points}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<f64> = Vec::with_capacity(2 * n_points);
    while coords.len() < 2 * n_points {
        let x = FAULT_DOMAIN * rng.random::<f64>();
        let y = FAULT_DOMAIN * rng.random::<f64>();
        let too_close = coords
            .chunks_exact(2)
            .any(|p| (p[0] - x).hypot(p[1] - y) < 1e-3 * FAULT_DOMAIN);
        if !too_close {
            coords.extend([x, y]);
        }
    }
    let set = PointSet::new(2, coords, None)?.sample(fault_surface_point);
    debug_assert!(closest_pair(&set).map(|(_, _, d)| d > 0.0).unwrap_or(true));
    Ok(set)
}
