//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use ostrovsky_core::grid_spectral::project_mean_zero;
use ostrovsky_core::{make_grid, GridSpec, SpectralField};

/// Standard grid: 512 points on `[-32, 32)`.
pub fn standard_grid() -> Arc<GridSpec> {
    make_grid(512, 32.0).expect("standard grid")
}

/// Mean-zero Gaussian derivative `-x e^{-x²/2}` scaled by `amplitude`.
pub fn gaussian_derivative(grid: &Arc<GridSpec>, amplitude: f64) -> SpectralField {
    let f = SpectralField::from_fn(grid, |x: f64| -amplitude * x * (-0.5 * x * x).exp());
    project_mean_zero(&f)
}
