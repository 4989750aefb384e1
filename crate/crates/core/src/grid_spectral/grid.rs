use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point count and half-length of the periodic box [-L, L) standing in for ℝ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n_points: usize,
    pub half_length: f64,
}

/// A periodic computational domain with precomputed axes and FFT plans.
///
/// Frequencies follow `ξ_k = πk/L` with `k = 0, 1, …, N/2, -(N/2 - 1), …, -1`;
/// the Nyquist entry is listed with positive sign. Plans are read-only after
/// construction, so a grid is shared between threads as `Arc<GridSpec>`.
pub struct GridSpec {
    n_points: usize,
    half_length: f64,
    dx: f64,
    x: Vec<f64>,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("n_points", &self.n_points)
            .field("half_length", &self.half_length)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.half_length.to_bits() == other.half_length.to_bits()
    }
}

pub const MIN_POINTS: usize = 8;

/// Builds the grid for `n_points` samples on [-half_length, half_length).
pub fn make_grid(n_points: usize, half_length: f64) -> Result<Arc<GridSpec>> {
    if n_points % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "n_points must be even, got {n_points}"
        )));
    }
    if n_points < MIN_POINTS {
        return Err(Error::InvalidGrid(format!(
            "n_points must be at least {MIN_POINTS}, got {n_points}"
        )));
    }
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "half_length must be positive and finite, got {half_length}"
        )));
    }
    let dx = 2.0 * half_length / n_points as f64;
    let x = (0..n_points)
        .map(|j| -half_length + j as f64 * dx)
        .collect();
    let xi = (0..n_points)
        .map(|j| std::f64::consts::PI * signed_index(j, n_points) as f64 / half_length)
        .collect();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n_points);
    let inverse = planner.plan_fft_inverse(n_points);
    Ok(Arc::new(GridSpec {
        n_points,
        half_length,
        dx,
        x,
        xi,
        forward,
        inverse,
    }))
}

/// Signed wavenumber of FFT slot `j`; the Nyquist slot maps to `+N/2`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl GridSpec {
    pub fn params(&self) -> GridParams {
        GridParams {
            n_points: self.n_points,
            half_length: self.half_length,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Frequency spacing `π/L`.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.xi
    }

    pub fn max_frequency(&self) -> f64 {
        std::f64::consts::PI * (self.n_points / 2) as f64 / self.half_length
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n_points / 2
    }

    /// The grid with twice the points on the same box.
    pub fn refined(&self) -> Arc<GridSpec> {
        make_grid(2 * self.n_points, self.half_length).expect("refining a valid grid")
    }

    /// Samples on the grid → continuum-normalised Fourier coefficients,
    /// `û(ξ_k) ≈ (2π)^{-1/2} ∫ e^{-ixξ_k} u(x) dx`.
    pub(crate) fn forward(&self, physical: &[Complex64]) -> Vec<Complex64> {
        let mut buf = physical.to_vec();
        self.forward.process(&mut buf);
        let scale = self.dx / (2.0 * std::f64::consts::PI).sqrt();
        for (k, c) in buf.iter_mut().enumerate() {
            // x_0 = -L contributes the phase e^{iLξ_k} = (-1)^k
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *c *= scale * sign;
        }
        buf
    }

    /// Inverse of [`GridSpec::forward`]: a Riemann sum of the inverse transform.
    pub(crate) fn inverse(&self, spectral: &[Complex64]) -> Vec<Complex64> {
        let scale = self.dxi() / (2.0 * std::f64::consts::PI).sqrt();
        let mut buf: Vec<Complex64> = spectral
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                c * (scale * sign)
            })
            .collect();
        self.inverse.process(&mut buf);
        buf
    }
}
