use std::sync::Arc;

use num_complex::Complex64;

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Relative size below which the zero mode counts as vanishing.
pub const MEAN_ZERO_TOL: f64 = 1e-12;

/// A real field held in both representations.
///
/// The spectral coefficients are canonical; the physical samples are always
/// the inverse transform of them, so the two never drift apart.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<GridSpec>,
    physical: Vec<f64>,
    spectral: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<GridSpec>) -> Self {
        let n = grid.n_points();
        Self {
            grid: Arc::clone(grid),
            physical: vec![0.0; n],
            spectral: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_physical(grid: &Arc<GridSpec>, physical: Vec<f64>) -> Result<Self> {
        let spectral = to_spectral(grid, &physical)?;
        // snap a round-off mean to an exact zero mode
        let mass: f64 = physical.iter().map(|v| v.abs()).sum::<f64>() * grid.dx()
            / (2.0 * std::f64::consts::PI).sqrt();
        let mut spectral = spectral;
        if spectral[0].norm() <= 1e-14 * mass {
            spectral[0] = Complex64::new(0.0, 0.0);
        }
        Ok(Self::from_spectral_unchecked(grid, spectral))
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Arc<GridSpec>, f: F) -> Self {
        let physical = grid.x().iter().map(|&x| f(x)).collect();
        Self::from_physical(grid, physical).expect("sizes match by construction")
    }

    /// Coefficients are symmetrised to the nearest Hermitian array.
    pub fn from_spectral(grid: &Arc<GridSpec>, spectral: Vec<Complex64>) -> Result<Self> {
        check_len(grid, spectral.len())?;
        Ok(Self::from_spectral_unchecked(grid, hermitian_part(spectral)))
    }

    pub(crate) fn from_spectral_unchecked(grid: &Arc<GridSpec>, spectral: Vec<Complex64>) -> Self {
        let physical = grid.inverse(&spectral).into_iter().map(|c| c.re).collect();
        Self {
            grid: Arc::clone(grid),
            physical,
            spectral,
        }
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn physical(&self) -> &[f64] {
        &self.physical
    }

    pub fn spectral(&self) -> &[Complex64] {
        &self.spectral
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.spectral[0]
    }

    pub fn is_mean_zero(&self) -> bool {
        self.spectral[0].norm() <= MEAN_ZERO_TOL * self.l2_norm().max(f64::MIN_POSITIVE)
    }

    pub(crate) fn require_mean_zero(&self, op: &'static str) -> Result<()> {
        if self.is_mean_zero() {
            Ok(())
        } else {
            Err(Error::NotMeanZero {
                op,
                zero_mode: self.spectral[0].norm(),
            })
        }
    }

    pub(crate) fn require_same_grid(&self, other: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Discrete L² norm, `(Σ|u_j|² dx)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.physical.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// The same norm evaluated from coefficients, `(Σ|û_k|² dξ)^{1/2}`.
    pub fn spectral_l2_norm(&self) -> f64 {
        (self.spectral.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dxi()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.physical.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |u| on |x| ≥ L/2 relative to the global maximum.
    pub fn decay_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let half = 0.5 * self.grid.half_length();
        let edge = self
            .grid
            .x()
            .iter()
            .zip(&self.physical)
            .filter(|(x, _)| x.abs() >= half)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        edge / max
    }

    /// Largest wavenumber magnitude carrying more than `rel` of the peak coefficient.
    pub fn effective_bandwidth(&self, rel: f64) -> f64 {
        let peak = self.spectral.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        self.spectral
            .iter()
            .zip(self.grid.frequencies())
            .filter(|(c, _)| c.norm() > rel * peak)
            .fold(0.0f64, |m, (_, xi)| m.max(xi.abs()))
    }

    pub fn scale(&self, factor: f64) -> SpectralField {
        let spectral = self.spectral.iter().map(|c| c * factor).collect();
        Self::from_spectral_unchecked(&self.grid, spectral)
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &SpectralField, sign: f64) -> Result<SpectralField> {
        self.require_same_grid(other)?;
        let spectral = self
            .spectral
            .iter()
            .zip(&other.spectral)
            .map(|(a, b)| a + b * sign)
            .collect();
        Ok(Self::from_spectral_unchecked(&self.grid, spectral))
    }

    /// Band-limited evaluation of the trigonometric interpolant at any real `y`.
    pub fn interpolate(&self, y: f64) -> f64 {
        let scale = self.grid.dxi() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, &xi) in self.spectral.iter().zip(self.grid.frequencies()) {
            if c.norm_sqr() != 0.0 {
                acc += c * Complex64::from_polar(1.0, xi * y);
            }
        }
        // the Nyquist term is real-symmetrised: its coefficient multiplies cos
        let ny = self.grid.nyquist_slot();
        let c = self.spectral[ny];
        let xi = self.grid.frequencies()[ny];
        acc -= c * Complex64::new(0.0, (xi * y).sin());
        acc.re * scale
    }

    /// Resamples onto a grid with the same box and more points (zero padding).
    pub fn upsample(&self, fine: &Arc<GridSpec>) -> Result<SpectralField> {
        if fine.half_length() != self.grid.half_length() || fine.n_points() < self.grid.n_points()
        {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n_points();
        let m = fine.n_points();
        let mut spec = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in self.spectral.iter().enumerate() {
            let k = super::grid::signed_index(j, n);
            if j == n / 2 && m > n {
                // split the Nyquist coefficient between ±N/2 to stay real
                spec[(k as usize) % m] += c * 0.5;
                spec[(m as i64 - k) as usize] += c * 0.5;
                continue;
            }
            let slot = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
            spec[slot] += c;
        }
        Ok(Self::from_spectral_unchecked(fine, spec))
    }

    /// Truncates onto a coarser grid with the same box.
    pub fn downsample(&self, coarse: &Arc<GridSpec>) -> Result<SpectralField> {
        if coarse.half_length() != self.grid.half_length()
            || coarse.n_points() > self.grid.n_points()
        {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n_points();
        let m = coarse.n_points();
        let mut spec = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in self.spectral.iter().enumerate() {
            let k = super::grid::signed_index(j, n);
            if k.unsigned_abs() as usize >= m / 2 {
                continue;
            }
            let slot = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
            spec[slot] = *c;
        }
        Ok(Self::from_spectral_unchecked(coarse, spec))
    }
}

fn check_len(grid: &GridSpec, len: usize) -> Result<()> {
    if len != grid.n_points() {
        Err(Error::SizeMismatch {
            expected: grid.n_points(),
            found: len,
        })
    } else {
        Ok(())
    }
}

fn hermitian_part(mut spectral: Vec<Complex64>) -> Vec<Complex64> {
    let n = spectral.len();
    spectral[0] = Complex64::new(spectral[0].re, 0.0);
    spectral[n / 2] = Complex64::new(spectral[n / 2].re, 0.0);
    for j in 1..n / 2 {
        let a = spectral[j];
        let b = spectral[n - j];
        let sym = (a + b.conj()) * 0.5;
        spectral[j] = sym;
        spectral[n - j] = sym.conj();
    }
    spectral
}

/// Forward transform of real samples (continuum normalisation).
pub fn to_spectral(grid: &GridSpec, physical: &[f64]) -> Result<Vec<Complex64>> {
    check_len(grid, physical.len())?;
    let buf: Vec<Complex64> = physical.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(grid.forward(&buf))
}

/// Inverse transform returning the complex samples, so callers can inspect
/// the imaginary residue left by round-off.
pub fn to_physical_complex(grid: &GridSpec, spectral: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(grid, spectral.len())?;
    Ok(grid.inverse(spectral))
}

/// Inverse transform keeping the real part.
pub fn to_physical(grid: &GridSpec, spectral: &[Complex64]) -> Result<Vec<f64>> {
    Ok(to_physical_complex(grid, spectral)?
        .into_iter()
        .map(|c| c.re)
        .collect())
}
