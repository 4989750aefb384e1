//! Mean-zero initial-condition families.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{project_mean_zero, spatial_derivative, GridSpec, SpectralField};

/// Boundary mass above which a datum is reported as too wide for the box.
pub const BOUNDARY_WARNING: f64 = 1e-8;

fn default_width() -> f64 {
    1.0
}

fn default_sech_width() -> f64 {
    0.5
}

fn default_modes() -> usize {
    6
}

fn default_max_wavenumber() -> f64 {
    2.0
}

/// Initial condition, written as a TOML table with a `family` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `-A z e^{-z²/2}` with `z = (x - center)/width`.
    GaussianDerivative {
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// `-A sech z tanh z` with `z = (x - center)/width`.
    SechDerivative {
        amplitude: f64,
        #[serde(default = "default_sech_width")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Derivative of a Gaussian envelope of width `width` times a sum of
    /// `modes` cosines with seeded random wavenumbers in `[0, max_wavenumber]`
    /// and phases, scaled so that the maximum of `|u|` is `amplitude`.
    RandomBandLimited {
        amplitude: f64,
        seed: u64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "default_max_wavenumber")]
        max_wavenumber: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
}

impl DatumSpec {
    pub fn gaussian(amplitude: f64) -> Self {
        DatumSpec::GaussianDerivative {
            amplitude,
            width: 1.0,
            center: 0.0,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            DatumSpec::GaussianDerivative { amplitude, .. }
            | DatumSpec::SechDerivative { amplitude, .. }
            | DatumSpec::RandomBandLimited { amplitude, .. } => *amplitude,
        }
    }

    /// The same datum with its amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            DatumSpec::GaussianDerivative { amplitude, .. }
            | DatumSpec::SechDerivative { amplitude, .. }
            | DatumSpec::RandomBandLimited { amplitude, .. } => *amplitude *= factor,
        }
        out
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            DatumSpec::GaussianDerivative { amplitude, width, center } => {
                format!("gaussian-derivative(A={amplitude},w={width},c={center})")
            }
            DatumSpec::SechDerivative { amplitude, width, center } => {
                format!("sech-derivative(A={amplitude},w={width},c={center})")
            }
            DatumSpec::RandomBandLimited { amplitude, seed, modes, max_wavenumber, width } => {
                format!("random-band-limited(A={amplitude},seed={seed},modes={modes},k={max_wavenumber},w={width})")
            }
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let (amplitude, width) = match self {
            DatumSpec::GaussianDerivative { amplitude, width, .. }
            | DatumSpec::SechDerivative { amplitude, width, .. } => (*amplitude, *width),
            DatumSpec::RandomBandLimited {
                amplitude,
                modes,
                max_wavenumber,
                width,
                ..
            } => {
                if *modes == 0 {
                    return Err(Error::config(format!("{key}.modes"), "must be at least 1"));
                }
                if !(*max_wavenumber >= 0.0 && max_wavenumber.is_finite()) {
                    return Err(Error::config(format!("{key}.max_wavenumber"), "must be non-negative"));
                }
                (*amplitude, *width)
            }
        };
        if !amplitude.is_finite() {
            return Err(Error::config(format!("{key}.amplitude"), "must be finite"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::config(format!("{key}.width"), "must be positive"));
        }
        Ok(())
    }

    /// Samples the datum on `grid` and removes the roundoff-level mean.
    pub fn build(&self, grid: &Arc<GridSpec>) -> Result<SpectralField> {
        let field = match *self {
            DatumSpec::GaussianDerivative { amplitude, width, center } => SpectralField::from_fn(grid, |x| {
                let z = (x - center) / width;
                -amplitude * z * (-0.5 * z * z).exp()
            }),
            DatumSpec::SechDerivative { amplitude, width, center } => SpectralField::from_fn(grid, |x| {
                let z = (x - center) / width;
                -amplitude * z.tanh() / z.cosh()
            }),
            DatumSpec::RandomBandLimited {
                amplitude,
                seed,
                modes,
                max_wavenumber,
                width,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let terms: Vec<(f64, f64, f64)> = (0..modes)
                    .map(|_| {
                        let k = rng.gen::<f64>() * max_wavenumber;
                        let phase = rng.gen::<f64>() * std::f64::consts::TAU;
                        let weight = rng.gen::<f64>() * 2.0 - 1.0;
                        (k, phase, weight)
                    })
                    .collect();
                let envelope = SpectralField::from_fn(grid, |x| {
                    let z = x / width;
                    let sum: f64 = terms.iter().map(|(k, p, w)| w * (k * x + p).cos()).sum();
                    (-0.5 * z * z).exp() * sum
                });
                let d = spatial_derivative(&envelope, 1)?;
                let peak = d.max_abs();
                if peak == 0.0 {
                    d
                } else {
                    d.scale(amplitude / peak)
                }
            }
        };
        let field = project_mean_zero(&field);
        let wrap = field.decay_ratio();
        if wrap > BOUNDARY_WARNING {
            log::warn!(
                "{}: boundary mass {wrap:.3e} exceeds {BOUNDARY_WARNING:e}; enlarge the box",
                self.label()
            );
        }
        Ok(field)
    }
}
