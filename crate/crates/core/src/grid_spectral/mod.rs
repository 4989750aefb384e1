//! Periodic discretisation of the line and diagonal Fourier multipliers.
//!
//! Every field lives on a box [-L, L) with the zero mode pinned to 0, so the
//! antiderivative and negative-order derivatives are always defined. Multipliers
//! with odd symbols also clear the Nyquist mode, which has no odd real partner.

mod field;
mod grid;

use num_complex::Complex64;

pub use field::{to_physical, to_physical_complex, to_spectral, SpectralField, MEAN_ZERO_TOL};
pub use grid::{make_grid, signed_index, GridParams, GridSpec, MIN_POINTS};

use crate::error::{Error, Result};

/// Highest spatial derivative order the library uses.
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

/// Applies `symbol(ξ)` to every nonzero mode. When `odd` is set the Nyquist
/// coefficient is cleared so the output stays real.
pub(crate) fn apply_multiplier<F>(field: &SpectralField, odd: bool, symbol: F) -> SpectralField
where
    F: Fn(f64) -> Complex64,
{
    let grid = field.grid();
    let ny = grid.nyquist_slot();
    let spectral = field
        .spectral()
        .iter()
        .zip(grid.frequencies())
        .enumerate()
        .map(|(j, (c, &xi))| {
            if j == 0 || (odd && j == ny) {
                Complex64::new(0.0, 0.0)
            } else {
                c * symbol(xi)
            }
        })
        .collect();
    SpectralField::from_spectral_unchecked(grid, spectral)
}

fn check_order(b: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&b) {
        return Err(Error::OutOfRange {
            name: "b",
            value: b,
            range: "[-1, 1]",
        });
    }
    Ok(())
}

/// `D^b`: multiplies each mode by `|ξ|^b`.
pub fn fractional_derivative(field: &SpectralField, b: f64) -> Result<SpectralField> {
    check_order(b)?;
    if b < 0.0 {
        field.require_mean_zero("fractional_derivative")?;
    }
    Ok(apply_multiplier(field, false, |xi| {
        Complex64::new(xi.abs().powf(b), 0.0)
    }))
}

/// `∂ₓ⁻¹`: divides each mode by `iξ`.
pub fn antiderivative(field: &SpectralField) -> Result<SpectralField> {
    field.require_mean_zero("antiderivative")?;
    Ok(apply_multiplier(field, true, |xi| {
        Complex64::new(0.0, -1.0 / xi)
    }))
}

pub fn project_mean_zero(field: &SpectralField) -> SpectralField {
    let mut spectral = field.spectral().to_vec();
    spectral[0] = Complex64::new(0.0, 0.0);
    SpectralField::from_spectral_unchecked(field.grid(), spectral)
}

/// `∂ₓ^order`: multiplies each mode by `(iξ)^order`.
pub fn spatial_derivative(field: &SpectralField, order: u32) -> Result<SpectralField> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::OutOfRange {
            name: "order",
            value: order as f64,
            range: "0..=4",
        });
    }
    if order == 0 {
        return Ok(project_mean_zero(field));
    }
    Ok(apply_multiplier(field, order % 2 == 1, |xi| {
        Complex64::new(0.0, xi).powu(order)
    }))
}

/// Largest |k| kept by the two-thirds rule on an `n`-point grid.
pub fn dealias_cutoff(n: usize) -> usize {
    (n - 1) / 3
}

/// Zeroes every mode with |k| above the two-thirds cutoff.
pub fn truncate_two_thirds(field: &SpectralField) -> SpectralField {
    let n = field.grid().n_points();
    let cut = dealias_cutoff(n) as i64;
    let spectral = field
        .spectral()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if signed_index(j, n).abs() > cut {
                Complex64::new(0.0, 0.0)
            } else {
                *c
            }
        })
        .collect();
    SpectralField::from_spectral_unchecked(field.grid(), spectral)
}

/// Pointwise product with the two-thirds rule applied to the factors and the result.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.require_same_grid(g)?;
    let ft = truncate_two_thirds(f);
    let gt = truncate_two_thirds(g);
    let prod: Vec<f64> = ft
        .physical()
        .iter()
        .zip(gt.physical())
        .map(|(a, b)| a * b)
        .collect();
    let raw = SpectralField::from_physical(f.grid(), prod)?;
    Ok(truncate_two_thirds(&raw))
}

/// Exact product of two fields on the grid with twice the points.
///
/// The result keeps its mean; callers that need mean-zero data project it.
pub fn padded_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.require_same_grid(g)?;
    let fine = f.grid().refined();
    let fu = f.upsample(&fine)?;
    let gu = g.upsample(&fine)?;
    let prod: Vec<f64> = fu
        .physical()
        .iter()
        .zip(gu.physical())
        .map(|(a, b)| a * b)
        .collect();
    SpectralField::from_physical(&fine, prod)
}
