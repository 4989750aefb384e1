//! Pseudospectral toolkit for the Ostrovsky equation
//! `u_t + ∂ₓ³u ± ∂ₓ⁻¹u + u∂ₓu = 0` on a large periodic box.

pub mod error;
pub mod experiments;
pub mod fractional;
pub mod grid_spectral;
pub mod io;
pub mod norms;
pub mod propagator;
pub mod quad;
pub mod solver;
pub mod stein_verify;

pub use error::{Error, Result};
pub use grid_spectral::{make_grid, GridParams, GridSpec, SpectralField};
pub use propagator::{apply_group, linear_phase, SignChoice};
