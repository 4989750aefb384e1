use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{phase_unchecked, SignChoice};
use crate::error::{Error, Result};
use crate::quad::gauss16;

type Profile = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Fourier-side description of a datum for the direct quadrature.
#[derive(Clone)]
pub enum FreqProfile {
    /// A profile with `|f̂(ξ)| ≤ constant·|ξ|^order` near 0, integrated over
    /// `ρ ≤ |ξ| ≤ cutoff`; `tail_mass` bounds `∫_{|ξ|>cutoff} |f̂|`.
    Continuous {
        f_hat: Profile,
        cutoff: f64,
        tail_mass: f64,
        vanishing_order: f64,
        vanishing_constant: f64,
    },
    /// Point masses `(ξ, weight)`: the integral collapses to a finite sum.
    Atoms(Vec<(f64, Complex64)>),
}

impl fmt::Debug for FreqProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreqProfile::Continuous {
                cutoff,
                tail_mass,
                vanishing_order,
                vanishing_constant,
                ..
            } => f
                .debug_struct("Continuous")
                .field("cutoff", cutoff)
                .field("tail_mass", tail_mass)
                .field("vanishing_order", vanishing_order)
                .field("vanishing_constant", vanishing_constant)
                .finish(),
            FreqProfile::Atoms(a) => f.debug_tuple("Atoms").field(a).finish(),
        }
    }
}

impl FreqProfile {
    pub fn continuous<F>(
        f_hat: F,
        cutoff: f64,
        tail_mass: f64,
        vanishing_order: f64,
        vanishing_constant: f64,
    ) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        FreqProfile::Continuous {
            f_hat: Arc::new(f_hat),
            cutoff,
            tail_mass,
            vanishing_order,
            vanishing_constant,
        }
    }
}

/// Panel density and exclusion for [`group_quadrature`].
#[derive(Debug, Clone, Copy)]
pub struct GroupQuadParams {
    /// Phase change allowed across one 16-point panel at the base level.
    pub phase_per_panel: f64,
    /// Half-width of the excluded interval around ξ = 0 at the base level.
    pub exclusion_radius: f64,
    pub tolerance: f64,
}

impl Default for GroupQuadParams {
    fn default() -> Self {
        Self {
            phase_per_panel: 4.0,
            exclusion_radius: 0.05,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadValue {
    pub value: Complex64,
    pub error: f64,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `(2π)^{-1/2} ∫ e^{i[t(ξ³ ± 1/ξ) + xξ]} f̂(ξ) dξ`, the group applied to `f` and
/// evaluated at `x` directly on the line.
///
/// The value is computed at two panel densities; the reported error is their
/// difference plus the bounds for the excluded neighbourhood of 0 and the tail.
pub fn group_quadrature(
    profile: &FreqProfile,
    x: f64,
    t: f64,
    sign: SignChoice,
    params: &GroupQuadParams,
) -> Result<QuadValue> {
    match profile {
        FreqProfile::Atoms(atoms) => {
            let mut value = Complex64::new(0.0, 0.0);
            for &(xi, w) in atoms {
                if xi == 0.0 {
                    return Err(Error::OutOfRange {
                        name: "xi",
                        value: 0.0,
                        range: "ξ ≠ 0",
                    });
                }
                value += w * Complex64::from_polar(INV_SQRT_2PI, phase_unchecked(xi, t, sign) + x * xi);
            }
            Ok(QuadValue { value, error: 0.0 })
        }
        FreqProfile::Continuous {
            f_hat,
            cutoff,
            tail_mass,
            vanishing_order,
            vanishing_constant,
        } => {
            let rho = params.exclusion_radius;
            if !(rho > 0.0 && rho < *cutoff) {
                return Err(Error::OutOfRange {
                    name: "exclusion_radius",
                    value: rho,
                    range: "(0, cutoff)",
                });
            }
            let coarse = integrate(f_hat, x, t, sign, rho, *cutoff, params.phase_per_panel);
            let fine_rho = 0.5 * rho;
            let fine = integrate(f_hat, x, t, sign, fine_rho, *cutoff, 0.5 * params.phase_per_panel);
            let p = *vanishing_order;
            let exclusion =
                2.0 * vanishing_constant * fine_rho.powf(p + 1.0) / (p + 1.0) * INV_SQRT_2PI;
            let error = (fine - coarse).norm() + exclusion + tail_mass * INV_SQRT_2PI;
            if !(error <= params.tolerance) {
                return Err(Error::Quadrature {
                    x,
                    estimate: error,
                    tolerance: params.tolerance,
                });
            }
            Ok(QuadValue { value: fine, error })
        }
    }
}

/// Panels on [ρ, cutoff], each spanning at most `theta` radians of phase
/// and at most half its left endpoint.
fn panels(rho: f64, cutoff: f64, t: f64, x: f64, theta: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = rho;
    while a < cutoff {
        let hi = 1.5 * a;
        let rate = t.abs() * (3.0 * hi * hi + 1.0 / (a * a)) + x.abs();
        let h = (theta / rate).min(0.5 * a).min(cutoff - a);
        out.push((a, a + h));
        a += h;
    }
    out
}

fn integrate(
    f_hat: &Profile,
    x: f64,
    t: f64,
    sign: SignChoice,
    rho: f64,
    cutoff: f64,
    theta: f64,
) -> Complex64 {
    let rule = gauss16();
    let pieces: Vec<Complex64> = panels(rho, cutoff, t, x, theta)
        .into_par_iter()
        .map(|(a, b)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, w) in rule.mapped(a, b) {
                for s in [xi, -xi] {
                    let phase = phase_unchecked(s, t, sign) + x * s;
                    acc += f_hat(s) * Complex64::from_polar(w, phase);
                }
            }
            acc
        })
        .collect();
    pieces.into_iter().sum::<Complex64>() * INV_SQRT_2PI
}
