//! The linear group `U±(t)` as an exact Fourier multiplier, and a direct
//! oscillatory-quadrature evaluation of the same operator on the line.

mod quadrature;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use quadrature::{group_quadrature, FreqProfile, GroupQuadParams, QuadValue};

use crate::error::{Error, Result};
use crate::grid_spectral::{apply_multiplier, GridSpec, SpectralField};

/// Largest admissible `|t|·max|ξ|³` before the cubic phase loses all digits.
pub const PHASE_BUDGET: f64 = 1e15;

/// Sign in front of the rotation term `∂ₓ⁻¹u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignChoice {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-", alias = "−")]
    Minus,
}

impl SignChoice {
    pub const BOTH: [SignChoice; 2] = [SignChoice::Plus, SignChoice::Minus];

    pub fn as_f64(self) -> f64 {
        match self {
            SignChoice::Plus => 1.0,
            SignChoice::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            SignChoice::Plus => "+",
            SignChoice::Minus => "-",
        }
    }
}

impl fmt::Display for SignChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl std::str::FromStr for SignChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(SignChoice::Plus),
            "-" | "−" | "minus" => Ok(SignChoice::Minus),
            other => Err(Error::config("sign", format!("expected \"+\" or \"-\", got {other:?}"))),
        }
    }
}

/// Dispersion phase `t(ξ³ ± 1/ξ)`.
pub fn linear_phase(xi: f64, t: f64, sign: SignChoice) -> Result<f64> {
    if xi == 0.0 {
        return Err(Error::OutOfRange {
            name: "xi",
            value: xi,
            range: "ξ ≠ 0",
        });
    }
    Ok(phase_unchecked(xi, t, sign))
}

#[inline]
pub(crate) fn phase_unchecked(xi: f64, t: f64, sign: SignChoice) -> f64 {
    t * (xi * xi * xi + sign.as_f64() / xi)
}

pub(crate) fn check_phase_budget(grid: &GridSpec, t: f64) -> Result<()> {
    let w = grid.max_frequency();
    let budget = t.abs() * w * w * w;
    if budget > PHASE_BUDGET {
        Err(Error::PhaseOverflow(budget))
    } else {
        Ok(())
    }
}

/// Per-slot multipliers `e^{i t(ξ³ ± 1/ξ)}`, with the zero and Nyquist slots set to 0.
pub fn group_multipliers(grid: &GridSpec, t: f64, sign: SignChoice) -> Result<Vec<Complex64>> {
    check_phase_budget(grid, t)?;
    let ny = grid.nyquist_slot();
    Ok(grid
        .frequencies()
        .iter()
        .enumerate()
        .map(|(j, &xi)| {
            if j == 0 || j == ny {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, phase_unchecked(xi, t, sign))
            }
        })
        .collect())
}

/// `U±(t) f`.
pub fn apply_group(field: &SpectralField, t: f64, sign: SignChoice) -> Result<SpectralField> {
    field.require_mean_zero("apply_group")?;
    check_phase_budget(field.grid(), t)?;
    Ok(apply_multiplier(field, true, |xi| {
        Complex64::from_polar(1.0, phase_unchecked(xi, t, sign))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::{antiderivative, fractional_derivative, make_grid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_field(grid: &Arc<GridSpec>, seed: u64, band: usize) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n_points();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for k in 1..=band {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            spec[k] = c;
            spec[n - k] = c.conj();
        }
        SpectralField::from_spectral(grid, spec).unwrap()
    }

    fn l2_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.sub(b).unwrap().l2_norm()
    }

    #[test]
    fn phase_examples() {
        assert_eq!(linear_phase(1.0, 1.0, SignChoice::Plus).unwrap(), 2.0);
        assert_eq!(linear_phase(2.0, 0.5, SignChoice::Minus).unwrap(), 3.75);
        assert_eq!(linear_phase(-1.0, 1.0, SignChoice::Plus).unwrap(), -2.0);
        assert!(linear_phase(0.0, 1.0, SignChoice::Plus).is_err());
    }

    #[test]
    fn sign_round_trips_through_text() {
        for s in SignChoice::BOTH {
            assert_eq!(s.symbol().parse::<SignChoice>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<SignChoice>(&json).unwrap(), s);
        }
        assert_eq!("−".parse::<SignChoice>().unwrap(), SignChoice::Minus);
        assert_eq!(
            serde_json::from_str::<SignChoice>("\"−\"").unwrap(),
            SignChoice::Minus
        );
        assert!("x".parse::<SignChoice>().is_err());
    }

    #[test]
    fn identity_at_zero_time() {
        let g = make_grid(128, 16.0).unwrap();
        let f = random_field(&g, 4, 30);
        let u = apply_group(&f, 0.0, SignChoice::Minus).unwrap();
        assert!(l2_diff(&u, &f) < 1e-14 * f.l2_norm());
    }

    #[test]
    fn rejects_phase_overflow_and_nonzero_mean() {
        let g = make_grid(4096, 1.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| (std::f64::consts::PI * x).sin());
        assert!(matches!(
            apply_group(&f, 1e6, SignChoice::Plus),
            Err(Error::PhaseOverflow(_))
        ));
        let h = SpectralField::from_fn(&g, |x| 1.0 + (std::f64::consts::PI * x).sin());
        assert!(matches!(
            apply_group(&h, 1.0, SignChoice::Plus),
            Err(Error::NotMeanZero { .. })
        ));
    }

    #[test]
    fn single_mode_evolves_by_phase() {
        let l = std::f64::consts::PI;
        let g = make_grid(64, l).unwrap();
        let k = 3.0;
        let t = 0.7;
        let f = SpectralField::from_fn(&g, |x| (k * x).cos());
        let u = apply_group(&f, t, SignChoice::Plus).unwrap();
        let w = t * (k * k * k + 1.0 / k);
        let expect = SpectralField::from_fn(&g, |x| (k * x + w).cos());
        assert!(l2_diff(&u, &expect) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn unitary_and_group_law(seed in 0u64..10_000, s in -5.0f64..5.0, t in -5.0f64..5.0, plus in any::<bool>()) {
            let sign = if plus { SignChoice::Plus } else { SignChoice::Minus };
            let g = make_grid(256, 32.0).unwrap();
            let f = random_field(&g, seed, 32);
            let n0 = f.l2_norm();
            let ut = apply_group(&f, t, sign).unwrap();
            prop_assert!((ut.l2_norm() - n0).abs() <= 1e-12 * n0);
            let composed = apply_group(&apply_group(&f, s, sign).unwrap(), t, sign).unwrap();
            let direct = apply_group(&f, s + t, sign).unwrap();
            prop_assert!(l2_diff(&composed, &direct) <= 1e-12 * n0);
            let back = apply_group(&ut, -t, sign).unwrap();
            prop_assert!(l2_diff(&back, &f) <= 1e-12 * n0);
        }

        #[test]
        fn commutes_with_multipliers(seed in 0u64..10_000, t in 0.0f64..10.0, b in -1.0f64..1.0) {
            let g = make_grid(128, 16.0).unwrap();
            let f = random_field(&g, seed, 16);
            let sign = SignChoice::Minus;
            let a = fractional_derivative(&apply_group(&f, t, sign).unwrap(), b).unwrap();
            let c = apply_group(&fractional_derivative(&f, b).unwrap(), t, sign).unwrap();
            prop_assert!(l2_diff(&a, &c) <= 1e-12 * a.l2_norm().max(1e-300));
            let a = antiderivative(&apply_group(&f, t, sign).unwrap()).unwrap();
            let c = apply_group(&antiderivative(&f).unwrap(), t, sign).unwrap();
            prop_assert!(l2_diff(&a, &c) <= 1e-12 * a.l2_norm());
        }
    }
}
