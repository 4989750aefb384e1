//! Sobolev, homogeneous and weighted norms of fields, and the space-time
//! seminorms `n1..n6` of a trajectory whose sum is the solution-space norm.
//!
//! Spectral norms are evaluated with the discrete Plancherel weight `dξ`, so
//! they are exact identities of the grid representation. Weighted norms use
//! the fundamental-domain coordinate `x ∈ [-L, L)`.

mod trajectory;

pub use trajectory::{
    trajectory_norms, trajectory_rows, xt_distance, xt_norm, NormReport, Trajectory,
    NORM_CSV_HEADER,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::SpectralField;

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::OutOfRange { name, value, range });
    }
    Ok(())
}

/// `(Σ w(ξ_k) |û_k|² dξ)^{1/2}` over the nonzero modes.
fn weighted_spectral_norm<F: Fn(f64) -> f64>(field: &SpectralField, weight: F) -> f64 {
    let grid = field.grid();
    let sum: f64 = field
        .spectral()
        .iter()
        .zip(grid.frequencies())
        .skip(1)
        .map(|(c, &xi)| weight(xi) * c.norm_sqr())
        .sum();
    (sum * grid.dxi()).sqrt()
}

/// `‖f‖_{H^s} = ‖(1 + ξ²)^{s/2} f̂‖` for `s ∈ [0, 1]`.
pub fn hs_norm(field: &SpectralField, s: f64) -> Result<f64> {
    check_range("s", s, 0.0, 1.0, "[0, 1]")?;
    Ok(weighted_spectral_norm(field, |xi| (1.0 + xi * xi).powf(s)))
}

/// `‖D^b f‖ = ‖|ξ|^b f̂‖` for `b ∈ [-1, 1]`; negative orders need mean zero.
pub fn hom_norm(field: &SpectralField, b: f64) -> Result<f64> {
    check_range("b", b, -1.0, 1.0, "[-1, 1]")?;
    if b < 0.0 {
        field.require_mean_zero("hom_norm")?;
    }
    Ok(weighted_spectral_norm(field, |xi| xi.abs().powf(2.0 * b)))
}

/// `‖∂ₓ⁻¹ f‖`, which equals `hom_norm(f, -1)`.
pub fn antiderivative_norm(field: &SpectralField) -> Result<f64> {
    hom_norm(field, -1.0)
}

/// `(Σ |x_j|^{2r} |u_j|² dx)^{1/2}` for `r ∈ [0, 1]`.
pub fn weighted_norm(field: &SpectralField, r: f64) -> Result<f64> {
    check_range("r", r, 0.0, 1.0, "[0, 1]")?;
    let grid = field.grid();
    let sum: f64 = grid
        .x()
        .iter()
        .zip(field.physical())
        .map(|(x, u)| {
            let w = if r == 0.0 { 1.0 } else { x.abs().powf(2.0 * r) };
            w * u * u
        })
        .sum();
    Ok((sum * grid.dx()).sqrt())
}

/// `‖f‖_{X_s} = ‖f‖_{H^s} + ‖∂ₓ⁻¹ f‖`.
pub fn xs_norm(field: &SpectralField, s: f64) -> Result<f64> {
    Ok(hs_norm(field, s)? + antiderivative_norm(field)?)
}

/// The three magnitudes defining membership in `Z_{s,r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZNorms {
    pub hs: f64,
    pub hom_minus_s: f64,
    pub weighted: f64,
}

impl ZNorms {
    pub fn total(&self) -> f64 {
        self.hs + self.hom_minus_s + self.weighted
    }
}

/// `‖f‖_{H^s}`, `‖D^{-s} f‖` and `‖|x|^r f‖`.
///
/// On a grid these are always finite; growth under refinement is what
/// signals that the continuum quantity is infinite.
pub fn z_norms(field: &SpectralField, s: f64, r: f64) -> Result<ZNorms> {
    Ok(ZNorms {
        hs: hs_norm(field, s)?,
        hom_minus_s: hom_norm(field, -s)?,
        weighted: weighted_norm(field, r)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::{antiderivative, make_grid, project_mean_zero};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn random_field(seed: u64) -> SpectralField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = make_grid(128, 16.0).unwrap();
        let amps: Vec<(f64, f64, f64)> = (0..6)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.5..2.0)))
            .collect();
        let f = SpectralField::from_fn(&g, |x| {
            amps.iter()
                .map(|&(a, c, w)| a * (-(x - c).powi(2) / (w * w)).exp())
                .sum()
        });
        project_mean_zero(&f)
    }

    #[test]
    fn zero_orders_reduce_to_l2() {
        let f = random_field(1);
        let l2 = f.l2_norm();
        assert!((hs_norm(&f, 0.0).unwrap() - l2).abs() <= 1e-12 * l2);
        assert!((hom_norm(&f, 0.0).unwrap() - l2).abs() <= 1e-12 * l2);
        assert!((weighted_norm(&f, 0.0).unwrap() - l2).abs() <= 1e-12 * l2);
    }

    #[test]
    fn single_mode_values() {
        let l = 8.0;
        let g = make_grid(64, l).unwrap();
        let k = 3.0 * PI / l;
        let f = SpectralField::from_fn(&g, |x| 2.0 * (k * x).cos());
        let mass = f.l2_norm();
        let hs = hs_norm(&f, 0.8).unwrap();
        assert!((hs - (1.0 + k * k).powf(0.4) * mass).abs() <= 1e-12 * hs);
        let inv = hom_norm(&f, -1.0).unwrap();
        assert!((inv - mass / k).abs() <= 1e-12 * inv);
        let anti = antiderivative(&f).unwrap().l2_norm();
        assert!((inv - anti).abs() <= 1e-12 * inv);
    }

    #[test]
    fn weight_vanishes_on_origin_spike() {
        let g = make_grid(32, 4.0).unwrap();
        let mut u = vec![0.0; 32];
        let origin = g.x().iter().position(|&x| x == 0.0).unwrap();
        u[origin] = 1.0;
        let f = SpectralField::from_physical(&g, u).unwrap();
        assert_eq!(weighted_norm(&f, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn shifted_bump_gains_root_two() {
        let g = make_grid(4096, 8.0).unwrap();
        let w = 0.02;
        let bump = |c: f64| SpectralField::from_fn(&g, move |x| (-(x - c).powi(2) / (2.0 * w * w)).exp());
        let at1 = weighted_norm(&bump(1.0), 0.5).unwrap();
        let at2 = weighted_norm(&bump(2.0), 0.5).unwrap();
        // ∫|x| e^{-(x-c)²/w²} dx ≈ c w √π for w ≪ c
        assert!((at2 / at1 - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn rejects_out_of_range_orders() {
        let f = random_field(2);
        assert!(hs_norm(&f, 1.5).is_err());
        assert!(hom_norm(&f, -1.5).is_err());
        assert!(weighted_norm(&f, -0.1).is_err());
        let g = make_grid(16, 1.0).unwrap();
        let c = SpectralField::from_fn(&g, |_| 1.0);
        assert!(hom_norm(&c, -0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn negative_order_bounded_by_antiderivative_plus_l2(seed in 0u64..1000, s in 0.01f64..1.0) {
            let f = random_field(seed);
            let lhs = hom_norm(&f, -s).unwrap();
            let rhs = antiderivative(&f).unwrap().l2_norm() + f.l2_norm();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn norms_are_homogeneous(seed in 0u64..1000, lambda in 0.1f64..10.0) {
            let f = random_field(seed);
            let g = f.scale(lambda);
            for (a, b) in [
                (hs_norm(&f, 0.9).unwrap(), hs_norm(&g, 0.9).unwrap()),
                (hom_norm(&f, -0.9).unwrap(), hom_norm(&g, -0.9).unwrap()),
                (weighted_norm(&f, 0.45).unwrap(), weighted_norm(&g, 0.45).unwrap()),
            ] {
                prop_assert!((b - lambda * a).abs() <= 1e-12 * b);
            }
        }

        #[test]
        fn hs_dominates_l2(seed in 0u64..1000, s in 0.0f64..1.0) {
            let f = random_field(seed);
            prop_assert!(hs_norm(&f, s).unwrap() >= f.spectral_l2_norm() * (1.0 - 1e-14));
        }
    }
}
