//! The Stein derivative
//! `𝒟^b f(x) = (∫ |f(x) - f(y)|² |x - y|^{-1-2b} dy)^{1/2}` by singular
//! quadrature, its L² norm for grid fields, and the product inequalities
//! relating it to the multiplier derivative `D^b`.

mod func;
mod l2;
mod products;
mod stein;

pub use func::{
    sampled_lipschitz, BandLimited, Constant, CubicPhase, FarField, FuncOnLine, Gaussian,
    InversePhase, PlaneWave, Product, Scaled, Shifted,
};
pub use l2::stein_l2_norm;
pub use products::{
    leibniz_defect, product_l2_check, product_pointwise_check, LineQuadSpec, ProductCheck,
};
pub use stein::{stein_derivative, stein_estimate, SteinQuadSpec, SteinValue};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::{fractional_derivative, make_grid, SpectralField};
    use num_complex::Complex64;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;
    use std::sync::Arc;

    /// `c_b² = ∫ |e^{iw} - 1|² |w|^{-1-2b} dw = 2Γ(1-2b)cos(πb)/b`, continued to b = 1/2.
    fn c_b(b: f64) -> f64 {
        if (b - 0.5).abs() < 1e-12 {
            return (2.0 * PI).sqrt();
        }
        (2.0 * gamma(1.0 - 2.0 * b) * (PI * b).cos() / b).sqrt()
    }

    #[test]
    fn constant_has_zero_derivative() {
        let f = Constant(Complex64::new(2.5, -1.0));
        for &x in &[-3.0, 0.0, 7.5] {
            let v = stein_derivative(&f, x, 0.3, &SteinQuadSpec::default()).unwrap();
            assert!(v.value <= 1e-12);
        }
    }

    #[test]
    fn plane_wave_matches_closed_form() {
        for &(a, b) in &[(1.0, 0.25), (4.0, 0.5), (2.0, 0.7)] {
            let v = stein_derivative(&PlaneWave::new(a), 0.3, b, &SteinQuadSpec::default()).unwrap();
            let exact = c_b(b) * a.powf(b);
            assert!((v.value - exact).abs() <= 1e-6 * exact, "a={a} b={b}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn rejects_b_outside_unit_interval() {
        let f = PlaneWave::new(1.0);
        assert!(stein_derivative(&f, 0.0, 0.0, &SteinQuadSpec::default()).is_err());
        assert!(stein_derivative(&f, 0.0, 1.0, &SteinQuadSpec::default()).is_err());
    }

    #[test]
    fn gaussian_scaling_and_translation() {
        let spec = SteinQuadSpec::default();
        let g: Arc<dyn FuncOnLine> = Arc::new(Gaussian::new(1.0, 0.2, 1.0));
        let b = 0.4;
        for lambda in [0.5, 2.0] {
            let scaled = Scaled {
                inner: g.clone(),
                lambda,
            };
            for i in 0..10 {
                let x = -2.0 + 0.45 * i as f64;
                let lhs = stein_derivative(&scaled, x, b, &spec).unwrap();
                let rhs = stein_derivative(g.as_ref(), lambda * x, b, &spec).unwrap();
                let expect = lambda.powf(b) * rhs.value;
                let tol = lhs.error + lambda.powf(b) * rhs.error + 1e-6 * expect;
                assert!((lhs.value - expect).abs() <= tol, "λ={lambda} x={x}");
            }
        }
        let shifted = Shifted {
            inner: g.clone(),
            shift: 1.3,
        };
        for &x in &[-1.0, 0.4, 2.2] {
            let a = stein_derivative(&shifted, x, b, &spec).unwrap();
            let c = stein_derivative(g.as_ref(), x - 1.3, b, &spec).unwrap();
            assert!((a.value - c.value).abs() <= a.error + c.error);
        }
    }

    #[test]
    fn l2_norm_of_single_mode() {
        let l = 16.0;
        let g = make_grid(128, l).unwrap();
        let k = 5.0 * PI / l;
        let f = SpectralField::from_fn(&g, |x| (k * x).cos());
        let b = 0.25;
        let v = stein_l2_norm(&f, b, &SteinQuadSpec::default()).unwrap();
        let exact = c_b(b) * k.powf(b) * f.l2_norm();
        assert!((v.value - exact).abs() <= 1e-7 * exact, "{} vs {exact}", v.value);
        let zero = SpectralField::zeros(&g);
        assert_eq!(stein_l2_norm(&zero, b, &SteinQuadSpec::default()).unwrap().value, 0.0);
    }

    #[test]
    fn l2_norm_agrees_with_multiplier_on_the_torus() {
        let g = make_grid(128, 8.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| x * (-x * x).exp() + 0.3 * (-(x - 1.0).powi(2)).exp());
        let f = crate::grid_spectral::project_mean_zero(&f);
        for b in [0.25, 0.5] {
            let v = stein_l2_norm(&f, b, &SteinQuadSpec::default()).unwrap();
            let d = fractional_derivative(&f, b).unwrap().l2_norm();
            assert!((v.value - c_b(b) * d).abs() <= 1e-6 * v.value, "b={b}");
        }
    }

    #[test]
    fn pointwise_matches_band_limited_l2() {
        let g = make_grid(64, 4.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| (PI * x / 4.0).sin() + 0.5 * (3.0 * PI * x / 4.0).cos());
        let bl = BandLimited::new(f.clone());
        let spec = SteinQuadSpec::default();
        let b = 0.3;
        let mut acc = 0.0;
        for &x in g.x() {
            acc += stein_derivative(&bl, x, b, &spec).unwrap().value.powi(2);
        }
        let pointwise = (acc * g.dx()).sqrt();
        let l2 = stein_l2_norm(&f, b, &spec).unwrap().value;
        assert!((pointwise - l2).abs() <= 1e-6 * l2);
    }

    #[test]
    fn pointwise_product_trivial_cases() {
        let spec = SteinQuadSpec::default();
        let one: Arc<dyn FuncOnLine> = Arc::new(Constant(Complex64::new(1.0, 0.0)));
        let zero: Arc<dyn FuncOnLine> = Arc::new(Constant(Complex64::new(0.0, 0.0)));
        let g: Arc<dyn FuncOnLine> = Arc::new(Gaussian::new(1.0, 0.0, 0.8).modulated(1.5));
        let r = product_pointwise_check(one, g.clone(), 0.4, 0.3, &spec).unwrap();
        assert!(r.residual.abs() <= r.tol + 1e-12);
        let r = product_pointwise_check(g, zero, 0.4, 0.3, &spec).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
    }

    #[test]
    fn leibniz_defect_single_modes() {
        let g = make_grid(64, PI).unwrap();
        let alpha = 0.6;
        for &(k1, k2) in &[(3.0f64, 5.0f64), (4.0, 4.0), (7.0, 2.0)] {
            let f = SpectralField::from_fn(&g, |x| (k1 * x).cos());
            let h = SpectralField::from_fn(&g, |x| (k2 * x).cos());
            let (defect, bound) = leibniz_defect(&f, &h, alpha).unwrap();
            let p = |k: f64| k.abs().powf(alpha);
            let a = 0.5 * (p(k1 + k2) - p(k1) - p(k2));
            let c = 0.5 * (p(k1 - k2) - p(k1) - p(k2));
            let diff_norm = if k1 == k2 { 2.0 * PI } else { PI };
            let exact = (a * a * PI + c * c * diff_norm).sqrt();
            assert!((defect - exact).abs() < 1e-12 * exact.max(1.0), "{defect} vs {exact}");
            assert!((bound - p(k1) * PI.sqrt()).abs() < 1e-12);
        }
        let f = SpectralField::from_fn(&g, |x| x.sin());
        let zero = SpectralField::zeros(&g);
        assert_eq!(leibniz_defect(&f, &zero, 0.3).unwrap(), (0.0, 0.0));
    }
}
