//! Fourth-order exponential time differencing with the exact linear symbol.

use num_complex::Complex64;

use super::{forcing, PicardConfig};
use crate::error::{Error, Result};
use crate::grid_spectral::SpectralField;
use crate::norms::Trajectory;
use crate::propagator::phase_unchecked;

/// Points on the contour used to evaluate the φ-functions.
const CONTOUR_POINTS: usize = 64;

/// Growth of the L² norm beyond this factor aborts the integration.
const EXPLOSION_FACTOR: f64 = 10.0;

/// Per-mode coefficients of one step of size `h`.
struct Coefficients {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl Coefficients {
    /// Contour means on the unit circle around `hL`, which are exact for
    /// these entire functions up to the trapezoidal error on the circle.
    fn new(cfg: &PicardConfig, frequencies: &[f64], nyquist: usize) -> Self {
        let h = cfg.dt;
        let n = frequencies.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut c = Coefficients {
            e: vec![zero; n],
            e2: vec![zero; n],
            q: vec![zero; n],
            f1: vec![zero; n],
            f2: vec![zero; n],
            f3: vec![zero; n],
        };
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
                Complex64::from_polar(1.0, theta)
            })
            .collect();
        for (k, &xi) in frequencies.iter().enumerate() {
            if k == 0 || k == nyquist {
                continue;
            }
            let hl = Complex64::new(0.0, h * phase_unchecked(xi, 1.0, cfg.sign));
            c.e[k] = hl.exp();
            c.e2[k] = (hl * 0.5).exp();
            let mut acc = [zero; 4];
            for r in &roots {
                let z = hl + r;
                let ez = z.exp();
                let z3 = z * z * z;
                acc[0] += ((z * 0.5).exp() - 1.0) / z;
                acc[1] += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                acc[2] += (2.0 + z + ez * (z - 2.0)) / z3;
                acc[3] += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            let scale = h / CONTOUR_POINTS as f64;
            c.q[k] = acc[0] * scale;
            c.f1[k] = acc[1] * scale;
            c.f2[k] = acc[2] * scale;
            c.f3[k] = acc[3] * scale;
        }
        c
    }
}

fn combine(grid: &std::sync::Arc<crate::grid_spectral::GridSpec>, terms: &[(&[Complex64], &[Complex64])]) -> SpectralField {
    let n = grid.n_points();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (coef, vals) in terms {
        for ((o, c), v) in out.iter_mut().zip(coef.iter()).zip(vals.iter()) {
            *o += c * v;
        }
    }
    SpectralField::from_spectral_unchecked(grid, out)
}

/// Solves `û_t = i(ξ³ ± 1/ξ)û - (u∂ₓu)^` by ETDRK4 on the configured
/// time grid.
pub fn reference_solve(u0: &SpectralField, cfg: &PicardConfig) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    u0.require_mean_zero("reference_solve")?;
    let grid = u0.grid();
    let c = Coefficients::new(cfg, grid.frequencies(), grid.nyquist_slot());
    let rhs = |v: &SpectralField| -> Result<Vec<Complex64>> {
        Ok(forcing(v, cfg)?.spectral().iter().map(|z| -z).collect())
    };
    let initial = u0.l2_norm();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(u0.clone());
    let mut u = u0.clone();
    for m in 1..=steps {
        let nu = rhs(&u)?;
        let a = combine(grid, &[(&c.e2, u.spectral()), (&c.q, &nu)]);
        let na = rhs(&a)?;
        let b = combine(grid, &[(&c.e2, u.spectral()), (&c.q, &na)]);
        let nb = rhs(&b)?;
        let twice_nb_minus_nu: Vec<Complex64> = nb.iter().zip(&nu).map(|(x, y)| 2.0 * x - y).collect();
        let cc = combine(grid, &[(&c.e2, a.spectral()), (&c.q, &twice_nb_minus_nu)]);
        let nc = rhs(&cc)?;
        let na_plus_nb: Vec<Complex64> = na.iter().zip(&nb).map(|(x, y)| 2.0 * (x + y)).collect();
        u = combine(
            grid,
            &[
                (&c.e, u.spectral()),
                (&c.f1, &nu),
                (&c.f2, &na_plus_nb),
                (&c.f3, &nc),
            ],
        );
        let norm = u.l2_norm();
        if !norm.is_finite() || (initial > 0.0 && norm > EXPLOSION_FACTOR * initial) {
            return Err(Error::NormExplosion {
                t: m as f64 * cfg.dt,
                norm,
            });
        }
        states.push(u.clone());
    }
    Trajectory::new(states, cfg.dt, cfg.sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::make_grid;
    use crate::propagator::{apply_group, SignChoice};

    fn datum() -> SpectralField {
        let g = make_grid(256, 32.0).unwrap();
        SpectralField::from_fn(&g, |x| -0.2 * x * (-0.5 * x * x).exp())
    }

    #[test]
    fn linear_probe_reproduces_group() {
        let u0 = datum();
        let mut cfg = PicardConfig::new(0.5, 1e-3, SignChoice::Minus, 0.9);
        cfg.linear_only = true;
        let traj = reference_solve(&u0, &cfg).unwrap();
        let exact = apply_group(&u0, 0.5, SignChoice::Minus).unwrap();
        let err = traj.last().sub(&exact).unwrap().l2_norm();
        assert!(err <= 1e-12 * u0.l2_norm(), "{err}");
    }

    #[test]
    fn conserves_l2_norm() {
        let u0 = datum();
        let cfg = PicardConfig::new(1.0, 1e-3, SignChoice::Plus, 0.9);
        let traj = reference_solve(&u0, &cfg).unwrap();
        let drift = (traj.last().l2_norm() - u0.l2_norm()).abs() / u0.l2_norm();
        assert!(drift <= 1e-8, "{drift}");
    }

    #[test]
    fn fourth_order_under_halving() {
        let u0 = datum().scale(5.0);
        let t = 0.5;
        let solve = |dt: f64| {
            reference_solve(&u0, &PicardConfig::new(t, dt, SignChoice::Plus, 0.9))
                .unwrap()
                .last()
                .clone()
        };
        let fine = solve(0.5 / 640.0);
        let e1 = solve(0.5 / 40.0).sub(&fine).unwrap().l2_norm();
        let e2 = solve(0.5 / 80.0).sub(&fine).unwrap().l2_norm();
        let order = (e1 / e2).log2();
        assert!((3.5..=4.5).contains(&order), "order {order} ({e1:e}, {e2:e})");
    }
}
