//! Duhamel formulation, Picard iteration and a reference integrator.
//!
//! The integral operator is
//! `Ψ(v)(t) = U(t)u₀ - ∫₀ᵗ U(t - t')(v∂ₓv)(t') dt'`. Writing
//! `U(t - t') = U(t)U(-t')` turns every time integral into a running
//! integral of `U(-t')N(v(t'))`, so one sweep costs `O(M)` multiplier
//! applications while keeping the composite fourth-order rule in `t'`.

mod checkpoint;
mod etd;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use etd::reference_solve;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{dealiased_product, spatial_derivative, SpectralField};
use crate::norms::{weighted_norm, xs_norm, xt_distance, z_norms, Trajectory};
use crate::propagator::{apply_group, group_multipliers, SignChoice};
use crate::quad::cumulative_integrals;

/// Time grid, stopping rule and equation parameters of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    /// Final time `T`.
    pub horizon: f64,
    pub dt: f64,
    /// Stop once successive iterates are closer than this in the `X_T` norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Two-thirds truncation of the quadratic term.
    pub dealias: bool,
    pub sign: SignChoice,
    pub s: f64,
    /// Constant `C_s` used when recording the ball radius.
    pub ball_constant: f64,
    /// Drops the quadratic term, leaving the linear group.
    pub linear_only: bool,
}

impl PicardConfig {
    pub fn new(horizon: f64, dt: f64, sign: SignChoice, s: f64) -> Self {
        Self {
            horizon,
            dt,
            tol: 1e-8,
            max_iter: 100,
            dealias: true,
            sign,
            s,
            ball_constant: 1.0,
            linear_only: false,
        }
    }

    /// Number of time steps `M = T/dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.horizon.is_finite()) {
            return Err(Error::TimeGrid(format!(
                "T = {} and dt = {} must be positive",
                self.horizon, self.dt
            )));
        }
        let ratio = self.horizon / self.dt;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio || m < 4.0 {
            return Err(Error::TimeGrid(format!(
                "T/dt = {ratio} must be an integer of at least 4"
            )));
        }
        Ok(m as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.steps()?;
        if !(self.tol > 0.0) {
            return Err(Error::OutOfRange {
                name: "tol",
                value: self.tol,
                range: "(0, ∞)",
            });
        }
        if self.max_iter == 0 {
            return Err(Error::OutOfRange {
                name: "max_iter",
                value: 0.0,
                range: "≥ 1",
            });
        }
        check_s(self.s)?;
        if !(self.ball_constant > 0.0) {
            return Err(Error::OutOfRange {
                name: "ball_constant",
                value: self.ball_constant,
                range: "(0, ∞)",
            });
        }
        Ok(())
    }

    /// The same configuration with a different final time.
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.75 && s <= 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            range: "(3/4, 1]",
        });
    }
    Ok(())
}

/// Record of one Picard run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    pub iterates: usize,
    /// `‖v^{n+1} - v^n‖_{X_T}` in iteration order.
    pub successive_distances: Vec<f64>,
    /// Ratios of consecutive distances.
    pub contraction_ratios: Vec<f64>,
    /// `‖v - Ψ(v)‖_{X_T}` for the returned trajectory.
    pub final_residual: f64,
    /// `a = 2C_s[(1 + T^{1/3+s/3})‖u₀‖_{X_s} + ‖|x|^{s/2}u₀‖]`.
    pub ball_radius: f64,
    /// `(‖u₀‖_{X_s}, ‖|x|^{s/2}u₀‖)`.
    pub a_formula_inputs: (f64, f64),
}

impl PicardDiagnostics {
    pub fn max_ratio(&self) -> f64 {
        self.contraction_ratios.iter().fold(0.0, |m, r| m.max(*r))
    }
}

/// `u∂ₓu = ½∂ₓ(u²)`, with the square formed pseudospectrally.
pub fn nonlinearity(field: &SpectralField, dealias: bool) -> Result<SpectralField> {
    field.require_mean_zero("nonlinearity")?;
    let square = if dealias {
        dealiased_product(field, field)?
    } else {
        let sq = field.physical().iter().map(|u| u * u).collect();
        SpectralField::from_physical(field.grid(), sq)?
    };
    Ok(spatial_derivative(&square, 1)?.scale(0.5))
}

fn forcing(v: &SpectralField, cfg: &PicardConfig) -> Result<SpectralField> {
    if cfg.linear_only {
        Ok(SpectralField::zeros(v.grid()))
    } else {
        nonlinearity(v, cfg.dealias)
    }
}

/// `t ↦ U(t)u₀` on the configured time grid.
pub fn free_evolution(u0: &SpectralField, cfg: &PicardConfig) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    let states = (0..=steps)
        .into_par_iter()
        .map(|m| {
            if m == 0 {
                Ok(u0.clone())
            } else {
                apply_group(u0, m as f64 * cfg.dt, cfg.sign)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(states, cfg.dt, cfg.sign)
}

/// One application of the Duhamel operator.
pub fn psi_apply(traj: &Trajectory, u0: &SpectralField, cfg: &PicardConfig) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    u0.require_mean_zero("psi_apply")?;
    if traj.len() != steps + 1 || (traj.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::TimeGrid(format!(
            "trajectory has {} samples at dt = {}, config expects {} at dt = {}",
            traj.len(),
            traj.dt(),
            steps + 1,
            cfg.dt
        )));
    }
    if *traj.grid() != *u0.grid() || traj.sign() != cfg.sign {
        return Err(Error::GridMismatch);
    }
    let grid = u0.grid();
    let pulled_back: Vec<Vec<Complex64>> = traj
        .states()
        .par_iter()
        .enumerate()
        .map(|(m, v)| {
            let n = forcing(v, cfg)?;
            let back = group_multipliers(grid, -(m as f64) * cfg.dt, cfg.sign)?;
            Ok(n.spectral().iter().zip(&back).map(|(a, b)| a * b).collect())
        })
        .collect::<Result<_>>()?;
    let integrals = cumulative_integrals(&pulled_back, cfg.dt);
    let states = integrals
        .par_iter()
        .enumerate()
        .map(|(m, acc)| {
            let fwd = group_multipliers(grid, m as f64 * cfg.dt, cfg.sign)?;
            let spectral = u0
                .spectral()
                .iter()
                .zip(acc)
                .zip(&fwd)
                .enumerate()
                .map(|(j, ((u, i), w))| if j == 0 { Complex64::new(0.0, 0.0) } else { (u - i) * w })
                .collect::<Vec<_>>();
            let mut field = SpectralField::from_spectral_unchecked(grid, spectral);
            if m == 0 {
                // the empty integral leaves u₀ itself, Nyquist mode included
                field = u0.clone();
            }
            Ok(field)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(states, cfg.dt, cfg.sign)
}

/// `(‖u₀‖_{X_s}, ‖|x|^{s/2}u₀‖)`.
pub fn ball_inputs(u0: &SpectralField, s: f64) -> Result<(f64, f64)> {
    Ok((xs_norm(u0, s)?, weighted_norm(u0, 0.5 * s)?))
}

/// Ball radius `a` for final time `horizon`.
pub fn ball_radius(inputs: (f64, f64), s: f64, horizon: f64, c_s: f64) -> f64 {
    2.0 * c_s * ((1.0 + horizon.powf(1.0 / 3.0 + s / 3.0)) * inputs.0 + inputs.1)
}

/// Number of consecutive non-contracting steps that aborts the iteration.
const STALL_LIMIT: usize = 3;

/// Iterates `v^{n+1} = Ψ(v^n)` from the free evolution until successive
/// iterates are within `cfg.tol` in the `X_T` norm.
pub fn picard_solve(u0: &SpectralField, cfg: &PicardConfig) -> Result<(Trajectory, PicardDiagnostics)> {
    cfg.validate()?;
    u0.require_mean_zero("picard_solve")?;
    let s = cfg.s;
    let inputs = ball_inputs(u0, s)?;
    let mut diag = PicardDiagnostics {
        a_formula_inputs: inputs,
        ball_radius: ball_radius(inputs, s, cfg.horizon, cfg.ball_constant),
        ..Default::default()
    };
    let mut v = free_evolution(u0, cfg)?;
    let mut stalled = 0;
    for iter in 1..=cfg.max_iter {
        let next = psi_apply(&v, u0, cfg)?;
        let d = xt_distance(&next, &v, s)?;
        diag.iterates = iter;
        if let Some(&prev) = diag.successive_distances.last() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            diag.contraction_ratios.push(ratio);
            stalled = if ratio >= 1.0 { stalled + 1 } else { 0 };
        }
        diag.successive_distances.push(d);
        v = next;
        if !d.is_finite() {
            return Err(Error::Picard {
                reason: format!("distance became {d} at iterate {iter}"),
                diagnostics: Box::new(diag),
            });
        }
        if d < cfg.tol {
            let check = psi_apply(&v, u0, cfg)?;
            diag.final_residual = xt_distance(&check, &v, s)?;
            return Ok((v, diag));
        }
        if stalled >= STALL_LIMIT {
            return Err(Error::Picard {
                reason: format!(
                    "contraction ratio ≥ 1 on {STALL_LIMIT} consecutive iterates; T = {} is too large for this datum",
                    cfg.horizon
                ),
                diagnostics: Box::new(diag),
            });
        }
    }
    Err(Error::Picard {
        reason: format!("no convergence within {} iterates", cfg.max_iter),
        diagnostics: Box::new(diag),
    })
}

/// Upper end of the bisection window for the existence time.
pub const EXISTENCE_WINDOW: f64 = 100.0;

/// `C_s T^{1/2}(1 + T^{1/3+s/3})(1 + T^{1/4} + T^{1/2}) a`.
pub fn smallness_lhs(horizon: f64, s: f64, c_s: f64, a: f64) -> f64 {
    let t = horizon;
    c_s * t.sqrt() * (1.0 + t.powf(1.0 / 3.0 + s / 3.0)) * (1.0 + t.powf(0.25) + t.sqrt()) * a
}

fn bisect_existence<F: Fn(f64) -> f64>(lhs: F) -> f64 {
    if lhs(EXISTENCE_WINDOW) < 0.5 {
        return EXISTENCE_WINDOW;
    }
    let (mut lo, mut hi) = (0.0f64, EXISTENCE_WINDOW);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

fn check_constant(c_s: f64) -> Result<()> {
    if !(c_s > 0.0 && c_s.is_finite()) {
        return Err(Error::OutOfRange {
            name: "C_s",
            value: c_s,
            range: "(0, ∞)",
        });
    }
    Ok(())
}

/// Largest `T` in `(0, EXISTENCE_WINDOW]` with
/// `C_s T^{1/2}(1 + T^{1/3+s/3})(1 + T^{1/4} + T^{1/2}) a(T) < 1/2`,
/// where `a(T)` is the ball radius built from `u₀`.
pub fn existence_time(u0: &SpectralField, s: f64, c_s: f64) -> Result<f64> {
    check_s(s)?;
    check_constant(c_s)?;
    let inputs = ball_inputs(u0, s)?;
    Ok(bisect_existence(|t| {
        smallness_lhs(t, s, c_s, ball_radius(inputs, s, t, c_s))
    }))
}

/// The same condition with the radius `a` held fixed.
pub fn existence_time_fixed_radius(a: f64, s: f64, c_s: f64) -> Result<f64> {
    check_s(s)?;
    check_constant(c_s)?;
    if !(a >= 0.0) {
        return Err(Error::OutOfRange {
            name: "a",
            value: a,
            range: "[0, ∞)",
        });
    }
    Ok(bisect_existence(|t| smallness_lhs(t, s, c_s, a)))
}

/// Fixed unit-L² mean-zero bump `-x e^{-x²/2}` used as perturbation direction.
pub fn probe_direction(grid: &std::sync::Arc<crate::grid_spectral::GridSpec>) -> SpectralField {
    let f = SpectralField::from_fn(grid, |x| -x * (-0.5 * x * x).exp());
    let norm = f.l2_norm();
    f.scale(1.0 / norm)
}

/// `‖u - ũ‖_{X_T} / ‖u₀ - ũ₀‖_{Z_{s,s/2}}` for `ũ₀ = u₀ + ε·direction`.
pub fn lipschitz_probe_along(
    u0: &SpectralField,
    direction: &SpectralField,
    eps: f64,
    cfg: &PicardConfig,
) -> Result<f64> {
    if eps == 0.0 {
        return Ok(0.0);
    }
    let delta = direction.scale(eps);
    let perturbed = u0.add(&delta)?;
    let (a, _) = picard_solve(u0, cfg)?;
    let (b, _) = picard_solve(&perturbed, cfg)?;
    let data = z_norms(&delta, cfg.s, 0.5 * cfg.s)?.total();
    Ok(xt_distance(&a, &b, cfg.s)? / data)
}

/// [`lipschitz_probe_along`] in the direction of [`probe_direction`].
pub fn lipschitz_probe(u0: &SpectralField, eps: f64, cfg: &PicardConfig) -> Result<f64> {
    lipschitz_probe_along(u0, &probe_direction(u0.grid()), eps, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::{make_grid, padded_product, project_mean_zero};
    use crate::norms::xt_norm;
    use std::f64::consts::PI;

    fn datum(amp: f64) -> SpectralField {
        let g = make_grid(256, 32.0).unwrap();
        SpectralField::from_fn(&g, |x| -amp * x * (-0.5 * x * x).exp())
    }

    #[test]
    fn nonlinearity_of_zero_and_single_mode() {
        let g = make_grid(64, PI).unwrap();
        let z = nonlinearity(&SpectralField::zeros(&g), true).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let k = 5.0;
        let u = SpectralField::from_fn(&g, |x| (k * x).cos());
        let n = nonlinearity(&u, false).unwrap();
        for (j, c) in n.spectral().iter().enumerate() {
            let idx = crate::grid_spectral::signed_index(j, 64).abs();
            if idx != 10 {
                assert!(c.norm() < 1e-13, "mode {idx}: {c}");
            }
        }
        // ½∂ₓ cos² = -(k/2) sin 2kx
        for (x, v) in g.x().iter().zip(n.physical()) {
            assert!((v + 0.5 * k * (2.0 * k * x).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn conservative_and_advective_forms_agree() {
        let g = make_grid(96, PI).unwrap();
        let u = SpectralField::from_fn(&g, |x| x.sin() + 0.4 * (3.0 * x).cos() - 0.2 * (7.0 * x).sin());
        let conservative = nonlinearity(&u, true).unwrap();
        let ux = spatial_derivative(&u, 1).unwrap();
        let advective = project_mean_zero(&padded_product(&u, &ux).unwrap())
            .downsample(&g)
            .unwrap();
        for (a, b) in conservative.physical().iter().zip(advective.physical()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn time_grid_validation() {
        assert!(PicardConfig::new(1.0, 0.3, SignChoice::Plus, 0.9).steps().is_err());
        assert!(PicardConfig::new(0.3, 0.1, SignChoice::Plus, 0.9).steps().is_err());
        assert_eq!(PicardConfig::new(0.4, 0.1, SignChoice::Plus, 0.9).steps().unwrap(), 4);
        assert!(PicardConfig::new(0.4, 0.1, SignChoice::Plus, 0.7).validate().is_err());
    }

    #[test]
    fn psi_of_zero_is_free_flow_and_starts_at_datum() {
        let u0 = datum(0.3);
        let cfg = PicardConfig::new(0.1, 0.01, SignChoice::Minus, 0.9);
        let zero = Trajectory::constant(&SpectralField::zeros(u0.grid()), 0.01, 10, SignChoice::Minus).unwrap();
        let psi = psi_apply(&zero, &u0, &cfg).unwrap();
        let free = free_evolution(&u0, &cfg).unwrap();
        for (a, b) in psi.states().iter().zip(free.states()) {
            assert_eq!(a.spectral(), b.spectral());
        }
        let psi = psi_apply(&free, &u0, &cfg).unwrap();
        assert_eq!(psi.states()[0].spectral(), u0.spectral());
    }

    #[test]
    fn single_mode_first_correction_matches_perturbation_theory() {
        let g = make_grid(64, PI).unwrap();
        let k = 2.0;
        let sign = SignChoice::Plus;
        let w = |q: f64| q * q * q + sign.as_f64() / q;
        let t_end = 0.2;
        let cfg = PicardConfig::new(t_end, 1e-4, sign, 1.0);
        for eps in [1e-2, 1e-3] {
            let u0 = SpectralField::from_fn(&g, |x| eps * (k * x).cos());
            let free = free_evolution(&u0, &cfg).unwrap();
            let psi = psi_apply(&free, &u0, &cfg).unwrap();
            // U(t)cos kx = cos(kx + ω(k)t) with ω(ξ) = ξ³ ± 1/ξ
            // N(U(t')u₀) = -(ε²k/2) sin(2kx + 2ω(k)t'); propagate and integrate in closed form
            let t = t_end;
            let (wk, w2k) = (w(k), w(2.0 * k));
            let delta = 2.0 * wk - w2k;
            let exact = |x: f64| {
                let free = eps * (k * x + wk * t).cos();
                // ∫₀ᵗ sin(2kx + w2k t + delta t') dt'
                let integral = ((2.0 * k * x + w2k * t).cos() - (2.0 * k * x + w2k * t + delta * t).cos()) / delta;
                free + 0.5 * eps * eps * k * integral
            };
            let last = psi.last();
            let err = g
                .x()
                .iter()
                .zip(last.physical())
                .fold(0.0f64, |m, (&x, v)| m.max((v - exact(x)).abs()));
            assert!(err < 1e-9 * eps * eps, "eps = {eps}: error {err}");
        }
    }

    #[test]
    fn zero_datum_converges_immediately() {
        let g = make_grid(64, 8.0).unwrap();
        let cfg = PicardConfig::new(0.1, 0.01, SignChoice::Plus, 0.9);
        let (traj, diag) = picard_solve(&SpectralField::zeros(&g), &cfg).unwrap();
        assert_eq!(diag.iterates, 1);
        assert_eq!(xt_norm(&traj, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn small_datum_contracts_geometrically() {
        let u0 = datum(0.1);
        let cfg = PicardConfig::new(0.5, 0.01, SignChoice::Plus, 0.9);
        let (traj, diag) = picard_solve(&u0, &cfg).unwrap();
        assert!(diag.contraction_ratios.iter().all(|&r| r < 1.0), "{:?}", diag.contraction_ratios);
        assert!(diag.final_residual < 2.0 * cfg.tol);
        for st in traj.states() {
            assert!(st.zero_mode().norm() <= 1e-14);
        }
    }

    #[test]
    fn existence_time_fixed_radius_matches_scalar_root() {
        let s = 0.8;
        let t = existence_time_fixed_radius(1.0, s, 1.0).unwrap();
        // secant iteration on g(T) = T^{1/2}(1+T^{1/3+s/3})(1+T^{1/4}+T^{1/2}) - 1/2
        let g = |t: f64| t.sqrt() * (1.0 + t.powf(1.0 / 3.0 + s / 3.0)) * (1.0 + t.powf(0.25) + t.sqrt()) - 0.5;
        let (mut a, mut b) = (0.01f64, 0.1f64);
        for _ in 0..100 {
            let c = b - g(b) * (b - a) / (g(b) - g(a));
            a = b;
            b = c;
            if (b - a).abs() < 1e-15 {
                break;
            }
        }
        assert!((t - b).abs() < 1e-10, "{t} vs {b}");
        let t2 = existence_time_fixed_radius(2.0, s, 1.0).unwrap();
        assert!(t2 < t);
        assert_eq!(existence_time_fixed_radius(0.0, s, 1.0).unwrap(), EXISTENCE_WINDOW);
    }

    #[test]
    fn existence_time_decreases_with_amplitude() {
        let a = existence_time(&datum(0.1), 0.9, 1.0).unwrap();
        let b = existence_time(&datum(0.2), 0.9, 1.0).unwrap();
        assert!(b < a);
        let g = make_grid(32, 4.0).unwrap();
        assert_eq!(existence_time(&SpectralField::zeros(&g), 0.9, 1.0).unwrap(), EXISTENCE_WINDOW);
    }

    #[test]
    fn lipschitz_probe_zero_step() {
        let cfg = PicardConfig::new(0.1, 0.01, SignChoice::Plus, 0.9);
        assert_eq!(lipschitz_probe(&datum(0.1), 0.0, &cfg).unwrap(), 0.0);
    }
}
