use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{antiderivative_norm, hom_norm, hs_norm, weighted_norm};
use crate::error::{Error, Result};
use crate::grid_spectral::{apply_multiplier, GridParams, GridSpec, SpectralField};
use crate::propagator::SignChoice;
use crate::quad::cumulative_integrals;

/// States on a uniform time grid `t_m = m·dt`, `m = 0..=M`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Arc<GridSpec>,
    dt: f64,
    times: Vec<f64>,
    states: Vec<SpectralField>,
    sign: SignChoice,
}

impl Trajectory {
    pub fn new(states: Vec<SpectralField>, dt: f64, sign: SignChoice) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::TimeGrid("trajectory without states".into()))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::TimeGrid(format!("dt = {dt} must be positive")));
        }
        let grid = first.grid().clone();
        for s in &states {
            s.require_same_grid(first)?;
            s.require_mean_zero("Trajectory::new")?;
        }
        let times = (0..states.len()).map(|m| m as f64 * dt).collect();
        Ok(Self {
            grid,
            dt,
            times,
            states,
            sign,
        })
    }

    /// `t ↦ f` on `steps + 1` time samples.
    pub fn constant(field: &SpectralField, dt: f64, steps: usize, sign: SignChoice) -> Result<Self> {
        Self::new(vec![field.clone(); steps + 1], dt, sign)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    pub fn into_states(self) -> Vec<SpectralField> {
        self.states
    }

    pub fn sign(&self) -> SignChoice {
        self.sign
    }

    /// Number of stored slices, `M + 1`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `T = M·dt`.
    pub fn horizon(&self) -> f64 {
        self.dt * (self.states.len() - 1) as f64
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("non-empty by construction")
    }

    pub fn scale(&self, factor: f64) -> Trajectory {
        Trajectory {
            states: self.states.iter().map(|s| s.scale(factor)).collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.require_compatible(other)?;
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            states,
            ..self.clone()
        })
    }

    /// `sup_m ‖u(t_m) - v(t_m)‖_{L²}`.
    pub fn max_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        let diff = self.sub(other)?;
        Ok(diff.states.iter().fold(0.0, |m, s| m.max(s.l2_norm())))
    }

    pub(crate) fn require_compatible(&self, other: &Trajectory) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        if self.states.len() != other.states.len()
            || (self.dt - other.dt).abs() > 1e-12 * self.dt
        {
            return Err(Error::TimeGrid(format!(
                "time grids differ: {} samples at dt = {} vs {} at dt = {}",
                self.states.len(),
                self.dt,
                other.states.len(),
                other.dt
            )));
        }
        Ok(())
    }
}

/// Column order of the norm CSV files.
pub const NORM_CSV_HEADER: &str = "t,l2,hs,hom_minus_s,weighted,n1,n2,n3,n4,n5,n6,xT";

/// Norms of one time slice together with the seminorms of the trajectory
/// up to that time. The trajectory-level report has `t = -1` and carries
/// sup-in-time values in the field columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub t: f64,
    pub l2: f64,
    pub hs: f64,
    pub hom_minus_s: f64,
    pub weighted: f64,
    pub n: [f64; 6],
    pub x_t: f64,
    pub s: f64,
    /// Weight exponent: the weighted column is `‖|x|^r u‖` with `r = s/2`.
    pub r: f64,
    pub horizon: f64,
    pub grid: GridParams,
    pub dt: f64,
}

impl NormReport {
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.t, self.l2, self.hs, self.hom_minus_s, self.weighted];
        cols.extend_from_slice(&self.n);
        cols.push(self.x_t);
        cols.iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn is_finite(&self) -> bool {
        [self.l2, self.hs, self.hom_minus_s, self.weighted, self.x_t]
            .iter()
            .chain(&self.n)
            .all(|v| v.is_finite())
    }
}

/// Per-slice quantities the seminorms are assembled from.
struct Slice {
    l2: f64,
    hs: f64,
    hom_minus_s: f64,
    weighted: f64,
    anti: f64,
    /// `‖∂ₓ v‖_∞`.
    dx_sup: f64,
    /// `|D^s ∂ₓ v(x_j)|²`.
    smooth_sq: Vec<f64>,
    /// `|v(x_j)|²`.
    value_sq: Vec<f64>,
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

/// `D^s ∂ₓ`, or `∂ₓ²` when `s = 1`.
fn smoothing_symbol(s: f64) -> impl Fn(f64) -> Complex64 {
    move |xi: f64| {
        if s == 1.0 {
            Complex64::new(-xi * xi, 0.0)
        } else {
            Complex64::new(0.0, xi * xi.abs().powf(s))
        }
    }
}

fn slice(v: &SpectralField, s: f64) -> Result<Slice> {
    let dx = apply_multiplier(v, true, |xi| Complex64::new(0.0, xi));
    let smooth = apply_multiplier(v, s != 1.0, smoothing_symbol(s));
    Ok(Slice {
        l2: v.l2_norm(),
        hs: hs_norm(v, s)?,
        hom_minus_s: hom_norm(v, -s)?,
        weighted: weighted_norm(v, 0.5 * s)?,
        anti: antiderivative_norm(v)?,
        dx_sup: dx.max_abs(),
        smooth_sq: smooth.physical().iter().map(|u| u * u).collect(),
        value_sq: v.physical().iter().map(|u| u * u).collect(),
    })
}

/// Rows for every stored time (seminorms over `[0, t_m]`), followed by the
/// trajectory-level row.
///
/// Time integrals use the fourth-order cumulative rule on the stored grid;
/// `L^∞` in `x` or `t` is a maximum over samples.
pub fn trajectory_rows(traj: &Trajectory, s: f64) -> Result<Vec<NormReport>> {
    check_s(s)?;
    let m = traj.len();
    if m < 4 {
        return Err(Error::TimeGrid(format!(
            "space-time norms need at least 4 time samples, got {m}"
        )));
    }
    let slices: Vec<Slice> = traj
        .states()
        .par_iter()
        .map(|v| slice(v, s))
        .collect::<Result<_>>()?;
    let dt = traj.dt();
    let dx = traj.grid().dx();
    let fourth: Vec<f64> = slices.iter().map(|sl| sl.dx_sup.powi(4)).collect();
    let n3_cum = cumulative_integrals(&fourth, dt);
    let smooth: Vec<Vec<f64>> = slices.iter().map(|sl| sl.smooth_sq.clone()).collect();
    let n4_cum = cumulative_integrals(&smooth, dt);

    let base = NormReport {
        t: 0.0,
        l2: 0.0,
        hs: 0.0,
        hom_minus_s: 0.0,
        weighted: 0.0,
        n: [0.0; 6],
        x_t: 0.0,
        s,
        r: 0.5 * s,
        horizon: traj.horizon(),
        grid: traj.grid().params(),
        dt,
    };
    let mut rows = Vec::with_capacity(m + 1);
    let mut sup = [0.0f64; 6];
    let mut n1 = 0.0f64;
    let mut n2 = 0.0f64;
    let mut n6 = 0.0f64;
    let mut running_max = vec![0.0f64; traj.grid().n_points()];
    for (k, sl) in slices.iter().enumerate() {
        n1 = n1.max(sl.hs);
        n2 = n2.max(sl.anti);
        n6 = n6.max(sl.weighted);
        for (r, v) in running_max.iter_mut().zip(&sl.value_sq) {
            *r = r.max(*v);
        }
        let n3 = n3_cum[k].max(0.0).powf(0.25);
        let n4 = n4_cum[k].iter().fold(0.0f64, |a, v| a.max(*v)).max(0.0).sqrt();
        let n5 = (running_max.iter().sum::<f64>() * dx).sqrt();
        let n = [n1, n2, n3, n4, n5, n6];
        sup[0] = sup[0].max(sl.l2);
        sup[1] = sup[1].max(sl.hs);
        sup[2] = sup[2].max(sl.hom_minus_s);
        sup[3] = sup[3].max(sl.weighted);
        rows.push(NormReport {
            t: traj.times()[k],
            l2: sl.l2,
            hs: sl.hs,
            hom_minus_s: sl.hom_minus_s,
            weighted: sl.weighted,
            n,
            x_t: n.iter().sum(),
            ..base.clone()
        });
    }
    let last = rows.last().expect("at least four rows").clone();
    rows.push(NormReport {
        t: -1.0,
        l2: sup[0],
        hs: sup[1],
        hom_minus_s: sup[2],
        weighted: sup[3],
        ..last
    });
    Ok(rows)
}

/// The trajectory-level report (`t = -1`).
pub fn trajectory_norms(traj: &Trajectory, s: f64) -> Result<NormReport> {
    Ok(trajectory_rows(traj, s)?
        .pop()
        .expect("rows end with the trajectory report"))
}

/// `n1 + … + n6` over the whole trajectory.
pub fn xt_norm(traj: &Trajectory, s: f64) -> Result<f64> {
    Ok(trajectory_norms(traj, s)?.x_t)
}

/// Solution-space distance `‖u - v‖_{X_T}`.
pub fn xt_distance(a: &Trajectory, b: &Trajectory, s: f64) -> Result<f64> {
    xt_norm(&a.sub(b)?, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::{antiderivative, make_grid};
    use crate::propagator::apply_group;
    use std::f64::consts::PI;

    #[test]
    fn zero_trajectory_has_zero_norms() {
        let g = make_grid(32, 4.0).unwrap();
        let traj = Trajectory::constant(&SpectralField::zeros(&g), 0.1, 6, SignChoice::Plus).unwrap();
        let r = trajectory_norms(&traj, 0.8).unwrap();
        assert_eq!(r.n, [0.0; 6]);
        assert_eq!(r.x_t, 0.0);
    }

    #[test]
    fn constant_single_mode_closed_forms() {
        let l = PI;
        let g = make_grid(64, l).unwrap();
        let (k, amp) = (3.0, 0.7);
        let f = SpectralField::from_fn(&g, |x| amp * (k * x).cos());
        let traj = Trajectory::constant(&f, 0.125, 8, SignChoice::Minus).unwrap();
        let s = 0.9;
        let r = trajectory_norms(&traj, s).unwrap();
        // ‖∂ₓf‖_∞ = k·amp on a grid containing the extrema, T = 1
        assert!((r.n[2] - k * amp).abs() < 1e-12);
        // |D^s ∂ₓ f| = k^{1+s} amp |sin kx|, peak attained on the grid
        assert!((r.n[3] - k.powf(1.0 + s) * amp).abs() < 1e-11);
        assert!((r.n[4] - f.l2_norm()).abs() < 1e-12);
        let anti = antiderivative(&f).unwrap().l2_norm();
        assert!((r.n[1] - anti).abs() < 1e-12);
        assert!((r.x_t - r.n.iter().sum::<f64>()).abs() == 0.0);
    }

    #[test]
    fn free_flow_keeps_sobolev_and_antiderivative_norms() {
        let g = make_grid(128, 16.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| -x * (-x * x / 2.0).exp());
        let dt = 0.05;
        let states = (0..=10)
            .map(|m| apply_group(&f, m as f64 * dt, SignChoice::Plus).unwrap())
            .collect();
        let traj = Trajectory::new(states, dt, SignChoice::Plus).unwrap();
        let rows = trajectory_rows(&traj, 1.0).unwrap();
        let (hs0, n2) = (rows[0].hs, rows[0].n[1]);
        for row in &rows[..rows.len() - 1] {
            assert!((row.hs - hs0).abs() <= 1e-12 * hs0);
            assert!((row.n[0] - hs0).abs() <= 1e-12 * hs0);
            assert!((row.n[1] - n2).abs() <= 1e-12 * n2);
        }
        let last = &rows[rows.len() - 1];
        assert_eq!(last.t, -1.0);
        assert_eq!(last.n, rows[rows.len() - 2].n);
    }

    #[test]
    fn rejects_short_trajectories_and_bad_s() {
        let g = make_grid(16, 2.0).unwrap();
        let z = SpectralField::zeros(&g);
        let short = Trajectory::constant(&z, 0.1, 2, SignChoice::Plus).unwrap();
        assert!(matches!(trajectory_norms(&short, 0.9), Err(Error::TimeGrid(_))));
        let ok = Trajectory::constant(&z, 0.1, 4, SignChoice::Plus).unwrap();
        assert!(trajectory_norms(&ok, 0.7).is_err());
    }

    #[test]
    fn xt_norm_is_homogeneous() {
        let g = make_grid(64, 8.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| x * (-x * x).exp());
        let states = (0..=8)
            .map(|m| apply_group(&f, 0.1 * m as f64, SignChoice::Minus).unwrap())
            .collect();
        let traj = Trajectory::new(states, 0.1, SignChoice::Minus).unwrap();
        let a = xt_norm(&traj, 0.85).unwrap();
        let b = xt_norm(&traj.scale(3.0), 0.85).unwrap();
        assert!((b - 3.0 * a).abs() <= 1e-12 * b);
    }
}
