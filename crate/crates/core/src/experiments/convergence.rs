//! Time-step halving studies for the reference integrator and the Duhamel
//! quadrature, plus the linear probe.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{csv_document, num, RunOutcome};
use crate::error::Result;
use crate::propagator::apply_group;
use crate::solver::{free_evolution, psi_apply, reference_solve, PicardConfig};
use crate::SpectralField;

/// The reference solution uses the finest step divided by this factor.
const REFERENCE_DIVISOR: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub name: String,
    /// `(dt, error)` pairs in the order of the configured steps.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log error` against `log dt`.
    pub slope: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fitted_order(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn study(name: &str, steps: &[f64], error: impl Fn(f64) -> Result<f64>) -> Result<Study> {
    let points = steps
        .iter()
        .map(|&dt| Ok((dt, error(dt)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Study {
        name: name.into(),
        slope: fitted_order(&points),
        points,
    })
}

fn final_state(traj: crate::norms::Trajectory) -> SpectralField {
    traj.into_states().pop().expect("trajectories are non-empty")
}

pub fn convergence(cfg: &ExperimentConfig) -> Result<Vec<Study>> {
    let grid = cfg.make_grid()?;
    let u0 = cfg.datum()?.build(&grid)?;
    let horizon = cfg.time()?.horizon.expect("validated");
    let steps = if cfg.convergence.dt.is_empty() {
        vec![horizon / 10.0, horizon / 20.0, horizon / 40.0]
    } else {
        cfg.convergence.dt.clone()
    };
    let base = cfg.picard_config(horizon)?;
    let at = |dt: f64| PicardConfig { dt, ..base };
    for &dt in &steps {
        at(dt).validate()?;
    }
    let finest = steps.iter().cloned().fold(f64::INFINITY, f64::min) / REFERENCE_DIVISOR;

    let reference = final_state(reference_solve(&u0, &at(finest))?);
    let etd = study("reference", &steps, |dt| {
        Ok(final_state(reference_solve(&u0, &at(dt))?).sub(&reference)?.l2_norm())
    })?;

    let psi_at = |dt: f64| -> Result<SpectralField> {
        let c = at(dt);
        Ok(final_state(psi_apply(&free_evolution(&u0, &c)?, &u0, &c)?))
    };
    let psi_reference = psi_at(finest)?;
    let psi = study("psi", &steps, |dt| Ok(psi_at(dt)?.sub(&psi_reference)?.l2_norm()))?;

    let exact = apply_group(&u0, horizon, base.sign)?;
    let linear = study("linear", &steps, |dt| {
        let c = PicardConfig {
            linear_only: true,
            ..at(dt)
        };
        Ok(final_state(reference_solve(&u0, &c)?).sub(&exact)?.l2_norm())
    })?;
    Ok(vec![etd, psi, linear])
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let studies = convergence(cfg)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for s in &studies {
        for (dt, e) in &s.points {
            rows.push(format!("{},{},{}", s.name, num(*dt), num(*e)));
        }
        if s.name == "linear" {
            let worst = s.points.iter().fold(0.0f64, |m, p| m.max(p.1));
            summary.push(("linear_max_error".into(), num(worst)));
        } else {
            summary.push((format!("{}_order", s.name), num(s.slope)));
        }
    }
    Ok(RunOutcome {
        documents: vec![csv_document("convergence.csv", cfg, &summary, "study,dt,error", &rows)],
        summary,
        exit_code: 0,
    })
}
