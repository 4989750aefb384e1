//! Empirical calibration of the constant `C_s` in the smallness condition.
//!
//! For each corpus datum the observed time `T_obs` is the largest multiple of
//! `dt` (up to `t_max`) at which Picard iteration converges with every
//! contraction ratio below 1. It is located by doubling the number of steps
//! and then bisecting between the last success and the first failure. The
//! datum then requires `C ≥ C_i`, the smallest constant whose predicted
//! existence time does not exceed `T_obs`; the calibrated `C_s` is the
//! largest `C_i` over the corpus, so that every prediction is no later than
//! the observed time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::datum::DatumSpec;
use super::output::{csv_document, num, RunOutcome};
use crate::error::{Error, Result};
use crate::grid_spectral::GridSpec;
use crate::solver::{existence_time, picard_solve, PicardConfig};
use crate::SpectralField;
use std::sync::Arc;

/// Minimum number of corpus data.
pub const MIN_CORPUS: usize = 5;

/// Search range of the calibrated constant.
const C_RANGE: (f64, f64) = (1e-8, 1e8);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub label: String,
    pub observed_t: f64,
    /// `T_obs` hit `t_max` without a failure.
    pub censored: bool,
    /// Smallest constant whose predicted time is at most `observed_t`;
    /// zero for data that constrain nothing.
    pub required_c: f64,
    /// Prediction with the calibrated constant.
    pub predicted_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c_s: f64,
    pub rows: Vec<CalibrationRow>,
    pub holdout: Option<CalibrationRow>,
}

impl Calibration {
    pub fn holdout_respected(&self) -> Option<bool> {
        self.holdout.as_ref().map(|h| h.predicted_t <= h.observed_t)
    }
}

/// Whether Picard iteration on `m` steps converges with all ratios below 1.
fn contracts(u0: &SpectralField, base: &PicardConfig, m: usize) -> bool {
    let cfg = base.with_horizon(m as f64 * base.dt);
    match picard_solve(u0, &cfg) {
        Ok((_, diag)) => diag.max_ratio() < 1.0,
        Err(_) => false,
    }
}

/// Largest contraction-valid multiple of `dt` up to `t_max`, and whether
/// the search was cut off by `t_max`.
pub fn observed_time(u0: &SpectralField, base: &PicardConfig, t_max: f64) -> Result<(f64, bool)> {
    let cap = (t_max / base.dt * (1.0 + 1e-12)).floor() as usize;
    if cap < 4 {
        return Err(Error::config("calibrate.t_max", "shorter than four time steps"));
    }
    if !contracts(u0, base, 4) {
        return Err(Error::config(
            "time.dt",
            "Picard iteration does not contract on four steps; reduce dt or the amplitude",
        ));
    }
    let mut good = 4;
    let bad = loop {
        let next = (2 * good).min(cap);
        if next == good {
            return Ok((good as f64 * base.dt, true));
        }
        if contracts(u0, base, next) {
            good = next;
        } else {
            break next;
        }
    };
    let (mut lo, mut hi) = (good, bad);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if contracts(u0, base, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo as f64 * base.dt, false))
}

/// Smallest `C` with `existence_time(u0, s, C) ≤ t_obs`, by bisection in `log C`.
fn required_constant(u0: &SpectralField, s: f64, t_obs: f64) -> Result<f64> {
    let predicted = |c: f64| existence_time(u0, s, c);
    if predicted(C_RANGE.0)? <= t_obs {
        return Ok(C_RANGE.0);
    }
    if predicted(C_RANGE.1)? > t_obs {
        return Err(Error::DegenerateCorpus(format!(
            "no constant up to {:e} brings the prediction below {t_obs}",
            C_RANGE.1
        )));
    }
    let (mut lo, mut hi) = (C_RANGE.0.ln(), C_RANGE.1.ln());
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if predicted(mid.exp())? <= t_obs {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

fn observe(spec: &DatumSpec, grid: &Arc<GridSpec>, base: &PicardConfig, t_max: f64) -> Result<(SpectralField, f64, bool)> {
    let u0 = spec.build(grid)?;
    if u0.l2_norm() == 0.0 {
        return Ok((u0, t_max, true));
    }
    let (t, censored) = observed_time(&u0, base, t_max)?;
    Ok((u0, t, censored))
}

pub fn calibrate(cfg: &ExperimentConfig) -> Result<Calibration> {
    let corpus: Vec<DatumSpec> = cfg
        .calibrate
        .corpus
        .iter()
        .map(|d| d.scaled(cfg.calibrate.amplitude_scale))
        .collect();
    if corpus.len() < MIN_CORPUS {
        return Err(Error::DegenerateCorpus(format!(
            "{} data given, at least {MIN_CORPUS} required",
            corpus.len()
        )));
    }
    let grid = cfg.make_grid()?;
    let s = cfg.equation.s;
    let base = cfg.picard_config(cfg.time()?.dt * 4.0)?;
    let t_max = cfg.calibrate.t_max;
    let observed = corpus
        .par_iter()
        .map(|spec| {
            let (u0, t, censored) = observe(spec, &grid, &base, t_max)?;
            let c = if u0.l2_norm() == 0.0 { 0.0 } else { required_constant(&u0, s, t)? };
            Ok((spec.label(), u0, t, censored, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let c_s = observed.iter().fold(0.0f64, |m, o| m.max(o.4));
    if c_s == 0.0 {
        return Err(Error::DegenerateCorpus("every datum is zero".into()));
    }
    let rows = observed
        .into_iter()
        .map(|(label, u0, t, censored, c)| {
            Ok(CalibrationRow {
                label,
                observed_t: t,
                censored,
                required_c: c,
                predicted_t: existence_time(&u0, s, c_s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let holdout = match &cfg.calibrate.holdout {
        Some(spec) => {
            let (u0, t, censored) = observe(spec, &grid, &base, t_max)?;
            Some(CalibrationRow {
                label: spec.label(),
                observed_t: t,
                censored,
                required_c: if u0.l2_norm() == 0.0 { 0.0 } else { required_constant(&u0, s, t)? },
                predicted_t: existence_time(&u0, s, c_s)?,
            })
        }
        None => None,
    };
    Ok(Calibration { c_s, rows, holdout })
}

fn csv_row(role: &str, r: &CalibrationRow) -> String {
    format!(
        "{role},\"{}\",{},{},{},{}",
        r.label,
        num(r.observed_t),
        r.censored,
        num(r.required_c),
        num(r.predicted_t)
    )
}

pub fn run_calibrate(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let cal = calibrate(cfg)?;
    let mut rows: Vec<String> = cal.rows.iter().map(|r| csv_row("corpus", r)).collect();
    if let Some(h) = &cal.holdout {
        rows.push(csv_row("holdout", h));
    }
    let mut summary = vec![("c_s".to_string(), num(cal.c_s))];
    if let Some(ok) = cal.holdout_respected() {
        summary.push(("holdout_respected".into(), ok.to_string()));
    }
    Ok(RunOutcome {
        documents: vec![csv_document(
            "calibration.csv",
            cfg,
            &summary,
            "role,datum,observed_t,censored,required_c,predicted_t",
            &rows,
        )],
        summary,
        exit_code: 0,
    })
}
