//! Bound sweeps with a refinement pass.

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{csv_document, num, RunOutcome};
use crate::error::Result;
use crate::stein_verify::{
    lemma22_sweep, lemma23_sweep, lemma24_check, lemma24_refined, refinement_change, RowStatus, SweepAxes,
    SweepTable, DEFAULT_X_MIN, STABILITY_THRESHOLD,
};

/// Default times of the weighted-group check.
pub const DEFAULT_T24: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
/// Default orders of the weighted-group check.
pub const DEFAULT_B24: [f64; 3] = [0.25, 0.4, 0.5];

/// A table at base resolution and its refinement.
#[derive(Debug, Clone)]
pub struct SweepPair {
    pub base: SweepTable,
    pub refined: SweepTable,
}

impl SweepPair {
    pub fn change(&self) -> f64 {
        refinement_change(&self.base, &self.refined)
    }

    pub fn stable(&self) -> bool {
        self.change() < STABILITY_THRESHOLD
    }

    /// Per-row relative change of the ratio.
    fn row_stable(&self) -> Vec<bool> {
        self.base
            .rows
            .iter()
            .zip(&self.refined.rows)
            .map(|(a, b)| {
                let scale = a.ratio.abs().max(b.ratio.abs());
                scale == 0.0 || (a.ratio - b.ratio).abs() < STABILITY_THRESHOLD * scale
            })
            .collect()
    }
}

fn or_default(given: &[f64], fallback: &[f64]) -> Vec<f64> {
    if given.is_empty() {
        fallback.to_vec()
    } else {
        given.to_vec()
    }
}

/// Runs the configured sweep at base and refined resolution.
pub fn sweep_pairs(cfg: &ExperimentConfig) -> Result<Vec<SweepPair>> {
    let quad = cfg.quad();
    let sw = &cfg.sweep;
    match cfg.kind {
        ExperimentKind::Lemma22 => {
            let d = SweepAxes::cubic_default();
            let (b, t, x) = (or_default(&sw.b, &d.b), or_default(&sw.t, &d.t), or_default(&sw.x, &d.x));
            Ok(vec![SweepPair {
                base: lemma22_sweep(&b, &t, &x, &quad)?,
                refined: lemma22_sweep(&b, &t, &x, &quad.refined())?,
            }])
        }
        ExperimentKind::Lemma23 => {
            let d = SweepAxes::inverse_default();
            let (b, t, x) = (or_default(&sw.b, &d.b), or_default(&sw.t, &d.t), or_default(&sw.x, &d.x));
            let x_min = sw.x_min.unwrap_or(DEFAULT_X_MIN);
            cfg.signs()
                .into_iter()
                .map(|sign| {
                    Ok(SweepPair {
                        base: lemma23_sweep(&b, &t, &x, sign, &quad, x_min)?,
                        refined: lemma23_sweep(&b, &t, &x, sign, &quad.refined(), x_min)?,
                    })
                })
                .collect()
        }
        ExperimentKind::Lemma24 => {
            let grid = cfg.make_grid()?;
            let f = cfg.datum()?.build(&grid)?;
            let b = or_default(&sw.b, &DEFAULT_B24);
            let t = or_default(&sw.t, &DEFAULT_T24);
            let mut out = Vec::new();
            for sign in cfg.signs() {
                for &bb in &b {
                    out.push(SweepPair {
                        base: lemma24_check(&f, &t, bb, sign)?,
                        refined: lemma24_refined(&f, &t, bb, sign)?,
                    });
                }
            }
            Ok(out)
        }
        other => unreachable!("{} is not a sweep", other.name()),
    }
}

pub fn run_lemma(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let pairs = sweep_pairs(cfg)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut failed = 0;
    let mut inconclusive = 0;
    let mut all_stable = true;
    for pair in &pairs {
        let stable = pair.row_stable();
        for (line, st) in pair.base.csv_rows().into_iter().zip(stable) {
            rows.push(format!("{line},{st}"));
        }
        failed += pair.base.count(RowStatus::Failed) + pair.refined.count(RowStatus::Failed);
        inconclusive += pair.base.count(RowStatus::Inconclusive);
        all_stable &= pair.stable();
        let tag = match (pair.base.sign, pair.base.rows.first()) {
            (Some(s), Some(r)) if cfg.kind == ExperimentKind::Lemma24 => format!("{}:b={}", s.symbol(), r.b),
            (Some(s), _) => s.symbol().to_string(),
            (None, _) => "all".into(),
        };
        if pair.base.rows.is_empty() {
            summary.push((format!("status[{tag}]"), "no admissible points".into()));
            continue;
        }
        summary.push((format!("sup_ratio[{tag}]"), num(pair.base.sup_ratio())));
        summary.push((format!("sup_ratio_refined[{tag}]"), num(pair.refined.sup_ratio())));
        summary.push((format!("refinement_change[{tag}]"), num(pair.change())));
    }
    let any_rows = pairs.iter().any(|p| !p.base.rows.is_empty());
    summary.push(("rows".into(), rows.len().to_string()));
    summary.push(("failed_rows".into(), failed.to_string()));
    summary.push(("inconclusive_rows".into(), inconclusive.to_string()));
    if any_rows {
        summary.push(("stable".into(), all_stable.to_string()));
    } else {
        summary.push(("status".into(), "no admissible points".into()));
    }
    let header = format!("{},stable", SweepTable::csv_header());
    let fitted = vec![("stable".to_string(), (all_stable && any_rows).to_string())];
    Ok(RunOutcome {
        documents: vec![csv_document("sweep.csv", cfg, &fitted, &header, &rows)],
        summary,
        exit_code: if failed > 0 { 3 } else { 0 },
    })
}
