//! Comparison of `‖D^b f‖` with the L² norm of the Stein derivative over a
//! fixed corpus of twenty grid functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::datum::DatumSpec;
use super::output::{csv_document, num, RunOutcome};
use crate::error::Result;
use crate::fractional::{stein_l2_norm, SteinQuadSpec};
use crate::grid_spectral::{project_mean_zero, spatial_derivative, GridSpec};
use crate::norms::hom_norm;
use crate::stein_verify::STABILITY_THRESHOLD;
use crate::SpectralField;

/// Orders used when the config gives none.
pub const DEFAULT_ORDERS: [f64; 2] = [0.25, 0.5];

/// Named mean-zero test functions: Gaussian and sech derivatives of five
/// widths, five modulated Gaussian derivatives and five seeded random fields.
pub fn equivalence_corpus(grid: &Arc<GridSpec>) -> Result<Vec<(String, SpectralField)>> {
    let mut out = Vec::with_capacity(20);
    for w in [0.5, 0.75, 1.0, 1.5, 2.0] {
        let spec = DatumSpec::GaussianDerivative {
            amplitude: 1.0,
            width: w,
            center: 0.0,
        };
        out.push((spec.label(), spec.build(grid)?));
    }
    for w in [0.5, 0.75, 1.0, 1.5, 2.0] {
        let spec = DatumSpec::SechDerivative {
            amplitude: 1.0,
            width: w,
            center: 0.0,
        };
        out.push((spec.label(), spec.build(grid)?));
    }
    for k in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let g = SpectralField::from_fn(grid, |x: f64| (-0.5 * x * x).exp() * (k * x).cos());
        let f = project_mean_zero(&spatial_derivative(&g, 1)?);
        out.push((format!("modulated-gaussian-derivative(k={k})"), f));
    }
    for seed in 1..=5 {
        let spec = DatumSpec::RandomBandLimited {
            amplitude: 1.0,
            seed,
            modes: 6,
            max_wavenumber: 2.0,
            width: 1.0,
        };
        out.push((spec.label(), spec.build(grid)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub label: String,
    pub b: f64,
    pub l2: f64,
    /// `‖D^b f‖`.
    pub multiplier: f64,
    /// `‖𝒟^b f‖` and its error estimate.
    pub stein: f64,
    pub stein_err: f64,
    /// `(‖f‖ + ‖D^b f‖) / (‖f‖ + ‖𝒟^b f‖)`.
    pub ratio: f64,
    pub ratio_refined: f64,
}

impl EquivalenceRow {
    pub fn change(&self) -> f64 {
        (self.ratio_refined - self.ratio).abs() / self.ratio
    }
}

/// One row per (function, order).
pub fn equivalence_rows(
    corpus: &[(String, SpectralField)],
    orders: &[f64],
    quad: &SteinQuadSpec,
) -> Result<Vec<EquivalenceRow>> {
    let refined = quad.refined();
    let mut rows = Vec::with_capacity(corpus.len() * orders.len());
    for (label, f) in corpus {
        for &b in orders {
            let l2 = f.l2_norm();
            let multiplier = hom_norm(f, b)?;
            let base = stein_l2_norm(f, b, quad)?;
            let fine = stein_l2_norm(f, b, &refined)?;
            rows.push(EquivalenceRow {
                label: label.clone(),
                b,
                l2,
                multiplier,
                stein: base.value,
                stein_err: base.error,
                ratio: (l2 + multiplier) / (l2 + base.value),
                ratio_refined: (l2 + multiplier) / (l2 + fine.value),
            });
        }
    }
    Ok(rows)
}

pub fn run_stein_equivalence(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let grid = cfg.make_grid()?;
    let orders = if cfg.sweep.b.is_empty() {
        DEFAULT_ORDERS.to_vec()
    } else {
        cfg.sweep.b.clone()
    };
    let rows = equivalence_rows(&equivalence_corpus(&grid)?, &orders, &cfg.quad())?;
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "\"{}\",{},{},{},{},{},{},{},{}",
                r.label,
                num(r.b),
                num(r.l2),
                num(r.multiplier),
                num(r.stein),
                num(r.stein_err),
                num(r.ratio),
                num(r.ratio_refined),
                num(r.change())
            )
        })
        .collect();
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    let worst = rows.iter().fold(0.0f64, |m, r| m.max(r.change()));
    let summary = vec![
        ("min_ratio".to_string(), num(lo)),
        ("max_ratio".to_string(), num(hi)),
        ("max_refinement_change".to_string(), num(worst)),
        ("stable".to_string(), (worst < STABILITY_THRESHOLD).to_string()),
    ];
    Ok(RunOutcome {
        documents: vec![csv_document(
            "equivalence.csv",
            cfg,
            &summary,
            "datum,b,l2,multiplier,stein,stein_err,ratio,ratio_refined,change",
            &lines,
        )],
        summary,
        exit_code: 0,
    })
}
