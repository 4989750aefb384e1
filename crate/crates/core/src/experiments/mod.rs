//! Batch experiments driven by a TOML configuration: persistence runs,
//! bound sweeps, convergence studies, calibration of `C_s` and the Stein
//! norm equivalence check. Every run writes CSV files with a commented
//! metadata header plus a `summary.txt`, atomically and deterministically.

mod calibrate;
mod config;
mod convergence;
mod datum;
mod equivalence;
mod lemma;
mod output;
mod persistence;

pub use calibrate::{calibrate, observed_time, run_calibrate, Calibration, CalibrationRow, MIN_CORPUS};
pub use config::{
    CalibrateSection, ConvergenceSection, EquationSection, ExperimentConfig, ExperimentKind, GridSection,
    PicardSection, SweepSection, TimeSection,
};
pub use convergence::{convergence, fitted_order, run_convergence, Study};
pub use datum::{DatumSpec, BOUNDARY_WARNING};
pub use equivalence::{equivalence_corpus, equivalence_rows, run_stein_equivalence, EquivalenceRow, DEFAULT_ORDERS};
pub use lemma::{run_lemma, sweep_pairs, SweepPair, DEFAULT_B24, DEFAULT_T24};
pub use output::{csv_document, num, Document, RunOutcome, VERSION};
pub use persistence::{persistence, resolve_horizon, run_persistence, solve, EnvelopeRow, ENVELOPE_SLACK, Persistence, SolverUsed};

use std::path::PathBuf;

use crate::error::Result;

/// Runs the configured experiment without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Persistence => run_persistence(cfg),
        ExperimentKind::Lemma22 | ExperimentKind::Lemma23 | ExperimentKind::Lemma24 => run_lemma(cfg),
        ExperimentKind::Convergence => run_convergence(cfg),
        ExperimentKind::Calibrate => run_calibrate(cfg),
        ExperimentKind::SteinEquivalence => run_stein_equivalence(cfg),
    }
}

/// Runs the experiment and writes its outputs under `cfg.output`.
pub fn run(cfg: &ExperimentConfig) -> Result<(RunOutcome, Vec<PathBuf>)> {
    let outcome = execute(cfg)?;
    let paths = outcome.write(cfg, &cfg.output)?;
    Ok((outcome, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn config(kind: &str, extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
kind = "{kind}"
output = "unused"

[grid]
n_points = 128
half_length = 16.0

[equation]
sign = "-"
s = 0.8

{extra}
"#
        );
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn zero_datum_gives_zero_norm_rows() {
        let cfg = config(
            "persistence",
            "[time]\nhorizon = 0.04\ndt = 0.01\n[datum]\nfamily = \"gaussian-derivative\"\namplitude = 0.0\n",
        );
        let out = execute(&cfg).unwrap();
        let doc = out.document("norms.csv").unwrap();
        let data: Vec<&str> = doc.contents.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(data.len(), 6);
        for line in data {
            for v in line.split(',').skip(1) {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{line}");
            }
        }
        assert_eq!(out.summary_value("envelope_holds"), Some("true"));
    }

    #[test]
    fn small_persistence_run_is_deterministic() {
        let cfg = config(
            "persistence",
            "[time]\ndt = 0.01\n[datum]\nfamily = \"random-band-limited\"\namplitude = 0.05\nseed = 9\n",
        );
        let a = execute(&cfg).unwrap();
        let b = execute(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.summary_value("all_finite"), Some("true"));
        assert_eq!(a.summary_value("envelope_holds"), Some("true"));
        let header = &a.document("norms.csv").unwrap().contents;
        assert!(header.starts_with("# ostrovsky-core"));
        assert!(header.contains("#   kind = \"persistence\""));
    }

    #[test]
    fn inverse_sweep_without_admissible_points() {
        let cfg = config("lemma23", "[sweep]\nx = [0.01, -0.02]\nb = [0.5]\nt = [1.0]\n");
        let out = execute(&cfg).unwrap();
        assert_eq!(out.summary_value("status"), Some("no admissible points"));
        assert_eq!(out.exit_code, 0);
    }

    #[test]
    fn weighted_sweep_is_homogeneous() {
        let sweep = "[sweep]\nb = [0.25]\nt = [0.1, 1.0]\n";
        let one = config("lemma24", &format!("{sweep}[datum]\nfamily = \"gaussian-derivative\"\namplitude = 1.0\n"));
        let two = config("lemma24", &format!("{sweep}[datum]\nfamily = \"gaussian-derivative\"\namplitude = 2.0\n"));
        let p = sweep_pairs(&one).unwrap();
        let q = sweep_pairs(&two).unwrap();
        for (a, b) in p[0].base.rows.iter().zip(&q[0].base.rows) {
            assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio);
        }
        assert!(p[0].stable());
    }

    #[test]
    fn calibration_rejects_degenerate_corpus() {
        let zero = "[[calibrate.corpus]]\nfamily = \"gaussian-derivative\"\namplitude = 0.0\n";
        let cfg = config("calibrate", &format!("[time]\ndt = 0.01\n{zero}"));
        assert!(matches!(execute(&cfg), Err(Error::DegenerateCorpus(_))));
        let cfg = config("calibrate", &format!("[time]\ndt = 0.01\n{}", zero.repeat(5)));
        assert!(matches!(execute(&cfg), Err(Error::DegenerateCorpus(_))));
    }

    #[test]
    fn fitted_order_of_exact_power() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h: &f64| (h, 3.0 * h.powi(4))).collect();
        assert!((fitted_order(&pts) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn outputs_are_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config("lemma22", "[sweep]\nb = [0.5]\nt = [1.0]\nx = [0.0, 1.0]\n");
        cfg.output = dir.path().join("run");
        let (_, paths) = run(&cfg).unwrap();
        assert_eq!(paths.len(), 2);
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "lemma,sign,b,t,x,lhs,rhs,ratio,lhs_err,status,stable");
        let leftovers = std::fs::read_dir(dir.path().join("run"))
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp"))
            .count();
        assert_eq!(leftovers, 0);
    }
}
