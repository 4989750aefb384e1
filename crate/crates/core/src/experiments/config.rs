//! Run configuration, read from one TOML file per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::datum::DatumSpec;
use crate::error::{Error, Result};
use crate::fractional::SteinQuadSpec;
use crate::grid_spectral::{make_grid, GridSpec};
use crate::propagator::SignChoice;
use crate::solver::PicardConfig;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Persistence,
    Lemma22,
    Lemma23,
    Lemma24,
    Convergence,
    Calibrate,
    SteinEquivalence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Persistence => "persistence",
            ExperimentKind::Lemma22 => "lemma22",
            ExperimentKind::Lemma23 => "lemma23",
            ExperimentKind::Lemma24 => "lemma24",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Calibrate => "calibrate",
            ExperimentKind::SteinEquivalence => "stein-equivalence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSection {
    pub sign: SignChoice,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Final time; when absent, runs that need one use the existence time.
    pub horizon: Option<f64>,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSection {
    pub tol: f64,
    pub max_iter: usize,
    pub dealias: bool,
    /// `C_s` in the ball radius and the existence time.
    pub ball_constant: f64,
    /// Switch to the reference integrator when Picard iteration fails.
    pub fallback: bool,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            dealias: true,
            ball_constant: 1.0,
            fallback: false,
        }
    }
}

/// Sweep axes; empty axes fall back to the defaults of each run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub b: Vec<f64>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub x_min: Option<f64>,
    /// Signs to sweep; empty means the equation sign.
    pub signs: Vec<SignChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSection {
    pub corpus: Vec<DatumSpec>,
    /// Multiplies every corpus amplitude.
    pub amplitude_scale: f64,
    /// Upper end of the search for the observed contraction time.
    pub t_max: f64,
    /// Datum kept out of the fit and checked against the prediction.
    pub holdout: Option<DatumSpec>,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        Self {
            corpus: Vec::new(),
            amplitude_scale: 1.0,
            t_max: 4.0,
            holdout: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    /// Step sizes of the halving studies; each must divide the horizon.
    pub dt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub output: PathBuf,
    pub grid: GridSection,
    pub equation: EquationSection,
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub picard: PicardSection,
    pub datum: Option<DatumSpec>,
    #[serde(default)]
    pub sweep: SweepSection,
    pub quad: Option<SteinQuadSpec>,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "(file)".into());
            Error::config(key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// The configuration as TOML, as echoed into every output header.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.n_points < crate::grid_spectral::MIN_POINTS || self.grid.n_points % 2 != 0 {
            return Err(Error::config(
                "grid.n_points",
                format!("must be even and at least {}", crate::grid_spectral::MIN_POINTS),
            ));
        }
        positive("grid.half_length", self.grid.half_length)?;
        let s = self.equation.s;
        if !(s > 0.75 && s <= 1.0) {
            return Err(Error::config("equation.s", format!("{s} outside (3/4, 1]")));
        }
        if let Some(time) = &self.time {
            positive("time.dt", time.dt)?;
            if let Some(h) = time.horizon {
                positive("time.horizon", h)?;
            }
        }
        positive("picard.tol", self.picard.tol)?;
        positive("picard.ball_constant", self.picard.ball_constant)?;
        if self.picard.max_iter == 0 {
            return Err(Error::config("picard.max_iter", "must be at least 1"));
        }
        if let Some(d) = &self.datum {
            d.validate("datum")?;
        }
        if let Some(q) = &self.quad {
            q.validate().map_err(|e| Error::config("quad", e.to_string()))?;
        }
        match self.kind {
            ExperimentKind::Persistence => {
                self.require_time()?;
                self.require_datum()?;
            }
            ExperimentKind::Convergence => {
                let time = self.require_time()?;
                if time.horizon.is_none() {
                    return Err(Error::config("time.horizon", "required for convergence runs"));
                }
                self.require_datum()?;
                for (i, &dt) in self.convergence.dt.iter().enumerate() {
                    positive(&format!("convergence.dt[{i}]"), dt)?;
                }
                if !self.convergence.dt.is_empty() && self.convergence.dt.len() < 2 {
                    return Err(Error::config("convergence.dt", "needs at least two step sizes"));
                }
            }
            ExperimentKind::Lemma24 => {
                self.require_datum()?;
            }
            ExperimentKind::Calibrate => {
                self.require_time()?;
                positive("calibrate.t_max", self.calibrate.t_max)?;
                positive("calibrate.amplitude_scale", self.calibrate.amplitude_scale)?;
                for (i, d) in self.calibrate.corpus.iter().enumerate() {
                    d.validate(&format!("calibrate.corpus[{i}]"))?;
                }
                if let Some(h) = &self.calibrate.holdout {
                    h.validate("calibrate.holdout")?;
                }
            }
            ExperimentKind::Lemma22 | ExperimentKind::Lemma23 | ExperimentKind::SteinEquivalence => {}
        }
        for (i, &b) in self.sweep.b.iter().enumerate() {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::config(format!("sweep.b[{i}]"), format!("{b} outside (0, 1)")));
            }
        }
        if let Some(x_min) = self.sweep.x_min {
            positive("sweep.x_min", x_min)?;
        }
        Ok(())
    }

    fn require_time(&self) -> Result<&TimeSection> {
        self.time
            .as_ref()
            .ok_or_else(|| Error::config("time", format!("required for {} runs", self.kind.name())))
    }

    fn require_datum(&self) -> Result<&DatumSpec> {
        self.datum
            .as_ref()
            .ok_or_else(|| Error::config("datum", format!("required for {} runs", self.kind.name())))
    }

    pub fn time(&self) -> Result<&TimeSection> {
        self.require_time()
    }

    pub fn datum(&self) -> Result<&DatumSpec> {
        self.require_datum()
    }

    pub fn make_grid(&self) -> Result<Arc<GridSpec>> {
        make_grid(self.grid.n_points, self.grid.half_length)
    }

    pub fn quad(&self) -> SteinQuadSpec {
        self.quad.unwrap_or_default()
    }

    /// Solver settings for final time `horizon`.
    pub fn picard_config(&self, horizon: f64) -> Result<PicardConfig> {
        let time = self.require_time()?;
        Ok(PicardConfig {
            horizon,
            dt: time.dt,
            tol: self.picard.tol,
            max_iter: self.picard.max_iter,
            dealias: self.picard.dealias,
            sign: self.equation.sign,
            s: self.equation.s,
            ball_constant: self.picard.ball_constant,
            linear_only: false,
        })
    }

    pub fn signs(&self) -> Vec<SignChoice> {
        if self.sweep.signs.is_empty() {
            vec![self.equation.sign]
        } else {
            self.sweep.signs.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
kind = "persistence"
output = "out"

[grid]
n_points = 128
half_length = 16.0

[equation]
sign = "+"
s = 0.8

[time]
horizon = 0.1
dt = 0.01

[datum]
family = "gaussian-derivative"
amplitude = 0.1
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Persistence);
        assert_eq!(cfg.picard.tol, 1e-8);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn errors_name_the_key() {
        let bad_s = BASE.replace("s = 0.8", "s = 0.7");
        match ExperimentConfig::from_toml(&bad_s) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "equation.s"),
            other => panic!("{other:?}"),
        }
        let unknown = BASE.replace("s = 0.8", "s = 0.8\nnu = 1");
        match ExperimentConfig::from_toml(&unknown) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "nu"),
            other => panic!("{other:?}"),
        }
        let no_datum = BASE.split("[datum]").next().unwrap().to_string();
        match ExperimentConfig::from_toml(&no_datum) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "datum"),
            other => panic!("{other:?}"),
        }
        let bad_dt = BASE.replace("dt = 0.01", "dt = -1.0");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad_dt),
            Err(Error::Config { key, .. }) if key == "time.dt"
        ));
    }
}
