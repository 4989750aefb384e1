//! Sweeps that compare Stein derivatives of the oscillatory phases
//! `e^{ity³}` and `e^{±it/y}`, and the weighted norm of the group orbit,
//! against their power-law bounds with the constant set to 1.
//!
//! The bounds hold with unspecified constants, so each sweep reports the
//! ratio `lhs/rhs`; the verdict is that its supremum over the grid is finite
//! and moves by less than [`STABILITY_THRESHOLD`] under refinement.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{stein_estimate, CubicPhase, InversePhase, SteinQuadSpec};
use crate::grid_spectral::{GridParams, SpectralField};
use crate::norms::{hom_norm, weighted_norm};
use crate::propagator::{apply_group, SignChoice};

/// Largest relative change of the sup ratio accepted as refinement-stable.
pub const STABILITY_THRESHOLD: f64 = 0.05;

/// Default smallest `|x|` for the inverse-phase sweep.
pub const DEFAULT_X_MIN: f64 = 0.05;

/// Share of `lhs` the excluded neighbourhood of `y = 0` may account for
/// before a row is marked inconclusive.
pub const INCONCLUSIVE_SHARE: f64 = 0.1;

/// Which bound a table checks. Serialised as `lemma22`, `lemma23`, `lemma24`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma {
    /// `𝒟^b e^{ity³}(x) ≤ t^{b/3} + t^{1/3+2b/9} + (t^{1/3+2b/3} + t^{2b/3})|x|^{2b}`.
    #[serde(rename = "lemma22")]
    CubicPhase,
    /// `𝒟^b e^{±it/y}(x) ≤ t^b / |x|^{2b}`.
    #[serde(rename = "lemma23")]
    InversePhase,
    /// Weighted norm of the group orbit against its five-term bracket.
    #[serde(rename = "lemma24")]
    WeightedGroup,
}

impl Lemma {
    pub fn id(self) -> &'static str {
        match self {
            Lemma::CubicPhase => "lemma22",
            Lemma::InversePhase => "lemma23",
            Lemma::WeightedGroup => "lemma24",
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Outcome of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// The excluded neighbourhood of a singularity could change `lhs` by
    /// more than [`INCONCLUSIVE_SHARE`].
    Inconclusive,
    /// The quadrature error estimate exceeds its tolerance.
    Failed,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Inconclusive => "inconclusive",
            RowStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: f64,
    pub t: f64,
    /// Evaluation point; 0 for the weighted-group check, which has none.
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub lhs_err: f64,
    pub status: RowStatus,
}

impl SweepRow {
    fn new(b: f64, t: f64, x: f64, lhs: f64, rhs: f64, lhs_err: f64, status: RowStatus) -> Self {
        Self {
            b,
            t,
            x,
            lhs,
            rhs,
            ratio: lhs / rhs,
            lhs_err,
            status,
        }
    }
}

/// Column order of sweep CSV files; a `status` column follows.
pub const SWEEP_CSV_HEADER: &str = "lemma,sign,b,t,x,lhs,rhs,ratio,lhs_err";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub lemma: Lemma,
    pub sign: Option<SignChoice>,
    pub quad: Option<SteinQuadSpec>,
    pub grid: Option<GridParams>,
    /// Sorted by `(b, t, x)`.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    fn new(
        lemma: Lemma,
        sign: Option<SignChoice>,
        quad: Option<SteinQuadSpec>,
        grid: Option<GridParams>,
        mut rows: Vec<SweepRow>,
    ) -> Self {
        rows.sort_by(|p, q| {
            p.b.total_cmp(&q.b)
                .then(p.t.total_cmp(&q.t))
                .then(p.x.total_cmp(&q.x))
        });
        Self {
            lemma,
            sign,
            quad,
            grid,
            rows,
        }
    }

    /// Largest ratio over rows whose quadrature converged.
    pub fn sup_ratio(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.status != RowStatus::Failed)
            .fold(0.0, |m, r| m.max(r.ratio))
    }

    pub fn count(&self, status: RowStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    pub fn csv_header() -> String {
        format!("{SWEEP_CSV_HEADER},status")
    }

    /// One CSV line per row, in table order.
    pub fn csv_rows(&self) -> Vec<String> {
        let sign = self.sign.map(|s| s.symbol()).unwrap_or("");
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    self.lemma,
                    sign,
                    r.b,
                    r.t,
                    r.x,
                    r.lhs,
                    r.rhs,
                    r.ratio,
                    r.lhs_err,
                    r.status.as_str()
                )
            })
            .collect()
    }
}

/// Relative change of the sup ratio between two resolutions.
pub fn refinement_change(base: &SweepTable, refined: &SweepTable) -> f64 {
    let a = base.sup_ratio();
    let b = refined.sup_ratio();
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

/// Axes of a pointwise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub b: Vec<f64>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

impl SweepAxes {
    /// `b ∈ {1/4, 3/8, 1/2}`, `t ∈ {0.1, 1, 10}`, 33 points on `[-10, 10]`.
    pub fn cubic_default() -> Self {
        Self {
            b: vec![0.25, 0.375, 0.5],
            t: vec![0.1, 1.0, 10.0],
            x: linspace(-10.0, 10.0, 33),
        }
    }

    /// Includes the points `t/x ∈ {π, 6π, 12π}` at `t = 10`, so both sides
    /// of `t/|x| = 6π` are covered.
    pub fn inverse_default() -> Self {
        let pi = std::f64::consts::PI;
        let mut x: Vec<f64> = vec![0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
        x.extend([10.0 / pi, 10.0 / (6.0 * pi), 10.0 / (12.0 * pi)]);
        let mut both: Vec<f64> = x.iter().flat_map(|&v| [v, -v]).collect();
        both.sort_by(f64::total_cmp);
        Self {
            b: vec![0.25, 0.375, 0.5],
            t: vec![0.1, 1.0, 10.0],
            x: both,
        }
    }
}

fn check_b(b: f64, hi: f64, range: &'static str) -> Result<()> {
    if !(b > 0.0 && b <= hi) || (hi == 1.0 && b >= 1.0) {
        return Err(Error::OutOfRange {
            name: "b",
            value: b,
            range,
        });
    }
    Ok(())
}

fn check_t(t: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { t >= 0.0 } else { t > 0.0 };
    if !(ok && t.is_finite()) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: if allow_zero { "[0, ∞)" } else { "(0, ∞)" },
        });
    }
    Ok(())
}

/// `t^{b/3} + t^{1/3+2b/9} + (t^{1/3+2b/3} + t^{2b/3})|x|^{2b}`.
pub fn cubic_phase_rhs(b: f64, t: f64, x: f64) -> f64 {
    t.powf(b / 3.0)
        + t.powf(1.0 / 3.0 + 2.0 * b / 9.0)
        + (t.powf(1.0 / 3.0 + 2.0 * b / 3.0) + t.powf(2.0 * b / 3.0)) * x.abs().powf(2.0 * b)
}

/// `t^b / |x|^{2b}`.
pub fn inverse_phase_rhs(b: f64, t: f64, x: f64) -> f64 {
    t.powf(b) / x.abs().powf(2.0 * b)
}

/// Radius of the neighbourhood of `y = 0` the inverse-phase quadrature skips.
pub fn inverse_phase_exclusion(t: f64, x: f64) -> f64 {
    (0.01 * x.abs()).min(1e-3 * t)
}

/// Bound on the squared contribution of `|y| < η`, where `|f(x) - f(y)| ≤ 2`.
pub fn exclusion_bound(x: f64, eta: f64, b: f64) -> f64 {
    8.0 * eta * (x.abs() - eta).powf(-1.0 - 2.0 * b)
}

fn grid_points(b: &[f64], t: &[f64], x: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(b.len() * t.len() * x.len());
    for &bb in b {
        for &tt in t {
            for &xx in x {
                out.push((bb, tt, xx));
            }
        }
    }
    out
}

/// Pointwise check of the cubic-phase bound at every `(b, t, x)`.
pub fn lemma22_sweep(
    b_values: &[f64],
    t_values: &[f64],
    x_values: &[f64],
    quad: &SteinQuadSpec,
) -> Result<SweepTable> {
    for &b in b_values {
        check_b(b, 1.0, "(0, 1)")?;
    }
    for &t in t_values {
        check_t(t, false)?;
    }
    quad.validate()?;
    let rows = grid_points(b_values, t_values, x_values)
        .into_par_iter()
        .map(|(b, t, x)| {
            let v = stein_estimate(&CubicPhase { t }, x, b, quad)?;
            let status = if v.error <= quad.tolerance_for(v.value) {
                RowStatus::Ok
            } else {
                RowStatus::Failed
            };
            Ok(SweepRow::new(b, t, x, v.value, cubic_phase_rhs(b, t, x), v.error, status))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::new(Lemma::CubicPhase, None, Some(*quad), None, rows))
}

/// Largest outer radius the inverse-phase sweep will use.
const MAX_OUTER_RADIUS: f64 = 1e8;

/// `quad` with the outer radius enlarged until the far-field bound of
/// `e^{±it/y}`, whose deviation from 1 decays only like `t/|y|`, is below a
/// hundredth of the tolerance at the size of the right-hand side.
pub fn inverse_phase_spec(quad: &SteinQuadSpec, b: f64, t: f64, x: f64) -> SteinQuadSpec {
    let rhs = inverse_phase_rhs(b, t, x);
    let target = 0.02 * rhs * quad.tolerance_for(rhs);
    let tail = |w: f64| {
        let dev = (t / (w - x.abs())).min(2.0);
        (4.0 * dev + dev * dev) * w.powf(-2.0 * b) / (2.0 * b)
    };
    let mut r = quad.outer_radius.max(2.0 * x.abs());
    while tail(r) > target && r < MAX_OUTER_RADIUS {
        r *= 2.0;
    }
    quad.with_outer_radius(r)
}

/// Pointwise check of the inverse-phase bound. Points with `|x| < x_min`
/// are dropped; an empty table means no admissible point remained.
pub fn lemma23_sweep(
    b_values: &[f64],
    t_values: &[f64],
    x_values: &[f64],
    sign: SignChoice,
    quad: &SteinQuadSpec,
    x_min: f64,
) -> Result<SweepTable> {
    for &b in b_values {
        check_b(b, 0.5, "(0, 1/2]")?;
    }
    for &t in t_values {
        check_t(t, false)?;
    }
    if !(x_min > 0.0) {
        return Err(Error::OutOfRange {
            name: "x_min",
            value: x_min,
            range: "(0, ∞)",
        });
    }
    quad.validate()?;
    let admissible: Vec<f64> = x_values.iter().copied().filter(|x| x.abs() >= x_min).collect();
    let rows = grid_points(b_values, t_values, &admissible)
        .into_par_iter()
        .map(|(b, t, x)| {
            let eta = inverse_phase_exclusion(t, x);
            let f = InversePhase {
                t,
                sign: sign.as_f64(),
                exclusion: eta,
            };
            let v = stein_estimate(&f, x, b, &inverse_phase_spec(quad, b, t, x))?;
            let excluded = (v.value * v.value + exclusion_bound(x, eta, b)).sqrt() - v.value;
            // the exclusion bound is part of the error estimate, so it is
            // judged separately from the convergence test
            let status = if excluded > INCONCLUSIVE_SHARE * v.value {
                RowStatus::Inconclusive
            } else if v.error - excluded > quad.tolerance_for(v.value) {
                RowStatus::Failed
            } else {
                RowStatus::Ok
            };
            Ok(SweepRow::new(b, t, x, v.value, inverse_phase_rhs(b, t, x), v.error, status))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::new(Lemma::InversePhase, Some(sign), Some(*quad), None, rows))
}

/// Norms of a datum entering the weighted-group bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketNorms {
    pub l2: f64,
    /// `‖D^{2b} f‖`.
    pub smooth: f64,
    /// `‖D^{-2b} f‖`.
    pub rough: f64,
    /// `‖|x|^b f‖`.
    pub weighted: f64,
}

impl BracketNorms {
    pub fn of(f: &SpectralField, b: f64) -> Result<Self> {
        Ok(Self {
            l2: f.l2_norm(),
            smooth: hom_norm(f, 2.0 * b)?,
            rough: hom_norm(f, -2.0 * b)?,
            weighted: weighted_norm(f, b)?,
        })
    }

    /// `(1 + t^{b/3} + t^{1/3+2b/9})‖f‖ + (t^{1/3+2b/3} + t^{2b/3})‖D^{2b}f‖
    ///  + t^b‖D^{-2b}f‖ + ‖|x|^b f‖`.
    pub fn bracket(&self, b: f64, t: f64) -> f64 {
        (1.0 + t.powf(b / 3.0) + t.powf(1.0 / 3.0 + 2.0 * b / 9.0)) * self.l2
            + (t.powf(1.0 / 3.0 + 2.0 * b / 3.0) + t.powf(2.0 * b / 3.0)) * self.smooth
            + t.powf(b) * self.rough
            + self.weighted
    }
}

/// Boundary mass above which the weighted norm on the box is unreliable.
pub const WRAP_WARNING: f64 = 1e-8;

/// `‖|x|^b U(t)f‖` against the bracket of `f`, for each `t`.
///
/// Logs a warning when the evolved field reaches the box boundary.
pub fn lemma24_check(f: &SpectralField, t_values: &[f64], b: f64, sign: SignChoice) -> Result<SweepTable> {
    let (table, (worst_t, worst)) = lemma24_with_boundary_mass(f, t_values, b, sign)?;
    if worst > WRAP_WARNING {
        log::warn!(
            "weighted check at t = {worst_t}: boundary mass {worst:.3e} exceeds {WRAP_WARNING:e}; enlarge the box"
        );
    }
    Ok(table)
}

/// [`lemma24_check`] without logging, returning the time and value of the
/// largest boundary mass instead.
pub fn lemma24_with_boundary_mass(
    f: &SpectralField,
    t_values: &[f64],
    b: f64,
    sign: SignChoice,
) -> Result<(SweepTable, (f64, f64))> {
    check_b(b, 0.5, "(0, 1/2]")?;
    for &t in t_values {
        check_t(t, true)?;
    }
    f.require_mean_zero("lemma24_check")?;
    let norms = BracketNorms::of(f, b)?;
    let rows = t_values
        .par_iter()
        .map(|&t| {
            let evolved = apply_group(f, t, sign)?;
            let lhs = weighted_norm(&evolved, b)?;
            let row = SweepRow::new(b, t, 0.0, lhs, norms.bracket(b, t), 0.0, RowStatus::Ok);
            Ok((row, evolved.decay_ratio()))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows
        .iter()
        .fold((0.0, 0.0f64), |acc, (r, w)| if *w > acc.1 { (r.t, *w) } else { acc });
    let rows = rows.into_iter().map(|(r, _)| r).collect();
    let table = SweepTable::new(Lemma::WeightedGroup, Some(sign), None, Some(f.grid().params()), rows);
    Ok((table, worst))
}

/// The same check on the grid with twice the points.
pub fn lemma24_refined(f: &SpectralField, t_values: &[f64], b: f64, sign: SignChoice) -> Result<SweepTable> {
    let fine = f.upsample(&f.grid().refined())?;
    lemma24_check(&fine, t_values, b, sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::make_grid;

    #[test]
    fn cubic_bracket_at_unit_time() {
        assert!((cubic_phase_rhs(0.5, 1.0, 0.0) - 2.0).abs() < 1e-15);
        assert!((cubic_phase_rhs(0.5, 1.0, 2.0) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_rhs_is_a_pure_power_of_t() {
        let x = 0.7;
        for b in [0.25, 0.5] {
            let base = inverse_phase_rhs(b, 1.0, x);
            for t in [0.1, 2.0, 10.0, 37.0] {
                let got = inverse_phase_rhs(b, t, x) / base;
                assert!((got - t.powf(b)).abs() <= 2.0 * f64::EPSILON * t.powf(b));
            }
        }
    }

    #[test]
    fn small_time_cubic_row_is_small_and_bounded() {
        let table = lemma22_sweep(&[0.5], &[1e-6, 1.0], &[0.0, 1.0], &SteinQuadSpec::default()).unwrap();
        assert_eq!(table.rows.len(), 4);
        let tiny = table.rows.iter().find(|r| r.t == 1e-6 && r.x == 1.0).unwrap();
        assert!(tiny.lhs < 0.3 && tiny.ratio.is_finite());
        let unit = table.rows.iter().find(|r| r.t == 1.0 && r.x == 0.0).unwrap();
        assert_eq!(unit.rhs, 2.0);
        assert!(unit.status == RowStatus::Ok && unit.ratio > 0.0);
    }

    #[test]
    fn inverse_sweep_filters_and_flags() {
        let q = SteinQuadSpec::default();
        let empty = lemma23_sweep(&[0.5], &[1.0], &[0.01, -0.02], SignChoice::Plus, &q, 0.05).unwrap();
        assert!(empty.rows.is_empty());
        let t = lemma23_sweep(&[0.5], &[1.0], &[100.0, 1.0], SignChoice::Minus, &q, 0.05).unwrap();
        let far = t.rows.iter().find(|r| r.x == 100.0).unwrap();
        assert!(far.lhs < 0.05 && far.ratio.is_finite());
        let unit = t.rows.iter().find(|r| r.x == 1.0).unwrap();
        assert_eq!(unit.rhs, 1.0);
        assert!(lemma23_sweep(&[0.6], &[1.0], &[1.0], SignChoice::Plus, &q, 0.05).is_err());
    }

    #[test]
    fn rows_are_sorted() {
        let table = lemma22_sweep(&[0.5, 0.25], &[1.0, 0.1], &[2.0, -1.0], &SteinQuadSpec::default()).unwrap();
        let keys: Vec<_> = table.rows.iter().map(|r| (r.b, r.t, r.x)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
        assert!(table.rows.iter().all(|r| r.rhs > 0.0 && r.lhs >= 0.0));
    }

    #[test]
    fn weighted_check_at_zero_time_and_homogeneity() {
        let g = make_grid(256, 32.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| -x * (-0.5 * x * x).exp());
        let t = [0.0, 0.5, 1.0];
        let a = lemma24_check(&f, &t, 0.4, SignChoice::Plus).unwrap();
        let r0 = &a.rows[0];
        assert!((r0.lhs - weighted_norm(&f, 0.4).unwrap()).abs() < 1e-15);
        assert!(r0.lhs <= r0.rhs);
        for lambda in [2.0, 10.0] {
            let c = lemma24_check(&f.scale(lambda), &t, 0.4, SignChoice::Plus).unwrap();
            for (p, q) in a.rows.iter().zip(&c.rows) {
                assert!((p.ratio - q.ratio).abs() <= 1e-12 * p.ratio);
            }
        }
    }

    #[test]
    fn csv_rows_follow_header() {
        let g = make_grid(64, 16.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| -x * (-0.5 * x * x).exp());
        let table = lemma24_check(&f, &[0.1], 0.25, SignChoice::Minus).unwrap();
        let line = &table.csv_rows()[0];
        assert_eq!(line.split(',').count(), SweepTable::csv_header().split(',').count());
        assert!(line.starts_with("lemma24,-,"));
    }
}
