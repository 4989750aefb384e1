use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::func::{FarField, FuncOnLine};
use crate::error::{Error, Result};
use crate::quad::gauss16;

/// Resolution of the singular quadrature for the Stein derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteinQuadSpec {
    /// δ: the graded near-field mesh covers `|y - x| < δ`.
    pub inner_radius: f64,
    /// R: half-width of the integration window before the tail model takes over.
    pub outer_radius: f64,
    pub panels: usize,
    /// Exponent `g` of the near-field mesh `w_i = δ (i/panels)^g`.
    pub grading: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for SteinQuadSpec {
    fn default() -> Self {
        Self {
            inner_radius: 0.1,
            outer_radius: 50.0,
            panels: 32,
            grading: 6.0,
            rel_tol: 1e-6,
            abs_tol: 1e-10,
        }
    }
}

impl SteinQuadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius > 0.0 && self.inner_radius < self.outer_radius) {
            return Err(Error::OutOfRange {
                name: "inner_radius",
                value: self.inner_radius,
                range: "0 < δ < R",
            });
        }
        if self.panels < 2 {
            return Err(Error::OutOfRange {
                name: "panels",
                value: self.panels as f64,
                range: "≥ 2",
            });
        }
        if !(self.grading >= 1.0) {
            return Err(Error::OutOfRange {
                name: "grading",
                value: self.grading,
                range: "≥ 1",
            });
        }
        Ok(())
    }

    /// Twice the panels, half the inner radius, twice the outer radius.
    pub fn refined(&self) -> Self {
        Self {
            inner_radius: 0.5 * self.inner_radius,
            outer_radius: 2.0 * self.outer_radius,
            panels: 2 * self.panels,
            ..*self
        }
    }

    pub fn with_outer_radius(mut self, r: f64) -> Self {
        self.outer_radius = r;
        self
    }

    pub(crate) fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value)
    }

    /// Phase budget per far-field panel.
    fn theta(&self) -> f64 {
        64.0 / self.panels as f64
    }

    /// Geometric growth factor per far-field panel.
    fn kappa(&self) -> f64 {
        16.0 / self.panels as f64
    }
}

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinValue {
    pub value: f64,
    pub error: f64,
}

pub(crate) fn check_b(b: f64) -> Result<()> {
    if b > 0.0 && b < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "b",
            value: b,
            range: "(0, 1)",
        })
    }
}

/// `Σ_m |w + mP|^{-s}` for `|w| ≤ P/2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PeriodicKernel {
    period: f64,
    s: f64,
}

const KERNEL_TERMS: i32 = 16;

impl PeriodicKernel {
    pub(crate) fn new(period: f64, s: f64) -> Self {
        Self { period, s }
    }

    pub(crate) fn eval(&self, w: f64) -> f64 {
        self.singular(w) + self.regular(w)
    }

    fn singular(&self, w: f64) -> f64 {
        w.abs().powf(-self.s)
    }

    /// The images `m ≠ 0`, smooth and increasing in `|w|` on `[0, P/2]`.
    pub(crate) fn regular(&self, w: f64) -> f64 {
        let p = self.period;
        let s = self.s;
        let mut acc = 0.0;
        for m in 1..=KERNEL_TERMS {
            let m = m as f64;
            acc += (m * p + w).powf(-s) + (m * p - w).powf(-s);
        }
        // Euler–Maclaurin for Σ_{m > M} h(m), h(m) = (mP ± w)^{-s}
        let a = (KERNEL_TERMS + 1) as f64;
        for shift in [w, -w] {
            let z = a * p + shift;
            let h = z.powf(-s);
            let integral = z.powf(1.0 - s) / ((s - 1.0) * p);
            let d1 = -s * p * z.powf(-s - 1.0);
            let d3 = -s * (s + 1.0) * (s + 2.0) * p.powi(3) * z.powf(-s - 3.0);
            acc += integral + 0.5 * h - d1 / 12.0 + d3 / 720.0;
        }
        acc
    }
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Power(f64),
    Periodic(PeriodicKernel),
}

impl Kernel {
    #[inline]
    fn eval(&self, w: f64) -> f64 {
        match self {
            Kernel::Power(s) => w.powf(-s),
            Kernel::Periodic(k) => k.eval(w),
        }
    }
}

/// Distance past the origin at which the chirp tail leaves the real axis.
const CHIRP_CLEARANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Level {
    pub integral: f64,
    pub bound: f64,
}

impl std::ops::Add for Level {
    type Output = Level;
    fn add(self, o: Level) -> Level {
        Level {
            integral: self.integral + o.integral,
            bound: self.bound + o.bound,
        }
    }
}

/// Squared Stein derivative at one resolution: the quadrature value (tail
/// estimate included) and a bound on what the quadrature leaves out.
pub(crate) fn stein_level(
    f: &dyn FuncOnLine,
    x: f64,
    b: f64,
    spec: &SteinQuadSpec,
) -> Result<Level> {
    let s = 1.0 + 2.0 * b;
    let fx = f.eval(x);
    let mut total = Level::default();
    for side in [1.0, -1.0] {
        let (window, kernel) = match f.far_field(x, spec.outer_radius) {
            FarField::Periodic { period } => {
                (0.5 * period, Kernel::Periodic(PeriodicKernel::new(period, s)))
            }
            // the rotated ray needs the window to pass the stationary point y = 0
            FarField::Chirp { .. } => ((-side * x).max(0.0) + CHIRP_CLEARANCE, Kernel::Power(s)),
            _ => (spec.outer_radius, Kernel::Power(s)),
        };
        let far = f.far_field(x, window);
        total = total + side_level(f, x, fx, side, b, spec, window, kernel)?;
        total = total + tail_level(fx, f.sup_norm(), x, side, b, s, window, far)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn side_level(
    f: &dyn FuncOnLine,
    x: f64,
    fx: Complex64,
    side: f64,
    b: f64,
    spec: &SteinQuadSpec,
    window: f64,
    kernel: Kernel,
) -> Result<Level> {
    let sup = f.sup_norm();
    let mut bound = 0.0;

    // excluded zones, in offset coordinates on this side
    let mut zones: Vec<(f64, f64)> = Vec::new();
    for (p, eta) in f.singular_points() {
        if (p - x).abs() <= eta {
            return Err(Error::OutOfRange {
                name: "x",
                value: x,
                range: "outside every exclusion zone",
            });
        }
        let wp = side * (p - x);
        if wp > 0.0 && wp - eta < window {
            let lo = wp - eta;
            let hi = (wp + eta).min(window);
            zones.push((lo, hi));
            let amp = fx.norm() + sup;
            bound += amp * amp * (hi - lo) * kernel.eval(lo);
        }
    }
    zones.sort_by(|a, b| a.0.total_cmp(&b.0));

    let rate_x = f.local_rate(x);
    let mut delta = spec.inner_radius.min(0.5 * window);
    if rate_x > 0.0 {
        delta = delta.min(1.0 / rate_x);
    }
    if let Some(&(lo, _)) = zones.first() {
        delta = delta.min(0.5 * lo);
    }

    let integrand = |w: f64| -> f64 {
        let d = fx - f.eval(x + side * w);
        d.norm_sqr() * kernel.eval(w)
    };
    let rule = gauss16();

    // graded near field
    let m = spec.panels;
    let node = |i: usize| delta * (i as f64 / m as f64).powf(spec.grading);
    let mut near = 0.0;
    for i in 0..m {
        near += rule.integrate(node(i), node(i + 1), integrand);
    }
    let w1 = node(1);
    let lip = f.lipschitz(x, w1);
    let mut inner = lip * lip * w1.powf(2.0 - 2.0 * b) / (2.0 - 2.0 * b);
    if let Kernel::Periodic(k) = kernel {
        inner += lip * lip * k.regular(w1) * w1.powi(3) / 3.0;
    }
    bound += inner;

    // far field, split at zone edges and features
    let mut cuts: Vec<f64> = vec![delta, window];
    for &(lo, hi) in &zones {
        cuts.push(lo);
        cuts.push(hi);
    }
    for p in f.features() {
        let w = side * (p - x);
        if w > delta && w < window {
            cuts.push(w);
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let in_zone = |a: f64, b: f64| zones.iter().any(|&(lo, hi)| a >= lo && b <= hi);
    let rate = |w: f64| f.local_rate(x + side * w);
    let h_cap = (window - delta) / m as f64;
    let mut far_sum = 0.0;
    for pair in cuts.windows(2) {
        let (a, b_end) = (pair[0], pair[1]);
        if b_end <= a || in_zone(a, b_end) {
            continue;
        }
        let mut w = a;
        while w < b_end {
            let mut h = h_cap.min(spec.kappa() * w).min(b_end - w);
            let r0 = rate(w);
            if r0 > 0.0 {
                h = h.min(spec.theta() / r0);
            }
            while h * rate(w + h) > spec.theta() {
                h *= 0.5;
            }
            let end = if b_end - (w + h) < 1e-12 * b_end { b_end } else { w + h };
            far_sum += rule.integrate(w, end, integrand);
            w = end;
        }
    }

    Ok(Level {
        integral: near + far_sum,
        bound,
    })
}

#[allow(clippy::too_many_arguments)]
fn tail_level(
    fx: Complex64,
    sup: f64,
    x: f64,
    side: f64,
    b: f64,
    s: f64,
    window: f64,
    far: FarField,
) -> Result<Level> {
    let power = window.powf(-2.0 * b) / (2.0 * b);
    Ok(match far {
        FarField::Periodic { .. } => Level::default(),
        FarField::Limits {
            minus,
            plus,
            deviation,
        } => {
            let l = if side > 0.0 { plus } else { minus };
            let d = (fx - l).norm();
            Level {
                integral: d * d * power,
                bound: (2.0 * d * deviation + deviation * deviation) * power,
            }
        }
        FarField::Bounded => {
            let amp = fx.norm() + sup;
            let crude = amp * amp * power;
            Level {
                integral: 0.5 * crude,
                bound: 0.5 * crude,
            }
        }
        FarField::Chirp { t } => {
            let (cross, err) = chirp_tail(x, t, side, window, s);
            let mean = (fx.norm_sqr() + 1.0) * power;
            Level {
                integral: mean - 2.0 * (fx.conj() * cross).re,
                bound: 2.0 * fx.norm() * err,
            }
        }
    })
}

/// `∫_W^∞ e^{it(x + σw)³} w^{-s} dw` along the ray `w = W + r e^{±iπ/6}`,
/// where the integrand decays like `e^{-c t r³}`.
fn chirp_tail(x: f64, t: f64, side: f64, window: f64, s: f64) -> (Complex64, f64) {
    if t == 0.0 {
        return (
            Complex64::new(window.powf(1.0 - s) / (s - 1.0), 0.0),
            0.0,
        );
    }
    // for t < 0 the decaying direction flips
    let orient = side * t.signum();
    let dir = Complex64::from_polar(1.0, orient * std::f64::consts::PI / 6.0);
    let rule = gauss16();
    let w0 = Complex64::new(window, 0.0);
    let integrand = |r: f64| -> Complex64 {
        let w = w0 + dir * r;
        let y = Complex64::new(x, 0.0) + w * side;
        let phase = Complex64::new(0.0, t) * y * y * y;
        phase.exp() * w.powf(-s) * dir
    };
    let decay = |r: f64| -> f64 {
        let w = w0 + dir * r;
        let y = Complex64::new(x, 0.0) + w * side;
        -(Complex64::new(0.0, t) * y * y * y).re
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut r = 0.0;
    let mut steps = 0;
    while decay(r) < 60.0 && steps < 100_000 {
        let w = (w0 + dir * r).norm();
        let y = (Complex64::new(x, 0.0) + (w0 + dir * r) * side).norm();
        let rate = 3.0 * t.abs() * y * y + s / w;
        let h = (2.0 / rate).min(w);
        acc += rule.mapped(r, r + h).map(|(q, wt)| integrand(q) * wt).sum::<Complex64>();
        r += h;
        steps += 1;
    }
    let tail = (-decay(r)).exp() * (window + r).powf(-s) * (window + r);
    (acc, tail)
}

/// Stein derivative value at two resolutions, without the tolerance check.
pub fn stein_estimate(
    f: &dyn FuncOnLine,
    x: f64,
    b: f64,
    spec: &SteinQuadSpec,
) -> Result<SteinValue> {
    check_b(b)?;
    spec.validate()?;
    let coarse = stein_level(f, x, b, spec)?;
    let fine = stein_level(f, x, b, &spec.refined())?;
    let v0 = coarse.integral.max(0.0).sqrt();
    let v1 = fine.integral.max(0.0).sqrt();
    let spread = (fine.integral.max(0.0) + fine.bound).sqrt() - v1;
    Ok(SteinValue {
        value: v1,
        error: (v1 - v0).abs() + spread,
    })
}

/// `𝒟^b f(x) = (∫ |f(x) - f(y)|² / |x - y|^{1+2b} dy)^{1/2}`.
///
/// Fails with [`Error::Quadrature`] when the refinement difference plus the
/// analytic bounds exceed the tolerance in `spec`.
pub fn stein_derivative(
    f: &dyn FuncOnLine,
    x: f64,
    b: f64,
    spec: &SteinQuadSpec,
) -> Result<SteinValue> {
    let v = stein_estimate(f, x, b, spec)?;
    let tol = spec.tolerance_for(v.value);
    if !(v.error <= tol) {
        return Err(Error::Quadrature {
            x,
            estimate: v.error,
            tolerance: tol,
        });
    }
    Ok(v)
}
