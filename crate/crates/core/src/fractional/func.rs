use std::sync::Arc;

use num_complex::Complex64;

use crate::grid_spectral::SpectralField;

/// How a function behaves beyond the quadrature window around `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarField {
    /// Exactly periodic; the window is one period and the kernel is periodised.
    Periodic { period: f64 },
    /// `|f(y) - minus| ≤ deviation` for `y < x - R` and likewise with `plus`.
    Limits {
        minus: Complex64,
        plus: Complex64,
        deviation: f64,
    },
    /// `f(y) = e^{ity³}`, whose tail integral is evaluated on a rotated ray.
    Chirp { t: f64 },
    /// Only `sup |f|` is known.
    Bounded,
}

/// A bounded function on ℝ together with the analytic data the singular
/// quadrature relies on.
pub trait FuncOnLine: Send + Sync {
    fn eval(&self, y: f64) -> Complex64;

    /// Upper bound for `sup |f|`.
    fn sup_norm(&self) -> f64;

    /// Upper bound for `|f'|` on `[center - radius, center + radius]`.
    fn lipschitz(&self, center: f64, radius: f64) -> f64;

    /// Inverse length scale on which `f` varies near `y`.
    fn local_rate(&self, y: f64) -> f64;

    fn far_field(&self, x: f64, radius: f64) -> FarField;

    /// Points `p` with a radius `η`; the quadrature never samples `|y - p| < η`.
    fn singular_points(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }

    /// Abscissae where the local rate changes character; panels break there.
    fn features(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Largest observed difference quotient on a uniform sample of the interval.
pub fn sampled_lipschitz(f: &dyn FuncOnLine, center: f64, radius: f64, samples: usize) -> f64 {
    let n = samples.max(2);
    let h = 2.0 * radius / (n - 1) as f64;
    let mut prev = f.eval(center - radius);
    let mut best = 0.0f64;
    for i in 1..n {
        let y = center - radius + i as f64 * h;
        let v = f.eval(y);
        best = best.max((v - prev).norm() / h);
        prev = v;
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub Complex64);

impl FuncOnLine for Constant {
    fn eval(&self, _: f64) -> Complex64 {
        self.0
    }
    fn sup_norm(&self) -> f64 {
        self.0.norm()
    }
    fn lipschitz(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn local_rate(&self, _: f64) -> f64 {
        0.0
    }
    fn far_field(&self, _: f64, _: f64) -> FarField {
        FarField::Limits {
            minus: self.0,
            plus: self.0,
            deviation: 0.0,
        }
    }
}

/// `amplitude · e^{i a y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub wavenumber: f64,
    pub amplitude: Complex64,
}

impl PlaneWave {
    pub fn new(wavenumber: f64) -> Self {
        Self {
            wavenumber,
            amplitude: Complex64::new(1.0, 0.0),
        }
    }
}

impl FuncOnLine for PlaneWave {
    fn eval(&self, y: f64) -> Complex64 {
        self.amplitude * Complex64::from_polar(1.0, self.wavenumber * y)
    }
    fn sup_norm(&self) -> f64 {
        self.amplitude.norm()
    }
    fn lipschitz(&self, _: f64, _: f64) -> f64 {
        self.amplitude.norm() * self.wavenumber.abs()
    }
    fn local_rate(&self, _: f64) -> f64 {
        self.wavenumber.abs()
    }
    fn far_field(&self, x: f64, _: f64) -> FarField {
        if self.wavenumber == 0.0 {
            let v = self.eval(x);
            FarField::Limits {
                minus: v,
                plus: v,
                deviation: 0.0,
            }
        } else {
            FarField::Periodic {
                period: 2.0 * std::f64::consts::PI / self.wavenumber.abs(),
            }
        }
    }
}

/// `amplitude · e^{-(y - center)²/(2 width²)} · e^{i modulation y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub modulation: f64,
}

/// Distance, in widths, past which a Gaussian counts as flat.
const GAUSSIAN_REACH: f64 = 12.0;

impl Gaussian {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Self {
        Self {
            amplitude,
            center,
            width,
            modulation: 0.0,
        }
    }

    pub fn modulated(mut self, modulation: f64) -> Self {
        self.modulation = modulation;
        self
    }

    fn envelope(&self, y: f64) -> f64 {
        let z = (y - self.center) / self.width;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

impl FuncOnLine for Gaussian {
    fn eval(&self, y: f64) -> Complex64 {
        Complex64::from_polar(self.envelope(y), self.modulation * y)
    }
    fn sup_norm(&self) -> f64 {
        self.amplitude.abs()
    }
    fn lipschitz(&self, _: f64, _: f64) -> f64 {
        // max |z e^{-z²/2}| = e^{-1/2}
        self.amplitude.abs() * ((-0.5f64).exp() / self.width + self.modulation.abs())
    }
    fn local_rate(&self, y: f64) -> f64 {
        let z = ((y - self.center) / self.width).abs();
        if z <= GAUSSIAN_REACH {
            self.modulation.abs() + (1.0 + z) / self.width
        } else {
            0.0
        }
    }
    fn far_field(&self, x: f64, radius: f64) -> FarField {
        let gap = radius - (x - self.center).abs();
        let deviation = if gap > 0.0 {
            self.envelope(self.center + gap).abs()
        } else {
            self.amplitude.abs()
        };
        FarField::Limits {
            minus: Complex64::new(0.0, 0.0),
            plus: Complex64::new(0.0, 0.0),
            deviation,
        }
    }
    fn features(&self) -> Vec<f64> {
        let r = GAUSSIAN_REACH * self.width;
        vec![self.center - r, self.center, self.center + r]
    }
}

/// `e^{i t y³}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPhase {
    pub t: f64,
}

impl FuncOnLine for CubicPhase {
    fn eval(&self, y: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.t * y * y * y)
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
    fn lipschitz(&self, center: f64, radius: f64) -> f64 {
        let m = center.abs() + radius;
        3.0 * self.t.abs() * m * m
    }
    fn local_rate(&self, y: f64) -> f64 {
        3.0 * self.t.abs() * y * y
    }
    fn far_field(&self, _: f64, _: f64) -> FarField {
        FarField::Chirp { t: self.t }
    }
}

/// `e^{± i t / y}`, sampled only outside `|y| < exclusion`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversePhase {
    pub t: f64,
    pub sign: f64,
    pub exclusion: f64,
}

impl FuncOnLine for InversePhase {
    fn eval(&self, y: f64) -> Complex64 {
        if y == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::from_polar(1.0, self.sign * self.t / y)
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
    fn lipschitz(&self, center: f64, radius: f64) -> f64 {
        let d = center.abs() - radius;
        if d > 0.0 {
            self.t.abs() / (d * d)
        } else {
            f64::INFINITY
        }
    }
    fn local_rate(&self, y: f64) -> f64 {
        self.t.abs() / (y * y)
    }
    fn far_field(&self, x: f64, radius: f64) -> FarField {
        let gap = radius - x.abs();
        // |e^{iθ} - 1| ≤ |θ|
        let deviation = if gap > 0.0 {
            (self.t.abs() / gap).min(2.0)
        } else {
            2.0
        };
        let one = Complex64::new(1.0, 0.0);
        FarField::Limits {
            minus: one,
            plus: one,
            deviation,
        }
    }
    fn singular_points(&self) -> Vec<(f64, f64)> {
        vec![(0.0, self.exclusion)]
    }
}

/// The trigonometric interpolant of a grid field, extended periodically.
#[derive(Debug, Clone)]
pub struct BandLimited {
    field: SpectralField,
    sup: f64,
    lip: f64,
    rate: f64,
}

impl BandLimited {
    pub fn new(field: SpectralField) -> Self {
        let grid = field.grid().clone();
        let scale = grid.dxi() / (2.0 * std::f64::consts::PI).sqrt();
        let sup = field.spectral().iter().map(|c| c.norm()).sum::<f64>() * scale;
        let lip = field
            .spectral()
            .iter()
            .zip(grid.frequencies())
            .map(|(c, xi)| c.norm() * xi.abs())
            .sum::<f64>()
            * scale;
        let rate = field.effective_bandwidth(1e-15);
        Self {
            field,
            sup,
            lip,
            rate,
        }
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }
}

impl FuncOnLine for BandLimited {
    fn eval(&self, y: f64) -> Complex64 {
        Complex64::new(self.field.interpolate(y), 0.0)
    }
    fn sup_norm(&self) -> f64 {
        self.sup
    }
    fn lipschitz(&self, _: f64, _: f64) -> f64 {
        self.lip
    }
    fn local_rate(&self, _: f64) -> f64 {
        self.rate
    }
    fn far_field(&self, _: f64, _: f64) -> FarField {
        FarField::Periodic {
            period: 2.0 * self.field.grid().half_length(),
        }
    }
}

/// Pointwise product of two functions.
#[derive(Clone)]
pub struct Product(pub Arc<dyn FuncOnLine>, pub Arc<dyn FuncOnLine>);

impl FuncOnLine for Product {
    fn eval(&self, y: f64) -> Complex64 {
        self.0.eval(y) * self.1.eval(y)
    }
    fn sup_norm(&self) -> f64 {
        self.0.sup_norm() * self.1.sup_norm()
    }
    fn lipschitz(&self, center: f64, radius: f64) -> f64 {
        self.0.sup_norm() * self.1.lipschitz(center, radius)
            + self.1.sup_norm() * self.0.lipschitz(center, radius)
    }
    fn local_rate(&self, y: f64) -> f64 {
        self.0.local_rate(y) + self.1.local_rate(y)
    }
    fn far_field(&self, x: f64, radius: f64) -> FarField {
        let a = self.0.far_field(x, radius);
        let b = self.1.far_field(x, radius);
        match (a, b) {
            (
                FarField::Limits {
                    minus: m1,
                    plus: p1,
                    deviation: e1,
                },
                FarField::Limits {
                    minus: m2,
                    plus: p2,
                    deviation: e2,
                },
            ) => {
                let l1 = m1.norm().max(p1.norm());
                let l2 = m2.norm().max(p2.norm());
                FarField::Limits {
                    minus: m1 * m2,
                    plus: p1 * p2,
                    deviation: l1 * e2 + l2 * e1 + e1 * e2,
                }
            }
            (FarField::Limits { minus, plus, deviation }, _)
                if minus.norm() == 0.0 && plus.norm() == 0.0 =>
            {
                FarField::Limits {
                    minus,
                    plus,
                    deviation: deviation * self.1.sup_norm(),
                }
            }
            (_, FarField::Limits { minus, plus, deviation })
                if minus.norm() == 0.0 && plus.norm() == 0.0 =>
            {
                FarField::Limits {
                    minus,
                    plus,
                    deviation: deviation * self.0.sup_norm(),
                }
            }
            (FarField::Periodic { period: p }, FarField::Periodic { period: q })
                if (p - q).abs() <= 1e-14 * p =>
            {
                FarField::Periodic { period: p }
            }
            _ => FarField::Bounded,
        }
    }
    fn singular_points(&self) -> Vec<(f64, f64)> {
        let mut s = self.0.singular_points();
        s.extend(self.1.singular_points());
        s
    }
    fn features(&self) -> Vec<f64> {
        let mut s = self.0.features();
        s.extend(self.1.features());
        s
    }
}

/// `y ↦ f(y - shift)`.
#[derive(Clone)]
pub struct Shifted {
    pub inner: Arc<dyn FuncOnLine>,
    pub shift: f64,
}

impl FuncOnLine for Shifted {
    fn eval(&self, y: f64) -> Complex64 {
        self.inner.eval(y - self.shift)
    }
    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }
    fn lipschitz(&self, center: f64, radius: f64) -> f64 {
        self.inner.lipschitz(center - self.shift, radius)
    }
    fn local_rate(&self, y: f64) -> f64 {
        self.inner.local_rate(y - self.shift)
    }
    fn far_field(&self, x: f64, radius: f64) -> FarField {
        self.inner.far_field(x - self.shift, radius)
    }
    fn singular_points(&self) -> Vec<(f64, f64)> {
        self.inner
            .singular_points()
            .into_iter()
            .map(|(p, r)| (p + self.shift, r))
            .collect()
    }
    fn features(&self) -> Vec<f64> {
        self.inner
            .features()
            .into_iter()
            .map(|p| p + self.shift)
            .collect()
    }
}

/// `y ↦ f(λ y)` for `λ > 0`.
#[derive(Clone)]
pub struct Scaled {
    pub inner: Arc<dyn FuncOnLine>,
    pub lambda: f64,
}

impl FuncOnLine for Scaled {
    fn eval(&self, y: f64) -> Complex64 {
        self.inner.eval(self.lambda * y)
    }
    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }
    fn lipschitz(&self, center: f64, radius: f64) -> f64 {
        self.lambda
            * self
                .inner
                .lipschitz(self.lambda * center, self.lambda * radius)
    }
    fn local_rate(&self, y: f64) -> f64 {
        self.lambda * self.inner.local_rate(self.lambda * y)
    }
    fn far_field(&self, x: f64, radius: f64) -> FarField {
        match self.inner.far_field(self.lambda * x, self.lambda * radius) {
            FarField::Periodic { period } => FarField::Periodic {
                period: period / self.lambda,
            },
            FarField::Chirp { t } => FarField::Chirp {
                t: t * self.lambda.powi(3),
            },
            other => other,
        }
    }
    fn singular_points(&self) -> Vec<(f64, f64)> {
        self.inner
            .singular_points()
            .into_iter()
            .map(|(p, r)| (p / self.lambda, r / self.lambda))
            .collect()
    }
    fn features(&self) -> Vec<f64> {
        self.inner
            .features()
            .into_iter()
            .map(|p| p / self.lambda)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_lipschitz_bounds_hold_on_samples() {
        let funcs: Vec<(Box<dyn FuncOnLine>, f64, f64)> = vec![
            (Box::new(PlaneWave::new(3.0)), 0.4, 2.0),
            (Box::new(Gaussian::new(1.5, 0.3, 0.7).modulated(2.0)), 0.0, 4.0),
            (Box::new(CubicPhase { t: 0.5 }), 1.0, 1.5),
            (
                Box::new(InversePhase {
                    t: 1.0,
                    sign: 1.0,
                    exclusion: 0.01,
                }),
                2.0,
                1.0,
            ),
        ];
        for (f, c, r) in &funcs {
            let declared = f.lipschitz(*c, *r);
            let observed = sampled_lipschitz(f.as_ref(), *c, *r, 20_000);
            assert!(observed <= declared * (1.0 + 1e-9), "{observed} > {declared}");
        }
    }

    #[test]
    fn combinators_compose() {
        let g: Arc<dyn FuncOnLine> = Arc::new(Gaussian::new(1.0, 0.0, 1.0));
        let s = Scaled {
            inner: Arc::new(Shifted {
                inner: g.clone(),
                shift: 1.0,
            }),
            lambda: 2.0,
        };
        assert!((s.eval(0.5) - g.eval(0.0)).norm() < 1e-15);
        assert_eq!(s.features()[1], 0.5);
        let p = Product(g.clone(), Arc::new(PlaneWave::new(1.0)));
        assert!(matches!(
            p.far_field(0.0, 30.0),
            FarField::Limits { deviation, .. } if deviation < 1e-100
        ));
    }
}
