use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::func::{Constant, FarField, FuncOnLine, Product};
use super::stein::{check_b, stein_derivative, stein_estimate, SteinQuadSpec};
use crate::error::{Error, Result};
use crate::grid_spectral::{fractional_derivative, SpectralField};
use crate::quad::gauss16;

/// Both sides of a product inequality, `lhs ≤ rhs`, and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub residual: f64,
    /// Sum of the quadrature error estimates of every term.
    pub tol: f64,
}

impl ProductCheck {
    pub fn holds(&self) -> bool {
        self.residual >= -self.tol
    }
}

/// `𝒟^b(fg)(x) ≤ ‖f‖∞ 𝒟^b g(x) + |g(x)| 𝒟^b f(x)`.
pub fn product_pointwise_check(
    f: Arc<dyn FuncOnLine>,
    g: Arc<dyn FuncOnLine>,
    b: f64,
    x: f64,
    spec: &SteinQuadSpec,
) -> Result<ProductCheck> {
    check_b(b)?;
    let sup_f = f.sup_norm();
    let gx = g.eval(x).norm();
    let dg = stein_derivative(g.as_ref(), x, b, spec)?;
    let df = stein_derivative(f.as_ref(), x, b, spec)?;
    let fg = Product(f, g);
    let dfg = stein_derivative(&fg, x, b, spec)?;
    let rhs = sup_f * dg.value + gx * df.value;
    Ok(ProductCheck {
        lhs: dfg.value,
        rhs,
        residual: rhs - dfg.value,
        tol: sup_f * dg.error + gx * df.error + dfg.error,
    })
}

/// Mesh for integrals over the line in the outer variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineQuadSpec {
    /// Uniform panels cover `|x| ≤ core`.
    pub core: f64,
    pub core_panel: f64,
    /// Geometric panels continue to `|x| = reach`; beyond it a tail model applies.
    pub reach: f64,
    pub growth: f64,
}

impl Default for LineQuadSpec {
    fn default() -> Self {
        Self {
            core: 12.0,
            core_panel: 1.0,
            reach: 1e4,
            growth: 2.0,
        }
    }
}

impl LineQuadSpec {
    fn panels(&self) -> Vec<(f64, f64)> {
        let mut half = Vec::new();
        let mut a = 0.0;
        while a < self.core {
            let b = (a + self.core_panel).min(self.core);
            half.push((a, b));
            a = b;
        }
        while a < self.reach {
            let b = (a * self.growth).min(self.reach);
            half.push((a, b));
            a = b;
        }
        let mut all: Vec<(f64, f64)> = half.iter().rev().map(|&(a, b)| (-b, -a)).collect();
        all.extend(half);
        all
    }

    fn split(panels: &[(f64, f64)]) -> Vec<(f64, f64)> {
        panels
            .iter()
            .flat_map(|&(a, b)| {
                let m = 0.5 * (a + b);
                [(a, m), (m, b)]
            })
            .collect()
    }
}

/// `‖h 𝒟^b k‖_{L²(ℝ)}` with its error estimate.
struct WeightedNorm {
    value: f64,
    error: f64,
}

fn weighted_stein_norm(
    h: &dyn FuncOnLine,
    k: &dyn FuncOnLine,
    b: f64,
    spec: &SteinQuadSpec,
    line: &LineQuadSpec,
) -> Result<WeightedNorm> {
    let rule = gauss16();
    let x_reach = line.reach;
    let spec_at = |x: f64| spec.with_outer_radius(spec.outer_radius.max(x.abs() + spec.outer_radius));

    let integrate = |panels: &[(f64, f64)]| -> Result<(f64, f64)> {
        let nodes: Vec<(f64, f64)> = panels
            .iter()
            .flat_map(|&(a, b)| rule.mapped(a, b).collect::<Vec<_>>())
            .collect();
        let parts: Vec<Result<(f64, f64)>> = nodes
            .par_iter()
            .map(|&(x, wt)| {
                let hx = h.eval(x).norm_sqr();
                if hx == 0.0 {
                    return Ok((0.0, 0.0));
                }
                let d = stein_estimate(k, x, b, &spec_at(x))?;
                Ok((
                    wt * hx * d.value * d.value,
                    wt * hx * (2.0 * d.value * d.error + d.error * d.error),
                ))
            })
            .collect();
        let mut s = 0.0;
        let mut e = 0.0;
        for p in parts {
            let (a, b) = p?;
            s += a;
            e += b;
        }
        Ok((s, e))
    };

    let coarse_panels = line.panels();
    let (s0, _) = integrate(&coarse_panels)?;
    let (s1, e1) = integrate(&LineQuadSpec::split(&coarse_panels))?;

    // tail |x| > X: 𝒟^b k(x)² ≈ ∫ |k(y) - ℓ_k|² |x - y|^{-1-2b} dy
    let (h_minus, h_plus, h_dev) = match h.far_field(0.0, x_reach) {
        FarField::Limits {
            minus,
            plus,
            deviation,
        } => (minus.norm(), plus.norm(), deviation),
        _ => return Err(Error::Unsupported("outer factor without limits at infinity")),
    };
    let (k_lim, k_dev) = match k.far_field(0.0, x_reach) {
        FarField::Limits {
            minus,
            plus,
            deviation,
        } if (minus - plus).norm() == 0.0 => (minus, deviation),
        _ => return Err(Error::Unsupported("inner factor without a common limit at infinity")),
    };
    let mut mass = 0.0;
    let mut profile: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in &LineQuadSpec::split(&coarse_panels) {
        let m: f64 = rule.integrate(a, b, |y| (k.eval(y) - k_lim).norm_sqr());
        mass += m;
        profile.push((a.abs().max(b.abs()), m));
    }
    profile.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut outside = mass;
    let mut rho = x_reach;
    for &(r, m) in &profile {
        outside -= m;
        if outside <= 1e-14 * mass {
            rho = r;
            break;
        }
    }
    let tail_weight = 0.5 * (h_minus * h_minus + h_plus * h_plus);
    let h_max = h_minus.max(h_plus) + h_dev;
    let (tail, tail_err) = if mass == 0.0 || rho >= x_reach {
        if mass == 0.0 {
            (0.0, 0.0)
        } else {
            return Err(Error::Unsupported("inner factor does not decay within the x window"));
        }
    } else {
        let near = (x_reach - rho).powf(-2.0 * b) / b;
        let far = (x_reach + rho).powf(-2.0 * b) / b;
        let mid = 0.5 * (near + far);
        let spread = 0.5 * (near - far);
        let leak = (2.0 * h_max * h_dev + h_dev * h_dev) * mass * near
            + h_max * h_max * (2.0 * k.sup_norm() * k_dev + k_dev * k_dev) * 2.0 * x_reach * near;
        (tail_weight * mass * mid, tail_weight * mass * spread + leak)
    };

    let v0 = (s0 + tail).max(0.0).sqrt();
    let v1 = (s1 + tail).max(0.0).sqrt();
    let spread = (s1 + tail + e1 + tail_err).max(0.0).sqrt() - v1;
    Ok(WeightedNorm {
        value: v1,
        error: (v1 - v0).abs() + spread,
    })
}

/// `‖𝒟^b(fg)‖ ≤ ‖f 𝒟^b g‖ + ‖g 𝒟^b f‖` over the line.
pub fn product_l2_check(
    f: Arc<dyn FuncOnLine>,
    g: Arc<dyn FuncOnLine>,
    b: f64,
    spec: &SteinQuadSpec,
    line: &LineQuadSpec,
) -> Result<ProductCheck> {
    check_b(b)?;
    let a = weighted_stein_norm(f.as_ref(), g.as_ref(), b, spec, line)?;
    let c = weighted_stein_norm(g.as_ref(), f.as_ref(), b, spec, line)?;
    let one = Constant(num_complex::Complex64::new(1.0, 0.0));
    let fg = Product(f, g);
    let l = weighted_stein_norm(&one, &fg, b, spec, line)?;
    let rhs = a.value + c.value;
    Ok(ProductCheck {
        lhs: l.value,
        rhs,
        residual: rhs - l.value,
        tol: a.error + c.error + l.error,
    })
}

/// Defect of the fractional Leibniz rule,
/// `‖D^α(fg) - f D^α g - g D^α f‖`, and the comparison term `‖g‖∞ ‖D^α f‖`.
///
/// Products are formed on the grid with twice the points, where they are
/// exact for fields without a Nyquist component.
pub fn leibniz_defect(f: &SpectralField, g: &SpectralField, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1)",
        });
    }
    f.require_same_grid(g)?;
    let fine = f.grid().refined();
    let fu = f.upsample(&fine)?;
    let gu = g.upsample(&fine)?;
    let prod: Vec<f64> = fu
        .physical()
        .iter()
        .zip(gu.physical())
        .map(|(a, b)| a * b)
        .collect();
    let fg = SpectralField::from_physical(&fine, prod)?;
    let d_fg = fractional_derivative(&fg, alpha)?;
    let d_f = fractional_derivative(&fu, alpha)?;
    let d_g = fractional_derivative(&gu, alpha)?;
    let dx = fine.dx();
    let mut defect = 0.0;
    for j in 0..fine.n_points() {
        let r = d_fg.physical()[j] - fu.physical()[j] * d_g.physical()[j]
            - gu.physical()[j] * d_f.physical()[j];
        defect += r * r;
    }
    let defect = (defect * dx).sqrt();
    let bound = gu.max_abs() * d_f.l2_norm();
    Ok((defect, bound))
}
