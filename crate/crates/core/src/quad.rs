//! Shared quadrature building blocks: Gauss–Legendre panels and cumulative
//! fourth-order rules on uniform grids.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss–Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, z);
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&z, &w)| (mid + half * z, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, dp)
}

/// The 16-point rule used by every panel quadrature in the crate.
pub fn gauss16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Values that can be accumulated by the cumulative rules below.
pub trait Accumulate: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, weight: f64);
}

impl Accumulate for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, weight: f64) {
        *self += weight * other;
    }
}

impl Accumulate for Vec<f64> {
    fn zero_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn add_scaled(&mut self, other: &Self, weight: f64) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b * weight;
        }
    }
}

impl Accumulate for Vec<Complex64> {
    fn zero_like(&self) -> Self {
        vec![Complex64::new(0.0, 0.0); self.len()]
    }
    fn add_scaled(&mut self, other: &Self, weight: f64) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b * weight;
        }
    }
}

/// Running integrals `S[m] ≈ ∫₀^{t_m} g` from samples on a uniform grid.
///
/// Even `m` use composite Simpson; odd `m ≥ 3` close the last three intervals
/// with the 3/8 rule; `m = 1` integrates the cubic through the first four
/// samples. Every entry is fourth-order accurate. Needs at least 4 samples.
pub fn cumulative_integrals<T: Accumulate>(samples: &[T], dt: f64) -> Vec<T> {
    assert!(samples.len() >= 4, "cumulative rule needs at least 4 samples");
    let zero = samples[0].zero_like();
    let mut out: Vec<T> = Vec::with_capacity(samples.len());
    out.push(zero.clone());
    for m in 1..samples.len() {
        let mut acc;
        if m == 1 {
            acc = zero.clone();
            for (j, w) in [(0usize, 9.0), (1, 19.0), (2, -5.0), (3, 1.0)] {
                acc.add_scaled(&samples[j], w * dt / 24.0);
            }
        } else if m % 2 == 0 {
            acc = out[m - 2].clone();
            acc.add_scaled(&samples[m - 2], dt / 3.0);
            acc.add_scaled(&samples[m - 1], 4.0 * dt / 3.0);
            acc.add_scaled(&samples[m], dt / 3.0);
        } else {
            acc = out[m - 3].clone();
            let w = 3.0 * dt / 8.0;
            acc.add_scaled(&samples[m - 3], w);
            acc.add_scaled(&samples[m - 2], 3.0 * w);
            acc.add_scaled(&samples[m - 1], 3.0 * w);
            acc.add_scaled(&samples[m], w);
        }
        out.push(acc);
    }
    out
}

/// Fourth-order integral of uniformly sampled values over the whole grid.
pub fn integrate_uniform(samples: &[f64], dt: f64) -> f64 {
    *cumulative_integrals(samples, dt)
        .last()
        .expect("non-empty by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the exactness limit for 8 nodes
        let got = rule.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((got - exact).abs() < 1e-9 * exact.abs());
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss16_nodes_are_symmetric_and_sorted() {
        let rule = gauss16();
        assert_eq!(rule.order(), 16);
        for i in 0..16 {
            assert!((rule.nodes[i] + rule.nodes[15 - i]).abs() < 1e-15);
        }
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cumulative_rule_is_fourth_order() {
        let errs: Vec<f64> = [20usize, 40, 80]
            .iter()
            .map(|&m| {
                let dt = 1.0 / m as f64;
                let s: Vec<f64> = (0..=m).map(|j| (3.0 * j as f64 * dt).sin()).collect();
                let cum = cumulative_integrals(&s, dt);
                (0..=m)
                    .map(|j| {
                        let t = j as f64 * dt;
                        (cum[j] - (1.0 - (3.0 * t).cos()) / 3.0).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.5, "observed order {order}");
        }
    }

    #[test]
    fn cumulative_rule_exact_for_cubics() {
        let dt = 0.1;
        let s: Vec<f64> = (0..9).map(|j| (j as f64 * dt).powi(3)).collect();
        let cum = cumulative_integrals(&s, dt);
        for (j, c) in cum.iter().enumerate() {
            let t = j as f64 * dt;
            assert!((c - t.powi(4) / 4.0).abs() < 1e-14);
        }
    }
}
