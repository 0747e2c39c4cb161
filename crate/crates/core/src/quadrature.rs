//! Composite Gauss–Legendre rules split at declared discontinuities.

use alloc::vec::Vec;

use crate::math::cos;

/// Default node count per panel.
pub const DEFAULT_ORDER: usize = 20;
/// Default absolute tolerance attached to rules.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// A weighted point set; `weights` already carry the measure's density.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub abs_tol: f64,
}

impl QuadratureRule {
    /// Builds a rule from explicit points, e.g. the atoms of a discrete measure.
    pub fn from_points(nodes: Vec<f64>, weights: Vec<f64>, abs_tol: f64) -> Self {
        debug_assert_eq!(nodes.len(), weights.len());
        Self { nodes, weights, abs_tol }
    }

    /// Composite rule over consecutive `edges` with `order` nodes per panel.
    /// Each node's weight is multiplied by `density(node)`.
    pub fn composite<D: Fn(f64) -> f64>(edges: &[f64], order: usize, density: D, abs_tol: f64) -> Self {
        let (x, w) = gauss_legendre(order);
        let panels = edges.len().saturating_sub(1);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            // Legendre nodes come out descending; walk them backwards.
            for k in (0..order).rev() {
                let node = mid + half * x[k];
                nodes.push(node);
                weights.push(half * w[k] * density(node));
            }
        }
        Self { nodes, weights, abs_tol }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes (descending) and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Sorted union of `edges` and the `breaks` falling strictly inside
/// `[edges[0], edges[last]]`; near-duplicates are merged.
pub(crate) fn merge_edges(edges: &[f64], breaks: &[f64]) -> Vec<f64> {
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    let mut all: Vec<f64> = edges.to_vec();
    all.extend(breaks.iter().copied().filter(|b| b.is_finite() && *b > lo && *b < hi));
    all.sort_by(f64::total_cmp);
    let scale = (hi - lo).abs().max(1.0);
    let mut merged: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match merged.last() {
            Some(&last) if (x - last).abs() <= 1e-13 * scale => {
                // Keep exact breakpoints over generated panel edges.
                if breaks.contains(&x) && x != lo && x != hi {
                    *merged.last_mut().unwrap() = x;
                }
            }
            _ => merged.push(x),
        }
    }
    merged
}

/// `panels + 1` evenly spaced edges on `[lo, hi]`.
pub(crate) fn uniform_edges(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    let step = (hi - lo) / panels as f64;
    (0..=panels)
        .map(|i| if i == panels { hi } else { lo + step * i as f64 })
        .collect()
}

/// Edges on `[lo, hi]` refined geometrically toward both endpoints, for
/// integrands with integrable endpoint singularities.
pub(crate) fn graded_edges(lo: f64, hi: f64, panels: usize, depth: i32) -> Vec<f64> {
    let width = hi - lo;
    let mut edges = Vec::new();
    edges.push(lo);
    for k in (1..=depth).rev() {
        edges.push(lo + width * libm::pow(10.0, -(k as f64)));
    }
    let inner = uniform_edges(lo + 0.1 * width, hi - 0.1 * width, panels);
    edges.extend(inner.iter().skip(1).take(inner.len() - 2));
    edges.push(hi - 0.1 * width);
    for k in 2..=depth {
        edges.push(hi - width * libm::pow(10.0, -(k as f64)));
    }
    edges.push(hi);
    edges
}
