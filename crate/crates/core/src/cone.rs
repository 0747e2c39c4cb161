//! Projection of an influence curve onto the linear span and onto the
//! convex cone generated by finitely many tangents.
//!
//! Everything reduces to the Gram system `G = (⟨gᵢ|gⱼ⟩)`, `b = (⟨κ|gᵢ⟩)`:
//! the span projection solves `G γ = b`; the cone projection minimizes
//! `‖κ‖² − 2 bᵀγ + γᵀGγ` over `γ ≥ 0` with an active-set (Lawson–Hanson)
//! method, whose multipliers `β = Gγ − b` are those of the Lagrangian
//! `‖κ − Σγᵢgᵢ‖² − 2 Σ βᵢγᵢ`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::hilbert;
use crate::linalg::{dot, Matrix};
use crate::measure::BaseMeasure;

/// Tolerance for accepting a function as mean-zero when building a Gram system.
pub const TANGENT_TOL: f64 = 1e-8;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GramSystem {
    pub gram: Matrix,
    pub cross: Vec<f64>,
    pub kappa_norm_sq: f64,
}

impl GramSystem {
    /// Validated constructor: symmetric within 1e-12, PSD within −1e-10,
    /// finite cross terms.
    pub fn from_parts(gram: Matrix, cross: Vec<f64>, kappa_norm_sq: f64) -> Result<Self> {
        if gram.dim() != cross.len() {
            return Err(Error::InvalidArgument(format!(
                "gram is {0}x{0} but there are {1} cross terms",
                gram.dim(),
                cross.len()
            )));
        }
        if gram.max_asymmetry() > 1e-12 {
            return Err(Error::InvalidArgument("gram matrix is not symmetric".to_string()));
        }
        if cross.iter().any(|b| !b.is_finite()) || !kappa_norm_sq.is_finite() || kappa_norm_sq < 0.0 {
            return Err(Error::InvalidArgument("cross terms and ‖κ‖² must be finite".to_string()));
        }
        if let Some(&min) = gram.symmetric_eigenvalues().first() {
            if min < -1e-10 {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
            }
        }
        Ok(Self { gram, cross, kappa_norm_sq })
    }

    pub fn len(&self) -> usize {
        self.cross.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cross.is_empty()
    }

    /// `‖κ − Σγᵢgᵢ‖²`.
    pub fn objective(&self, coeffs: &[f64]) -> f64 {
        self.kappa_norm_sq - 2.0 * dot(&self.cross, coeffs) + self.gram.quad_form(coeffs)
    }

    /// `⟨κ − Σγⱼgⱼ | gᵢ⟩` for each `i`.
    pub fn residual_cross(&self, coeffs: &[f64]) -> Vec<f64> {
        let g = self.gram.mul_vec(coeffs);
        self.cross.iter().zip(g).map(|(b, gv)| b - gv).collect()
    }

    /// The same system for `λκ`.
    pub fn scaled_kappa(&self, lambda: f64) -> Self {
        Self {
            gram: self.gram.clone(),
            cross: self.cross.iter().map(|b| lambda * b).collect(),
            kappa_norm_sq: lambda * lambda * self.kappa_norm_sq,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpanProjection {
    pub coeffs: Vec<f64>,
    pub norm_sq: f64,
    pub residual_norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConeProjection {
    pub coeffs: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub norm_sq: f64,
    /// Generators with a strictly positive coefficient.
    pub active_set: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KktReport {
    /// `max(−γᵢ, −βᵢ, 0)`.
    pub nonnegativity: f64,
    /// `max |βᵢγᵢ|`.
    pub slackness: f64,
    /// `max(⟨κ − κ̃|gᵢ⟩, 0)`.
    pub dual_feasibility: f64,
    /// `|⟨κ|κ̃⟩ − ‖κ̃‖²|`.
    pub norm_identity: f64,
    pub passed: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.nonnegativity.max(self.slackness).max(self.dual_feasibility).max(self.norm_identity)
    }
}

/// Assembles `G` and `b` by quadrature. Every generator must be mean-zero.
pub fn build_gram(kappa: &ScalarFunction, generators: &[ScalarFunction], p: &BaseMeasure) -> Result<GramSystem> {
    for g in generators {
        let m = hilbert::mean(g, p)?;
        if m.abs() > TANGENT_TOL {
            return Err(Error::InvalidTangent { label: g.label().to_string(), mean: m });
        }
    }
    let k = generators.len();
    let gram = Matrix::from_row_major(k, hilbert::gram_matrix(generators, p)?);
    let cross = generators.iter().map(|g| hilbert::inner_product(kappa, g, p)).collect::<Result<Vec<_>>>()?;
    let kappa_norm_sq = hilbert::norm_sq(kappa, p)?;
    GramSystem::from_parts(gram, cross, kappa_norm_sq)
}

/// Orthogonal projection onto the span; refuses singular or
/// ill-conditioned Gram matrices since the coefficients would not be unique.
pub fn project_span(sys: &GramSystem) -> Result<SpanProjection> {
    let k = sys.len();
    if k == 0 {
        return Ok(SpanProjection { coeffs: Vec::new(), norm_sq: 0.0, residual_norm_sq: sys.kappa_norm_sq });
    }
    let ev = sys.gram.symmetric_eigenvalues();
    let (min, max) = (ev[0], ev[k - 1]);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if min <= 0.0 || condition > MAX_CONDITION {
        return Err(Error::RankDeficient { eigenvalue: min, condition });
    }
    let coeffs = sys
        .gram
        .solve(&sys.cross, 1e-15)
        .ok_or(Error::RankDeficient { eigenvalue: min, condition })?;
    let norm_sq = dot(&coeffs, &sys.cross).max(0.0);
    let residual_norm_sq = (sys.kappa_norm_sq - norm_sq).max(0.0);
    Ok(SpanProjection { coeffs, norm_sq, residual_norm_sq })
}

/// Projection onto the cone `{Σγᵢgᵢ : γ ≥ 0}` by active-set nonnegative
/// least squares on the Gram formulation. Semidefinite Gram matrices are
/// fine. The entering index is the smallest among maximal gradient entries.
pub fn project_cone(sys: &GramSystem) -> Result<ConeProjection> {
    let k = sys.len();
    if k == 0 {
        return Ok(ConeProjection { coeffs: Vec::new(), multipliers: Vec::new(), norm_sq: 0.0, active_set: Vec::new() });
    }
    if let Some(&min) = sys.gram.symmetric_eigenvalues().first() {
        if min < -1e-10 {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
        }
    }
    let scale = sys
        .cross
        .iter()
        .map(|b| b.abs())
        .chain((0..k).map(|i| sys.gram.get(i, i)))
        .fold(1.0f64, f64::max);
    let tol = 1e-13 * scale;
    let max_outer = (k.saturating_mul(1usize.checked_shl(k as u32).unwrap_or(usize::MAX))).max(2);

    let mut gamma = alloc::vec![0.0; k];
    let mut passive = alloc::vec![false; k];
    let mut blocked = alloc::vec![false; k];
    let mut outer = 0usize;
    loop {
        let w = sys.residual_cross(&gamma);
        let entering = (0..k)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > tol)
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if w[b] >= w[j] => Some(b),
                _ => Some(j),
            });
        let Some(j) = entering else { break };
        outer += 1;
        if outer > max_outer {
            return Err(Error::NumericalFailure {
                reason: format!("active set did not converge within {max_outer} iterations"),
                best: gamma,
            });
        }
        passive[j] = true;
        let mut inner = 0usize;
        loop {
            inner += 1;
            let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let sub = sys.gram.submatrix(&idx);
            let rhs: Vec<f64> = idx.iter().map(|&i| sys.cross[i]).collect();
            let Some(z_sub) = sub.solve(&rhs, 1e-12) else {
                // The newcomer is numerically dependent on the passive set.
                passive[j] = false;
                blocked[j] = true;
                break;
            };
            let mut z = alloc::vec![0.0; k];
            for (&i, &v) in idx.iter().zip(&z_sub) {
                z[i] = v;
            }
            if idx.iter().all(|&i| z[i] > 0.0) {
                gamma = z;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            let mut alpha = f64::INFINITY;
            for &i in &idx {
                if z[i] <= 0.0 {
                    let a = gamma[i] / (gamma[i] - z[i]);
                    if a < alpha {
                        alpha = a;
                    }
                }
            }
            for i in 0..k {
                gamma[i] += alpha * (z[i] - gamma[i]);
            }
            for &i in &idx {
                if gamma[i] <= tol {
                    gamma[i] = 0.0;
                    passive[i] = false;
                }
            }
            if inner > 4 * k + 4 {
                return Err(Error::NumericalFailure {
                    reason: "inner active-set loop did not terminate".to_string(),
                    best: gamma,
                });
            }
        }
    }

    let g_gamma = sys.gram.mul_vec(&gamma);
    let multipliers: Vec<f64> = (0..k)
        .map(|i| if gamma[i] > 0.0 { 0.0 } else { (g_gamma[i] - sys.cross[i]).max(0.0) })
        .collect();
    let norm_sq = dot(&gamma, &g_gamma).max(0.0);
    let active_set = (0..k).filter(|&i| gamma[i] > 0.0).collect();
    Ok(ConeProjection { coeffs: gamma, multipliers, norm_sq, active_set })
}

/// Weights on the probability simplex minimizing `wᵀGw` (the minimum-norm
/// point of the convex hull of the points with Gram matrix `G`), by Wolfe's
/// algorithm. At the result, `‖ĝ‖² ≤ ⟨gᵢ|ĝ⟩` for every point.
pub fn min_norm_hull(points_gram: &Matrix) -> Result<Vec<f64>> {
    let k = points_gram.dim();
    if k == 0 {
        return Err(Error::InvalidArgument("empty point set".to_string()));
    }
    if let Some(&min) = points_gram.symmetric_eigenvalues().first() {
        if min < -1e-10 {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
        }
    }
    let scale = (0..k).map(|i| points_gram.get(i, i).abs()).fold(1.0f64, f64::max);
    let tol = 1e-13 * scale;
    let start = (0..k).fold(0, |b, i| if points_gram.get(i, i) < points_gram.get(b, b) { i } else { b });
    let mut w = alloc::vec![0.0; k];
    w[start] = 1.0;
    let mut corral: Vec<usize> = alloc::vec![start];
    let max_major = 50 * k + 50;
    for _ in 0..max_major {
        let gw = points_gram.mul_vec(&w);
        let norm = dot(&w, &gw);
        let j = (0..k).fold(0, |b, i| if gw[i] < gw[b] { i } else { b });
        if gw[j] >= norm - tol || corral.contains(&j) {
            return Ok(w);
        }
        corral.push(j);
        for _minor in 0..(4 * k + 4) {
            let v = affine_minimizer(points_gram, &corral)
                .ok_or_else(|| Error::NumericalFailure { reason: "affinely dependent corral".to_string(), best: w.clone() })?;
            if corral.iter().zip(&v).all(|(_, &vi)| vi > 1e-15) {
                w.iter_mut().for_each(|x| *x = 0.0);
                for (&i, &vi) in corral.iter().zip(&v) {
                    w[i] = vi;
                }
                break;
            }
            let mut theta = 1.0f64;
            for (&i, &vi) in corral.iter().zip(&v) {
                if vi <= 1e-15 {
                    let t = w[i] / (w[i] - vi);
                    theta = theta.min(t);
                }
            }
            let mut next = alloc::vec![0.0; k];
            for (&i, &vi) in corral.iter().zip(&v) {
                next[i] = w[i] + theta * (vi - w[i]);
            }
            w = next;
            corral.retain(|&i| w[i] > 1e-15);
            for (i, wi) in w.iter_mut().enumerate() {
                if !corral.contains(&i) {
                    *wi = 0.0;
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
        }
    }
    Err(Error::NumericalFailure { reason: "minimum-norm point iteration did not converge".to_string(), best: w })
}

/// Minimizer of `vᵀG_S v` subject to `Σv = 1` on the corral `S`.
fn affine_minimizer(g: &Matrix, corral: &[usize]) -> Option<Vec<f64>> {
    let m = corral.len();
    let mut sys = Matrix::zeros(m + 1);
    for (a, &i) in corral.iter().enumerate() {
        for (b, &j) in corral.iter().enumerate() {
            sys.set(a, b, g.get(i, j));
        }
        sys.set(a, m, 1.0);
        sys.set(m, a, 1.0);
    }
    let mut rhs = alloc::vec![0.0; m + 1];
    rhs[m] = 1.0;
    let sol = sys.solve(&rhs, 1e-13)?;
    Some(sol[..m].to_vec())
}

/// Residuals of the cone-projection optimality conditions, recomputed from
/// the Gram system alone.
pub fn verify_kkt(sys: &GramSystem, proj: &ConeProjection, tol: f64) -> KktReport {
    let gamma = &proj.coeffs;
    let resid = sys.residual_cross(gamma);
    let nonnegativity = gamma
        .iter()
        .chain(&proj.multipliers)
        .fold(0.0f64, |m, &v| m.max(-v));
    let slackness = gamma.iter().zip(&proj.multipliers).fold(0.0f64, |m, (g, b)| m.max((g * b).abs()));
    let dual_feasibility = resid.iter().fold(0.0f64, |m, &r| m.max(r));
    let norm_identity = (dot(gamma, &sys.cross) - sys.gram.quad_form(gamma)).abs();
    let mut report = KktReport { nonnegativity, slackness, dual_feasibility, norm_identity, passed: false };
    report.passed = report.max_residual() <= tol;
    report
}
