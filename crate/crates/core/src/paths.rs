//! Perturbed measures `P_{g,s}` along a tangent `g`: density ratios,
//! rejection samplers and loglikelihood statistics.
//!
//! Two canonical paths are provided. The quadratic path
//! `dP_{g,s}/dP = (½ s g + √(1 − ¼ s²‖g‖²))²` exists for every
//! square-integrable `g` with `s²‖g‖² ≤ 4`; the linear path
//! `dP_{g,s}/dP = 1 + s g` needs `s · sup|g| ≤ 1`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::hilbert;
use crate::math::{ceil, ln, sqrt};
use crate::mc;
use crate::measure::BaseMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PathKind {
    Quadratic,
    Linear,
}

#[derive(Debug, Clone)]
pub struct PathSpec {
    tangent: ScalarFunction,
    kind: PathKind,
    scale: f64,
    norm_sq_g: f64,
}

impl PathSpec {
    /// Validates the path: `s²‖g‖² ≤ 4` (quadratic) or `s·sup|g| ≤ 1`
    /// with a declared bound (linear).
    pub fn new(tangent: ScalarFunction, kind: PathKind, scale: f64, norm_sq_g: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidPath { reason: format!("scale {scale} must be finite and nonnegative"), min_n: None });
        }
        if !(norm_sq_g >= 0.0) || !norm_sq_g.is_finite() {
            return Err(Error::InvalidPath { reason: "‖g‖² must be finite and nonnegative".to_string(), min_n: None });
        }
        match kind {
            PathKind::Quadratic => {
                if scale * scale * norm_sq_g > 4.0 {
                    return Err(Error::InvalidPath {
                        reason: format!("s²‖g‖² = {} exceeds 4", scale * scale * norm_sq_g),
                        min_n: None,
                    });
                }
            }
            PathKind::Linear => match tangent.sup_bound() {
                None => {
                    return Err(Error::InvalidPath {
                        reason: format!("linear path along unbounded tangent '{}'", tangent.label()),
                        min_n: None,
                    })
                }
                Some(sup) if scale * sup > 1.0 => {
                    return Err(Error::InvalidPath { reason: format!("s·sup|g| = {} exceeds 1", scale * sup), min_n: None })
                }
                _ => {}
            },
        }
        Ok(Self { tangent, kind, scale, norm_sq_g })
    }

    pub fn tangent(&self) -> &ScalarFunction {
        &self.tangent
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn norm_sq_g(&self) -> f64 {
        self.norm_sq_g
    }
}

#[derive(Debug, Clone)]
pub struct PerturbedMeasure {
    base: BaseMeasure,
    spec: PathSpec,
    /// `sup dP_{g,s}/dP`, known only for bounded tangents.
    ratio_sup: Option<f64>,
    root: f64,
}

impl PerturbedMeasure {
    pub fn new(base: BaseMeasure, spec: PathSpec) -> Self {
        let s = spec.scale;
        let root = sqrt((1.0 - 0.25 * s * s * spec.norm_sq_g).max(0.0));
        let ratio_sup = spec.tangent.sup_bound().map(|sup| match spec.kind {
            PathKind::Quadratic => {
                let v = 0.5 * s * sup + root;
                v * v
            }
            PathKind::Linear => 1.0 + s * sup,
        });
        Self { base, spec, ratio_sup, root }
    }

    /// `P` itself, as the zero point of any path.
    pub fn unperturbed(base: BaseMeasure) -> Self {
        let spec = PathSpec { tangent: ScalarFunction::zero(), kind: PathKind::Quadratic, scale: 0.0, norm_sq_g: 0.0 };
        Self::new(base, spec)
    }

    pub fn base(&self) -> &BaseMeasure {
        &self.base
    }

    pub fn spec(&self) -> &PathSpec {
        &self.spec
    }

    pub fn ratio_sup(&self) -> Option<f64> {
        self.ratio_sup
    }

    pub fn is_unperturbed(&self) -> bool {
        self.spec.scale == 0.0
    }

    /// `dP_{g,s}/dP (x)`.
    pub fn density_ratio(&self, x: f64) -> f64 {
        if self.is_unperturbed() {
            return 1.0;
        }
        let sg = self.spec.scale * self.spec.tangent.eval(x);
        match self.spec.kind {
            PathKind::Quadratic => {
                let v = 0.5 * sg + self.root;
                v * v
            }
            PathKind::Linear => 1.0 + sg,
        }
    }

    /// One draw by rejection against the base measure.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if self.is_unperturbed() {
            return Ok(self.base.sample(rng));
        }
        let envelope = self
            .ratio_sup
            .ok_or_else(|| Error::CannotSample { label: self.spec.tangent.label().to_string() })?;
        loop {
            let x = self.base.sample(rng);
            let u: f64 = rng.random();
            if u * envelope < self.density_ratio(x) {
                return Ok(x);
            }
        }
    }

    /// Fills `out` with i.i.d. draws.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        for x in out.iter_mut() {
            *x = self.draw(rng)?;
        }
        Ok(())
    }

    /// `count` draws from a ChaCha stream seeded by `seed`; reproducible.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = mc::replication_rng(seed, 0);
        let mut out = alloc::vec![0.0; count];
        self.sample_into(&mut rng, &mut out)?;
        Ok(out)
    }

    /// `Σ log dP_{g,s}/dP (xᵢ)`, or `−∞` if some ratio vanishes.
    pub fn loglik_stat(&self, data: &[f64]) -> f64 {
        let mut total = 0.0;
        for &x in data {
            let r = self.density_ratio(x);
            if !(r > 0.0) {
                return f64::NEG_INFINITY;
            }
            total += ln(r);
        }
        total
    }
}

/// Runs `replications` experiments of `n` draws from `m`, replication `r`
/// drawing from `mc::replication_rng(seed, r)`, and applies `f` to each sample.
pub fn simulate<E, T, F>(m: &PerturbedMeasure, n: usize, replications: usize, seed: u64, exec: &E, f: F) -> Result<Vec<T>>
where
    E: mc::Executor,
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    if m.ratio_sup.is_none() && !m.is_unperturbed() {
        return Err(Error::CannotSample { label: m.spec.tangent.label().to_string() });
    }
    let out = exec.map_replications(replications, |r| {
        let mut rng = mc::replication_rng(seed, r as u64);
        let mut buf = alloc::vec![0.0; n];
        m.sample_into(&mut rng, &mut buf).map(|_| f(&buf))
    });
    out.into_iter().collect()
}

/// `P_{n,t,g} = P_{g, t/√n}`. When the scale is too large for the path, the
/// error reports the smallest `n` that would be valid.
pub fn at_sample_size(g: &ScalarFunction, t: f64, n: u64, kind: PathKind, p: &BaseMeasure) -> Result<PerturbedMeasure> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidPath { reason: format!("t = {t} must be positive and finite"), min_n: None });
    }
    if n == 0 {
        return Err(Error::InvalidPath { reason: "n must be positive".to_string(), min_n: Some(1) });
    }
    let norm_sq_g = hilbert::norm_sq(g, p)?;
    let s = t / sqrt(n as f64);
    match PathSpec::new(g.clone(), kind, s, norm_sq_g) {
        Ok(spec) => Ok(PerturbedMeasure::new(p.clone(), spec)),
        Err(Error::InvalidPath { reason, .. }) => {
            let min_n = minimal_n(g, t, kind, norm_sq_g);
            Err(Error::InvalidPath { reason, min_n })
        }
        Err(e) => Err(e),
    }
}

fn minimal_n(g: &ScalarFunction, t: f64, kind: PathKind, norm_sq_g: f64) -> Option<u64> {
    let bound = match kind {
        PathKind::Quadratic => t * t * norm_sq_g / 4.0,
        PathKind::Linear => {
            let sup = g.sup_bound()?;
            t * t * sup * sup
        }
    };
    let mut n = (ceil(bound) as u64).max(1);
    let valid = |n: u64| {
        let s = t / sqrt(n as f64);
        match kind {
            PathKind::Quadratic => s * s * norm_sq_g <= 4.0,
            PathKind::Linear => s * g.sup_bound().unwrap_or(f64::INFINITY) <= 1.0,
        }
    };
    while !valid(n) {
        n += 1;
    }
    while n > 1 && valid(n - 1) {
        n -= 1;
    }
    Some(n)
}

/// `√n (T(P_{n,t,g}) − T(P))` to first order, `t ⟨κ|g⟩`; independent of `n`.
pub fn functional_shift(kappa: &ScalarFunction, g: &ScalarFunction, t: f64, p: &BaseMeasure) -> Result<f64> {
    Ok(t * hilbert::inner_product(kappa, g, p)?)
}

/// First-order value `T(P) + t⟨κ|g⟩/√n` from a precomputed `⟨κ|g⟩`.
pub fn first_order_value(anchor: f64, t: f64, kappa_g: f64, n: u64) -> f64 {
    anchor + t * kappa_g / sqrt(n as f64)
}
