//! One-step efficient estimators, their confidence limits, and Monte Carlo
//! probes of coverage, median bias, positive-part equivalence and Hájek
//! regularity.
//!
//! The estimator is `Sₙ = T(P) + (1/n) Σ η(xᵢ)` for an influence curve `η`
//! (`κ̃`, `κ̄` or a custom one) and known anchor `T(P)`. Along `P_{n,t,g}`,
//! `√n(Sₙ − T(P_{n,t,g}))` tends to `N(t⟨η − κ|g⟩, ‖η‖²)`, with `T(P_{n,t,g})`
//! taken to first order as `T(P) + t⟨κ|g⟩/√n`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::hilbert;
use crate::math::sqrt;
use crate::mc::{self, Executor};
use crate::measure::BaseMeasure;
use crate::normal;
use crate::paths::{self, PathKind, PerturbedMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EstimatorKind {
    ConeEfficient,
    SpanEfficient,
    Custom,
}

#[derive(Debug, Clone)]
pub struct EstimatorSpec {
    pub influence: ScalarFunction,
    pub anchor: f64,
    pub norm: f64,
    pub kind: EstimatorKind,
    /// `a` in the modification `S̆ₙ = Sₙ ∨ (T(P) − a/√n)`.
    pub floor: Option<f64>,
}

impl EstimatorSpec {
    /// Checks that `η` is mean-zero under `P` and computes `‖η‖`.
    pub fn new(influence: ScalarFunction, anchor: f64, kind: EstimatorKind, p: &BaseMeasure) -> Result<Self> {
        let m = hilbert::mean(&influence, p)?;
        if m.abs() > 1e-8 {
            return Err(Error::InvalidTangent { label: influence.label().to_string(), mean: m });
        }
        let norm = sqrt(hilbert::norm_sq(&influence, p)?);
        if !(norm > 0.0) {
            return Err(Error::Degenerate(format!("influence curve '{}' is zero", influence.label())));
        }
        Ok(Self { influence, anchor, norm, kind, floor: None })
    }

    pub fn with_floor(mut self, a: f64) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::InvalidArgument(format!("floor offset {a} must be nonnegative")));
        }
        self.floor = Some(a);
        Ok(self)
    }

    pub fn with_anchor(mut self, anchor: f64) -> Self {
        self.anchor = anchor;
        self
    }
}

/// `T(P) + (1/n) Σ η(xᵢ)`, floored at `T(P) − a/√n` when a floor is set.
pub fn one_step_estimate(spec: &EstimatorSpec, data: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.len() as f64;
    let s = spec.anchor + data.iter().map(|&x| spec.influence.eval(x)).sum::<f64>() / n;
    Ok(match spec.floor {
        Some(a) => s.max(spec.anchor - a / sqrt(n)),
        None => s,
    })
}

/// `(Sₙ − c/√n, Sₙ + c/√n)`.
pub fn confidence_limits(spec: &EstimatorSpec, data: &[f64], c: f64) -> Result<(f64, f64)> {
    let s = one_step_estimate(spec, data)?;
    let h = c / sqrt(data.len() as f64);
    Ok((s - h, s + h))
}

/// First-order quantities of a path relative to an estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PathOffsets {
    /// `t⟨κ|g⟩`: `√n(T(P_{n,t,g}) − T(P))`.
    target: f64,
    /// `t⟨η − κ|g⟩`: the mean of the limit law of `√n(Sₙ − T(P_{n,t,g}))`.
    drift: f64,
}

fn offsets(spec: &EstimatorSpec, kappa: &ScalarFunction, m: &PerturbedMeasure, n: usize) -> Result<PathOffsets> {
    if m.is_unperturbed() {
        return Ok(PathOffsets { target: 0.0, drift: 0.0 });
    }
    let t = m.spec().scale() * sqrt(n as f64);
    let g = m.spec().tangent();
    let kg = hilbert::inner_product(kappa, g, m.base())?;
    let eg = hilbert::inner_product(&spec.influence, g, m.base())?;
    Ok(PathOffsets { target: t * kg, drift: t * (eg - kg) })
}

/// `√n(Sₙ − T(P_{n,t,g}))` for every replication.
fn centered_estimates<E: Executor>(
    spec: &EstimatorSpec,
    m: &PerturbedMeasure,
    target: f64,
    n: usize,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<f64>> {
    if n == 0 || replications == 0 {
        return Err(Error::InvalidArgument("n and replications must be positive".to_string()));
    }
    let rn = sqrt(n as f64);
    let out = paths::simulate(m, n, replications, seed, exec, |x| {
        one_step_estimate(spec, x).map(|s| rn * (s - spec.anchor) - target)
    })?;
    out.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageReport {
    /// Upper end `t` (or `t″`).
    pub t: f64,
    /// Lower end `t′` of a two-sided event, if any.
    pub t_lower: Option<f64>,
    pub empirical: f64,
    pub theory: f64,
    pub mc_se: f64,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

impl CoverageReport {
    pub fn agrees(&self, k: f64, slack: f64) -> bool {
        (self.empirical - self.theory).abs() <= (k * self.mc_se).max(slack)
    }
}

/// Frequency of `√n(Sₙ − T(Q)) < t` under `Q = m`, against the limit
/// `Φ((t − t_path⟨η − κ|g⟩)/‖η‖)`. At `t = c` under `P` this is the
/// coverage of the lower limit `Sₙ − c/√n`.
#[allow(clippy::too_many_arguments)]
pub fn mc_coverage<E: Executor>(
    spec: &EstimatorSpec,
    kappa: &ScalarFunction,
    m: &PerturbedMeasure,
    t: f64,
    n: usize,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<CoverageReport> {
    let off = offsets(spec, kappa, m, n)?;
    let z = centered_estimates(spec, m, off.target, n, replications, seed, exec)?;
    let empirical = z.iter().filter(|&&v| v < t).count() as f64 / replications as f64;
    Ok(CoverageReport {
        t,
        t_lower: None,
        empirical,
        theory: normal::cdf((t - off.drift) / spec.norm),
        mc_se: mc::proportion_se(empirical, replications),
        n,
        replications,
        seed,
    })
}

/// Frequency of `−t′ < √n(Sₙ − T(Q)) < t″`, the coverage of the interval
/// `(Sₙ − t″/√n, Sₙ + t′/√n)`.
#[allow(clippy::too_many_arguments)]
pub fn mc_interval_coverage<E: Executor>(
    spec: &EstimatorSpec,
    kappa: &ScalarFunction,
    m: &PerturbedMeasure,
    t_lower: f64,
    t_upper: f64,
    n: usize,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<CoverageReport> {
    if !(-t_lower < t_upper) {
        return Err(Error::InvalidArgument(format!("need −t′ < t″, got t′ = {t_lower}, t″ = {t_upper}")));
    }
    let off = offsets(spec, kappa, m, n)?;
    let z = centered_estimates(spec, m, off.target, n, replications, seed, exec)?;
    let empirical = z.iter().filter(|&&v| -t_lower < v && v < t_upper).count() as f64 / replications as f64;
    let theory = normal::cdf((t_upper - off.drift) / spec.norm) - normal::cdf((-t_lower - off.drift) / spec.norm);
    Ok(CoverageReport {
        t: t_upper,
        t_lower: Some(t_lower),
        empirical,
        theory,
        mc_se: mc::proportion_se(empirical, replications),
        n,
        replications,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MedianBiasReport {
    pub t_grid: Vec<f64>,
    /// `P{Sₙ ≤ T(P_{n,t,g})}` per grid point.
    pub prob_le: Vec<f64>,
    pub mc_se: Vec<f64>,
    /// `Φ(−t⟨η − κ|g⟩/‖η‖)`.
    pub theory: Vec<f64>,
    /// Whether `0 < ⟨κ|g⟩ < ⟨η|g⟩`, so that the theory decreases to 0.
    pub breakdown_mode: bool,
}

/// Probability of underestimating the first-order target along the
/// quadratic path through `g`, for each `t`.
#[allow(clippy::too_many_arguments)]
pub fn median_bias_probe<E: Executor>(
    spec: &EstimatorSpec,
    kappa: &ScalarFunction,
    g: &ScalarFunction,
    t_grid: &[f64],
    n: usize,
    replications: usize,
    seed: u64,
    p: &BaseMeasure,
    exec: &E,
) -> Result<MedianBiasReport> {
    let mean = hilbert::mean(g, p)?;
    if mean.abs() > 1e-8 {
        return Err(Error::InvalidTangent { label: g.label().to_string(), mean });
    }
    let kg = hilbert::inner_product(kappa, g, p)?;
    let eg = hilbert::inner_product(&spec.influence, g, p)?;
    // equality up to rounding (the span estimator) is not breakdown
    let breakdown_mode = 0.0 < kg && kg + 1e-9 * (1.0 + kg.abs()) < eg;
    if breakdown_mode && t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("t grid must be strictly increasing".to_string()));
    }
    let mut report = MedianBiasReport { t_grid: t_grid.to_vec(), prob_le: Vec::new(), mc_se: Vec::new(), theory: Vec::new(), breakdown_mode };
    for (i, &t) in t_grid.iter().enumerate() {
        let m = paths::at_sample_size(g, t, n as u64, PathKind::Quadratic, p)?;
        let z = centered_estimates(spec, &m, t * kg, n, replications, mc::derive_seed(seed, i as u64), exec)?;
        let prob = z.iter().filter(|&&v| v <= 0.0).count() as f64 / replications as f64;
        report.prob_le.push(prob);
        report.mc_se.push(mc::proportion_se(prob, replications));
        report.theory.push(normal::cdf(-t * (eg - kg) / spec.norm));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PositivePartReport {
    pub max: f64,
    pub p99: f64,
    pub mean: f64,
    /// Replications with a nonzero difference.
    pub nonzero: usize,
    pub replications: usize,
}

/// Distribution under `Pⁿ` of `|(√n(S_A − T(P)))₊ − (√n(S_B − T(P)))₊|`,
/// both estimators evaluated on the same samples.
pub fn positive_part_compare<E: Executor>(
    spec_a: &EstimatorSpec,
    spec_b: &EstimatorSpec,
    n: usize,
    replications: usize,
    seed: u64,
    p: &BaseMeasure,
    exec: &E,
) -> Result<PositivePartReport> {
    if spec_a.anchor != spec_b.anchor {
        return Err(Error::InvalidArgument("estimators must share the anchor".to_string()));
    }
    if n == 0 || replications == 0 {
        return Err(Error::InvalidArgument("n and replications must be positive".to_string()));
    }
    let m = PerturbedMeasure::unperturbed(p.clone());
    let rn = sqrt(n as f64);
    let diffs = paths::simulate(&m, n, replications, seed, exec, |x| -> Result<f64> {
        let a = (rn * (one_step_estimate(spec_a, x)? - spec_a.anchor)).max(0.0);
        let b = (rn * (one_step_estimate(spec_b, x)? - spec_b.anchor)).max(0.0);
        Ok((a - b).abs())
    })?
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);
    let idx = ((0.99 * replications as f64) as usize).min(replications - 1);
    Ok(PositivePartReport {
        max: sorted[replications - 1],
        p99: sorted[idx],
        mean: diffs.iter().sum::<f64>() / replications as f64,
        nonzero: diffs.iter().filter(|&&d| d != 0.0).count(),
        replications,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HajekRow {
    pub t: f64,
    pub tangent: String,
    /// Empirical cdf of `√n(Sₙ − T(P_{n,t,g}))` at the probe points.
    pub cdf: Vec<f64>,
    /// `max |cdf − base cdf|` over the probe points.
    pub max_deviation: f64,
    /// Standard error of that difference at the worst probe point.
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HajekTable {
    pub probe_points: Vec<f64>,
    pub base_cdf: Vec<f64>,
    pub rows: Vec<HajekRow>,
}

fn ecdf(z: &[f64], x: f64) -> f64 {
    z.iter().filter(|&&v| v <= x).count() as f64 / z.len() as f64
}

/// Compares the law of `√n(Sₙ − T(P_{n,t,g}))` along each `(t, g)` with its
/// law under `Pⁿ`. A regular estimator shows no dependence on `(t, g)`.
#[allow(clippy::too_many_arguments)]
pub fn hajek_probe<E: Executor>(
    spec: &EstimatorSpec,
    kappa: &ScalarFunction,
    grid: &[(f64, ScalarFunction)],
    n: usize,
    replications: usize,
    seed: u64,
    p: &BaseMeasure,
    probe_points: &[f64],
    exec: &E,
) -> Result<HajekTable> {
    let mut table = HajekTable { probe_points: probe_points.to_vec(), base_cdf: Vec::new(), rows: Vec::new() };
    if grid.is_empty() {
        return Ok(table);
    }
    let base = PerturbedMeasure::unperturbed(p.clone());
    let z0 = centered_estimates(spec, &base, 0.0, n, replications, mc::derive_seed(seed, 0), exec)?;
    table.base_cdf = probe_points.iter().map(|&x| ecdf(&z0, x)).collect();
    for (i, (t, g)) in grid.iter().enumerate() {
        let m = paths::at_sample_size(g, *t, n as u64, PathKind::Quadratic, p)?;
        let target = t * hilbert::inner_product(kappa, g, p)?;
        let z = centered_estimates(spec, &m, target, n, replications, mc::derive_seed(seed, i as u64 + 1), exec)?;
        let cdf: Vec<f64> = probe_points.iter().map(|&x| ecdf(&z, x)).collect();
        let (mut max_deviation, mut mc_se) = (0.0f64, 0.0f64);
        for (&a, &b) in cdf.iter().zip(&table.base_cdf) {
            let (sa, sb) = (mc::proportion_se(a, replications), mc::proportion_se(b, replications));
            let se = sqrt(sa * sa + sb * sb);
            if (a - b).abs() >= max_deviation {
                max_deviation = (a - b).abs();
                mc_se = se;
            }
        }
        table.rows.push(HajekRow { t: *t, tangent: g.label().to_string(), cdf, max_deviation, mc_se });
    }
    Ok(table)
}
