//! Asymptotically optimal one-sided tests based on a projected influence
//! curve, their power limits, Monte Carlo harnesses, and the finite
//! Neyman–Pearson ingredients of the uniqueness argument.
//!
//! The test `τₙ = 1((1/√n) Σ κ̂(xᵢ) > ‖κ̂‖ u_α)` uses `κ̂ = κ̃` (cone) or
//! `κ̂ = κ̄` (span). Along `P_{n,t,g}` its rejection probability tends to
//! `Φ(−u_α + t⟨κ̂|g⟩/‖κ̂‖)`. The rejection inequality is strict, so with
//! discrete data the boundary value is accepted.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::hilbert;
use crate::math::sqrt;
use crate::mc::{self, Executor};
use crate::measure::BaseMeasure;
use crate::normal;
use crate::paths::{self, PathKind, PerturbedMeasure};

#[derive(Debug, Clone)]
pub struct TestSpec {
    pub influence: ScalarFunction,
    pub norm: f64,
    pub level: f64,
    pub u_alpha: f64,
}

impl TestSpec {
    /// Computes `‖κ̂‖` under `P`. A zero influence curve is degenerate.
    pub fn new(influence: ScalarFunction, level: f64, p: &BaseMeasure) -> Result<Self> {
        let norm = sqrt(hilbert::norm_sq(&influence, p)?);
        Self::with_norm(influence, norm, level)
    }

    /// For callers that already know `‖κ̂‖`.
    pub fn with_norm(influence: ScalarFunction, norm: f64, level: f64) -> Result<Self> {
        check_level(level)?;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate(format!("influence curve '{}' has norm {norm}", influence.label())));
        }
        Ok(Self { influence, norm, level, u_alpha: normal::upper_point(level) })
    }

    /// `(1/√n) Σ κ̂(xᵢ)`.
    pub fn statistic(&self, data: &[f64]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let sum: f64 = data.iter().map(|&x| self.influence.eval(x)).sum();
        sum / sqrt(data.len() as f64)
    }

    pub fn threshold(&self) -> f64 {
        self.norm * self.u_alpha
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("level {level} must lie in (0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Decision {
    Reject,
    Accept,
}

impl Decision {
    pub fn rejects(self) -> bool {
        self == Decision::Reject
    }
}

/// Rejects iff `(1/√n) Σ κ̂(xᵢ) > ‖κ̂‖ u_α`. Empty data never rejects.
pub fn run_test(spec: &TestSpec, data: &[f64]) -> Decision {
    if !data.is_empty() && spec.statistic(data) > spec.threshold() {
        Decision::Reject
    } else {
        Decision::Accept
    }
}

/// `Φ(−u_α + drift)`.
pub fn power_limit(u_alpha: f64, drift: f64) -> f64 {
    normal::cdf(-u_alpha + drift)
}

/// `Φ(−u_α + t⟨κ̂|g⟩/‖κ̂‖)`.
pub fn theoretical_power(spec: &TestSpec, g: &ScalarFunction, t: f64, p: &BaseMeasure) -> Result<f64> {
    let ig = hilbert::inner_product(&spec.influence, g, p)?;
    Ok(power_limit(spec.u_alpha, t * ig / spec.norm))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerReport {
    pub t: f64,
    pub mc_estimate: f64,
    pub mc_se: f64,
    pub theory: f64,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

impl PowerReport {
    /// `|mc − theory| ≤ max(k·se, slack)`.
    pub fn agrees(&self, k: f64, slack: f64) -> bool {
        (self.mc_estimate - self.theory).abs() <= (k * self.mc_se).max(slack)
    }
}

/// Rejection rate of the test on `replications` samples of size `n` from `m`.
/// The theory column is the power limit along the path's tangent at
/// `t = s√n`, or `α` for the unperturbed measure.
pub fn mc_power<E: Executor>(
    spec: &TestSpec,
    m: &PerturbedMeasure,
    n: usize,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<PowerReport> {
    if n == 0 || replications == 0 {
        return Err(Error::InvalidArgument("n and replications must be positive".to_string()));
    }
    let t = m.spec().scale() * sqrt(n as f64);
    let theory = if m.is_unperturbed() {
        power_limit(spec.u_alpha, 0.0)
    } else {
        theoretical_power(spec, m.spec().tangent(), t, m.base())?
    };
    let hits = paths::simulate(m, n, replications, seed, exec, |x| run_test(spec, x).rejects())?;
    let mc_estimate = mc::frequency(&hits);
    Ok(PowerReport {
        t,
        mc_estimate,
        mc_se: mc::proportion_se(mc_estimate, replications),
        theory,
        n,
        replications,
        seed,
    })
}

/// `‖κ̄‖² / ‖κ̃‖²`: how many more observations the span-optimal test needs
/// to match the cone-optimal one.
pub fn sample_size_ratio(cone_norm_sq: f64, span_norm_sq: f64) -> Result<f64> {
    if !(cone_norm_sq > 0.0) || !(span_norm_sq > 0.0) {
        return Err(Error::Degenerate(format!(
            "norms must be positive (cone {cone_norm_sq}, span {span_norm_sq})"
        )));
    }
    Ok(span_norm_sq / cone_norm_sq)
}

/// Rejection rates along the quadratic path through `g₀` for each `t`,
/// where `⟨κ|g₀⟩ ≤ 0 < ⟨κ̂|g₀⟩`: `g₀` belongs to the enlarged null
/// hypothesis, yet the limiting rejection rate climbs to 1.
#[allow(clippy::too_many_arguments)]
pub fn breakdown_curve<E: Executor>(
    spec: &TestSpec,
    kappa: &ScalarFunction,
    g0: &ScalarFunction,
    t_grid: &[f64],
    n: usize,
    replications: usize,
    seed: u64,
    p: &BaseMeasure,
    exec: &E,
) -> Result<Vec<PowerReport>> {
    let kg = hilbert::inner_product(kappa, g0, p)?;
    let ig = hilbert::inner_product(&spec.influence, g0, p)?;
    if !(kg <= 0.0 && 0.0 < ig) {
        return Err(Error::ConditionNotMet(format!(
            "need ⟨κ|g₀⟩ ≤ 0 < ⟨κ̂|g₀⟩, got {kg:.6} and {ig:.6}"
        )));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("t grid must be positive and strictly increasing".to_string()));
    }
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let m = paths::at_sample_size(g0, t, n as u64, PathKind::Quadratic, p)?;
            let mut report = mc_power(spec, &m, n, replications, mc::derive_seed(seed, i as u64), exec)?;
            report.t = t;
            report.theory = power_limit(spec.u_alpha, t * ig / spec.norm);
            Ok(report)
        })
        .collect()
}

/// A randomized Neyman–Pearson test on a finite sample space:
/// `τ = 1` where `q > c p`, `τ = randomization` where `q = c p`, else 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NpTest {
    pub tau: Vec<f64>,
    pub np_critical: f64,
    pub randomization: f64,
}

fn check_probability_vector(v: &[f64], name: &str) -> Result<()> {
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidProbability(format!("{name} has a negative or non-finite entry")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbability(format!("{name} sums to {total}")));
    }
    Ok(())
}

/// Exact level-`α` Neyman–Pearson test of `p` against `q`. Atoms where
/// `p = 0 < q` are always rejected at no cost in size.
pub fn np_test_discrete(p: &[f64], q: &[f64], alpha: f64) -> Result<NpTest> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::InvalidProbability("p and q must share a nonempty support".to_string()));
    }
    check_probability_vector(p, "p")?;
    check_probability_vector(q, "q")?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidProbability(format!("level {alpha} outside [0, 1]")));
    }
    let k = p.len();
    let mut tau = alloc::vec![0.0; k];
    for i in 0..k {
        if p[i] == 0.0 && q[i] > 0.0 {
            tau[i] = 1.0;
        }
    }
    let mut order: Vec<usize> = (0..k).filter(|&i| p[i] > 0.0).collect();
    let ratio = |i: usize| q[i] / p[i];
    order.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));

    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let mut above = 0.0;
    let mut start = 0;
    while start < order.len() {
        let c = ratio(order[start]);
        let mut end = start;
        while end < order.len() && same(ratio(order[end]), c) {
            end += 1;
        }
        let mass: f64 = order[start..end].iter().map(|&i| p[i]).sum();
        if above + mass >= alpha || end == order.len() {
            let gamma = ((alpha - above) / mass).clamp(0.0, 1.0);
            for &i in &order[start..end] {
                tau[i] = gamma;
            }
            return Ok(NpTest { tau, np_critical: c, randomization: gamma });
        }
        for &i in &order[start..end] {
            tau[i] = 1.0;
        }
        above += mass;
        start = end;
    }
    unreachable!("p has positive mass somewhere")
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TvBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|ν_c|{|τ − τ*| > ε} ≤ (1 + c) δ / ε` for `ν_c = Q − cP`, given that `τ`
/// loses at most `δ` in size and in power against the Neyman–Pearson test
/// `τ*` with critical value `c`.
#[allow(clippy::too_many_arguments)]
pub fn tv_uniqueness_bound(
    p: &[f64],
    q: &[f64],
    tau: &[f64],
    tau_star: &[f64],
    np_critical: f64,
    delta: f64,
    epsilon: f64,
) -> Result<TvBound> {
    let k = p.len();
    if q.len() != k || tau.len() != k || tau_star.len() != k {
        return Err(Error::InvalidArgument("all vectors must have the same length".to_string()));
    }
    check_probability_vector(p, "p")?;
    check_probability_vector(q, "q")?;
    if tau.iter().chain(tau_star).any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidProbability("tests must take values in [0, 1]".to_string()));
    }
    let c = np_critical;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("critical value {c} must be finite and nonnegative")));
    }
    if !(delta >= 0.0) || !delta.is_finite() || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("need δ ≥ 0 finite and ε > 0".to_string()));
    }
    for i in 0..k {
        let d = q[i] - c * p[i];
        if (d > 1e-12 && tau_star[i] != 1.0) || (d < -1e-12 && tau_star[i] != 0.0) {
            return Err(Error::PremiseViolated(format!("τ* is not a Neyman–Pearson test at atom {i}")));
        }
    }
    let size: f64 = tau.iter().zip(p).map(|(t, p)| t * p).sum();
    let size_star: f64 = tau_star.iter().zip(p).map(|(t, p)| t * p).sum();
    let power: f64 = tau.iter().zip(q).map(|(t, q)| t * q).sum();
    let power_star: f64 = tau_star.iter().zip(q).map(|(t, q)| t * q).sum();
    if size > size_star + delta + 1e-12 || power < power_star - delta - 1e-12 {
        return Err(Error::PremiseViolated(format!(
            "size {size} vs {size_star}, power {power} vs {power_star} exceed δ = {delta}"
        )));
    }
    let lhs: f64 = (0..k)
        .filter(|&i| (tau[i] - tau_star[i]).abs() > epsilon)
        .map(|i| (q[i] - c * p[i]).abs())
        .sum();
    let rhs = (1.0 + c) * delta / epsilon;
    Ok(TvBound { lhs, rhs, holds: lhs <= rhs + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::Serial;

    fn cone_spec() -> TestSpec {
        let b1 = 2.0 * normal::INV_SQRT_2PI;
        TestSpec::new(ScalarFunction::sign().scaled(b1), 0.05, &BaseMeasure::standard_normal()).unwrap()
    }

    #[test]
    fn spec_invariants() {
        let s = cone_spec();
        assert!((normal::cdf(-s.u_alpha) - 0.05).abs() < 1e-9);
        assert!((s.norm * s.norm - 0.6366).abs() < 1e-4);
        assert!(TestSpec::new(ScalarFunction::zero(), 0.05, &BaseMeasure::standard_normal()).is_err());
        assert!(TestSpec::with_norm(ScalarFunction::sign(), 1.0, 1.5).is_err());
    }

    #[test]
    fn run_test_examples() {
        let s = cone_spec();
        let zero_infl = TestSpec::with_norm(ScalarFunction::odd_step("g", 1.0, 0.0, 1.0), 1.0, 0.05).unwrap();
        assert_eq!(run_test(&zero_infl, &[0.5, -0.2, 0.9]), Decision::Accept);
        let big = TestSpec::with_norm(ScalarFunction::constant(2.0 * 1.0 * normal::upper_point(0.05)), 1.0, 0.05).unwrap();
        assert_eq!(run_test(&big, &[0.0]), Decision::Reject);
        // exactly at the threshold: strict inequality accepts
        let edge = TestSpec::with_norm(ScalarFunction::constant(1.0), 1.0 / s.u_alpha, 0.05).unwrap();
        assert_eq!(run_test(&edge, &[0.0]), Decision::Accept);
    }

    #[test]
    fn theoretical_power_examples() {
        let p = BaseMeasure::standard_normal();
        let s = cone_spec();
        assert!((theoretical_power(&s, &ScalarFunction::zero(), 3.0, &p).unwrap() - 0.05).abs() < 1e-12);
        // t⟨κ|g₁⟩ = 1 along g₁
        let t = 1.0 / (2.0 * normal::INV_SQRT_2PI);
        let pw = theoretical_power(&s, &ScalarFunction::sign(), t, &p).unwrap();
        assert!((pw - 0.348).abs() < 1e-3, "{pw}");
        // span norm 0.9394
        assert!((power_limit(s.u_alpha, 1.0 / libm::sqrt(0.882)) - 0.281).abs() < 1e-3);
    }

    #[test]
    fn power_is_monotone_in_t() {
        let p = BaseMeasure::standard_normal();
        let s = cone_spec();
        let g = ScalarFunction::sign();
        let mut prev = 0.0;
        for i in 1..20 {
            let v = theoretical_power(&s, &g, i as f64 * 0.3, &p).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let orth = ScalarFunction::odd_step("o", 1.0, 0.0, 0.0);
        let a = theoretical_power(&s, &orth, 1.0, &p).unwrap();
        let b = theoretical_power(&s, &orth, 5.0, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_replication() {
        let s = cone_spec();
        let m = PerturbedMeasure::unperturbed(BaseMeasure::standard_normal());
        let r = mc_power(&s, &m, 50, 1, 3, &Serial).unwrap();
        assert!(r.mc_estimate == 0.0 || r.mc_estimate == 1.0);
        assert_eq!(r.mc_se, 0.0);
        assert_eq!(r.theory, 0.05);
    }

    #[test]
    fn mc_size_is_seeded() {
        let s = cone_spec();
        let m = PerturbedMeasure::unperturbed(BaseMeasure::standard_normal());
        let a = mc_power(&s, &m, 200, 400, 17, &Serial).unwrap();
        let b = mc_power(&s, &m, 200, 400, 17, &Serial).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_size_ratios() {
        assert!((sample_size_ratio(0.637, 0.882).unwrap() - 1.3846).abs() < 1e-3);
        assert_eq!(sample_size_ratio(0.5, 0.5).unwrap(), 1.0);
        let (x, y) = (0.37, 1.9);
        assert!((sample_size_ratio(x, y).unwrap() * sample_size_ratio(y, x).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(sample_size_ratio(0.0, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn breakdown_requires_condition() {
        let p = BaseMeasure::standard_normal();
        let s = cone_spec();
        let r = breakdown_curve(&s, &ScalarFunction::identity(), &ScalarFunction::sign(), &[1.0], 100, 10, 1, &p, &Serial);
        assert!(matches!(r, Err(Error::ConditionNotMet(_))));
    }

    #[test]
    fn np_examples() {
        let t = np_test_discrete(&[0.5, 0.5], &[0.75, 0.25], 0.25).unwrap();
        assert_eq!(t.tau, alloc::vec![0.5, 0.0]);
        assert_eq!(t.np_critical, 1.5);
        assert_eq!(t.randomization, 0.5);
        let p = [0.2, 0.3, 0.5];
        let t = np_test_discrete(&p, &p, 0.05).unwrap();
        let size: f64 = t.tau.iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!((size - 0.05).abs() < 1e-15);
        let t = np_test_discrete(&[0.5, 0.5, 0.0], &[0.2, 0.3, 0.5], 0.0).unwrap();
        assert_eq!(t.tau, alloc::vec![0.0, 0.0, 1.0]);
        assert!(np_test_discrete(&[0.5, 0.6], &[0.5, 0.5], 0.1).is_err());
    }

    #[test]
    fn tv_trivia() {
        let (p, q) = ([0.5, 0.3, 0.2], [0.1, 0.3, 0.6]);
        let np = np_test_discrete(&p, &q, 0.3).unwrap();
        let b = tv_uniqueness_bound(&p, &q, &np.tau, &np.tau, np.np_critical, 0.0, 0.1).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert!(b.holds);
        let other = [0.0, 0.5, 0.5];
        let b = tv_uniqueness_bound(&p, &q, &other, &np.tau, np.np_critical, 0.5, 1.5).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert!(matches!(
            tv_uniqueness_bound(&p, &q, &other, &np.tau, np.np_critical, 0.0, 0.1),
            Err(Error::PremiseViolated(_))
        ));
    }
}
