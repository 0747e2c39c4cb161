//! Signed linear rank statistics and the rank tests built from them.
//!
//! For a score function `ϱ` on `(0,1)` and data `x₁…xₙ` the statistic is
//! `Rₙ = (1/n) Σ sign(xᵢ) ϱₙ(r⁺ᵢ)`, where `r⁺ᵢ` is the rank of `|xᵢ|`. At
//! any `P` symmetric about 0 it is asymptotically linear with influence
//! curve `κ_P(x) = sign(x) ϱ(2P(|x|) − 1)`, and `q ↦ g_{P,q}` maps `L2(λ₀)`
//! isometrically onto the odd tangents at `P`. Composing a tangent with the
//! quantile map in the other direction recovers `q` from `g_{P,q}`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::hilbert;
use crate::math::{sign, sqrt};
use crate::mc::{self, Executor};
use crate::measure::BaseMeasure;
use crate::normal;
use crate::one_sided::{self, Decision, PowerReport, TestSpec};
use crate::paths::{self, PerturbedMeasure};
use crate::quadrature::{self, DEFAULT_ORDER};

/// A score function `ϱ` on `(0,1)` with its norm in `L2(λ₀)`.
#[derive(Debug, Clone)]
pub struct ScoreFunction {
    rho: ScalarFunction,
    norm_sq_0: f64,
    unbounded: bool,
}

impl ScoreFunction {
    /// `unbounded` declares endpoint singularities (normal scores, say).
    pub fn new(rho: ScalarFunction, unbounded: bool) -> Result<Self> {
        let norm_sq_0 = hilbert::norm_sq(&rho, &BaseMeasure::unit_interval())?;
        if !norm_sq_0.is_finite() {
            return Err(Error::InvalidArgument(format!("score '{}' is not square integrable", rho.label())));
        }
        Ok(Self { rho, norm_sq_0, unbounded })
    }

    /// `ϱ(s) = Φ⁻¹((1 + s)/2)`.
    pub fn normal_scores() -> Self {
        let rho = ScalarFunction::new("normal scores", |s| normal::quantile(0.5 * (1.0 + s))).with_support(0.0, 1.0);
        Self::new(rho, true).expect("normal scores are square integrable")
    }

    pub fn constant(c: f64) -> Self {
        Self::new(ScalarFunction::constant(c).with_support(0.0, 1.0), false).expect("constants are integrable")
    }

    /// `ϱ(s) = s`, the Wilcoxon signed rank scores.
    pub fn wilcoxon() -> Self {
        let rho = ScalarFunction::new("wilcoxon", |s| s).with_sup_bound(1.0).with_support(0.0, 1.0);
        Self::new(rho, false).expect("bounded")
    }

    /// Step scores: `values[i]` on `(breaks[i−1], breaks[i]]` with
    /// `breaks` interior to `(0, 1)`.
    pub fn step(label: impl Into<String>, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::InvalidArgument("step breakpoints must lie in (0, 1)".to_string()));
        }
        let rho = ScalarFunction::piecewise_constant(label, breaks, values)?.with_support(0.0, 1.0);
        Self::new(rho, false)
    }

    pub fn function(&self) -> &ScalarFunction {
        &self.rho
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.rho.eval(s)
    }

    pub fn norm_sq_0(&self) -> f64 {
        self.norm_sq_0
    }

    pub fn norm_0(&self) -> f64 {
        sqrt(self.norm_sq_0)
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreScheme {
    /// `ϱ(i/(n+1))`.
    Midpoint,
    /// `n ∫_{(i−1)/n}^{i/n} ϱ dλ₀`.
    CellAverage,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreArray {
    pub n: usize,
    pub values: Vec<f64>,
    pub scheme: ScoreScheme,
    /// A midpoint request that hit a non-finite score and was served by
    /// cell averages instead.
    pub fell_back: bool,
}

/// Scores `ϱₙ(1..n)` for sample size `n`.
pub fn score_array(rho: &ScoreFunction, n: usize, scheme: ScoreScheme) -> Result<ScoreArray> {
    if n == 0 {
        return Err(Error::InvalidArgument("score arrays need n ≥ 1".to_string()));
    }
    if scheme == ScoreScheme::Midpoint {
        let values: Vec<f64> = (1..=n).map(|i| rho.eval(i as f64 / (n as f64 + 1.0))).collect();
        if values.iter().all(|v| v.is_finite()) {
            return Ok(ScoreArray { n, values, scheme, fell_back: false });
        }
    }
    let values = cell_averages(rho, n)?;
    Ok(ScoreArray { n, values, scheme: ScoreScheme::CellAverage, fell_back: scheme == ScoreScheme::Midpoint })
}

fn cell_averages(rho: &ScoreFunction, n: usize) -> Result<Vec<f64>> {
    let (nodes, weights) = quadrature::gauss_legendre(DEFAULT_ORDER);
    let breaks = rho.function().breakpoints();
    let integrate = |a: f64, b: f64| -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        nodes.iter().zip(&weights).map(|(&u, &w)| w * rho.eval(mid + half * u)).sum::<f64>() * half
    };
    let nf = n as f64;
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let (lo, hi) = ((i - 1) as f64 / nf, if i == n { 1.0 } else { i as f64 / nf });
        let base = if rho.is_unbounded() && (i == 1 || i == n) {
            quadrature::graded_edges(lo, hi, 4, 12)
        } else {
            alloc::vec![lo, hi]
        };
        let edges = quadrature::merge_edges(&base, breaks);
        let total: f64 = edges.windows(2).map(|w| integrate(w[0], w[1])).sum();
        let v = total * nf;
        if !v.is_finite() {
            return Err(Error::Evaluation { label: rho.function().label().to_string(), node: lo });
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankStatistic {
    pub value: f64,
    /// `r⁺ᵢ`, a permutation of `1..=n` in data order.
    pub abs_ranks: Vec<usize>,
    /// `sign(xᵢ)` in data order (0 for a zero observation).
    pub signs: Vec<f64>,
    /// Some `|xᵢ|` were equal; ties were broken by position.
    pub ties: bool,
}

/// `Rₙ = (1/n) Σ sign(xᵢ) ϱₙ(r⁺ᵢ)`. The sum runs in rank order, so the value
/// does not depend on the order of the data when the `|xᵢ|` are distinct.
pub fn signed_rank_stat(data: &[f64], scores: &ScoreArray) -> Result<RankStatistic> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if data.len() != scores.n {
        return Err(Error::InvalidArgument(format!("{} observations but scores for n = {}", data.len(), scores.n)));
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data[a].abs().total_cmp(&data[b].abs()).then(a.cmp(&b)));
    let mut abs_ranks = alloc::vec![0usize; n];
    let mut total = 0.0;
    let mut ties = false;
    for (k, &i) in order.iter().enumerate() {
        abs_ranks[i] = k + 1;
        total += sign(data[i]) * scores.values[k];
        if k > 0 && data[order[k - 1]].abs() == data[i].abs() {
            ties = true;
        }
    }
    let signs = data.iter().map(|&x| sign(x)).collect();
    Ok(RankStatistic { value: total / n as f64, abs_ranks, signs, ties })
}

/// `x ↦ sign(x) q(2P(|x|) − 1)` with breakpoints mapped back to the line.
fn compose_with_cdf(q: &ScoreFunction, p: &BaseMeasure, label: String) -> Result<ScalarFunction> {
    p.check_symmetric(1e-9)?;
    let mut breaks: Vec<f64> = alloc::vec![0.0];
    for &s in q.function().breakpoints() {
        let x = p.quantile(0.5 * (1.0 + s));
        if x.is_finite() {
            breaks.push(x);
            breaks.push(-x);
        }
    }
    let (rho, pm) = (q.function().clone(), p.clone());
    let mut f = ScalarFunction::new(label, move |x| {
        if x == 0.0 {
            return 0.0;
        }
        sign(x) * rho.eval(2.0 * pm.cdf(x.abs()) - 1.0)
    })
    .with_breakpoints(breaks);
    if let Some(b) = q.function().sup_bound() {
        f = f.with_sup_bound(b);
    }
    Ok(f)
}

/// The influence curve `κ_P(x) = sign(x) ϱ(2P(|x|) − 1)` of the rank
/// functional at a symmetric `P`.
pub fn rank_influence_curve(rho: &ScoreFunction, p: &BaseMeasure) -> Result<ScalarFunction> {
    compose_with_cdf(rho, p, format!("kappa_P[{}]", rho.function().label()))
}

/// The invariant tangent `g_{P,q}(x) = sign(x) q(2P(|x|) − 1)`; odd, hence
/// mean-zero, with `‖g_{P,q}‖_P = ‖q‖₀`.
pub fn invariant_tangent(q: &ScoreFunction, p: &BaseMeasure) -> Result<ScalarFunction> {
    compose_with_cdf(q, p, format!("g_P[{}]", q.function().label()))
}

/// The rank test `1(√n Rₙ > ‖ϱ̂‖₀ u_α)` at a fixed sample size, with the
/// cell-average scores computed once.
#[derive(Debug, Clone)]
pub struct RankTest {
    pub scores: ScoreArray,
    pub norm_0: f64,
    pub level: f64,
    pub u_alpha: f64,
}

impl RankTest {
    pub fn new(rho_hat: &ScoreFunction, level: f64, n: usize) -> Result<Self> {
        one_sided::check_level(level)?;
        let norm_0 = rho_hat.norm_0();
        if !(norm_0 > 0.0) {
            return Err(Error::Degenerate("score function is zero".to_string()));
        }
        let scores = score_array(rho_hat, n, ScoreScheme::CellAverage)?;
        Ok(Self { scores, norm_0, level, u_alpha: normal::upper_point(level) })
    }

    pub fn decide(&self, data: &[f64]) -> Result<Decision> {
        let r = signed_rank_stat(data, &self.scores)?;
        Ok(if sqrt(data.len() as f64) * r.value > self.norm_0 * self.u_alpha {
            Decision::Reject
        } else {
            Decision::Accept
        })
    }
}

/// One-shot form of [`RankTest`].
pub fn optimal_rank_test(rho_hat: &ScoreFunction, alpha: f64, data: &[f64]) -> Result<Decision> {
    RankTest::new(rho_hat, alpha, data.len())?.decide(data)
}

/// Rejection rate of the rank test under `Pⁿ`; the theory column is `α`
/// for every symmetric `P`.
pub fn mc_rank_size<E: Executor>(
    rho_hat: &ScoreFunction,
    alpha: f64,
    p: &BaseMeasure,
    n: usize,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<PowerReport> {
    p.check_symmetric(1e-9)?;
    let test = RankTest::new(rho_hat, alpha, n)?;
    let m = PerturbedMeasure::unperturbed(p.clone());
    let hits = paths::simulate(&m, n, replications, seed, exec, |x| test.decide(x).map(Decision::rejects))?
        .into_iter()
        .collect::<Result<Vec<bool>>>()?;
    let rate = mc::frequency(&hits);
    Ok(PowerReport {
        t: 0.0,
        mc_estimate: rate,
        mc_se: mc::proportion_se(rate, replications),
        theory: alpha,
        n,
        replications,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisagreementReport {
    pub n: usize,
    pub rate: f64,
    pub mc_se: f64,
    pub rank_rejections: f64,
    pub kappa_rejections: f64,
    pub replications: usize,
    pub seed: u64,
}

/// How often the rank test and the test based on `κ̂_P` (same norm, same
/// level) decide differently on the same samples from `Pⁿ`.
pub fn rank_disagreement<E: Executor>(
    rho_hat: &ScoreFunction,
    alpha: f64,
    p: &BaseMeasure,
    n: usize,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<DisagreementReport> {
    let rank = RankTest::new(rho_hat, alpha, n)?;
    let kappa = TestSpec::with_norm(rank_influence_curve(rho_hat, p)?, rho_hat.norm_0(), alpha)?;
    let m = PerturbedMeasure::unperturbed(p.clone());
    let pairs = paths::simulate(&m, n, replications, seed, exec, |x| {
        rank.decide(x).map(|d| (d.rejects(), one_sided::run_test(&kappa, x).rejects()))
    })?
    .into_iter()
    .collect::<Result<Vec<(bool, bool)>>>()?;
    let reps = replications as f64;
    let rate = pairs.iter().filter(|(a, b)| a != b).count() as f64 / reps;
    Ok(DisagreementReport {
        n,
        rate,
        mc_se: mc::proportion_se(rate, replications),
        rank_rejections: pairs.iter().filter(|(a, _)| *a).count() as f64 / reps,
        kappa_rejections: pairs.iter().filter(|(_, b)| *b).count() as f64 / reps,
        replications,
        seed,
    })
}

/// Monte Carlo `E[(√n Rₙ − (1/√n) Σ κ_P(xᵢ))²]` under `Pⁿ`, with cell-average scores.
pub fn rank_linearity_check<E: Executor>(
    rho: &ScoreFunction,
    p: &BaseMeasure,
    n: usize,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<f64> {
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be positive".to_string()));
    }
    let kappa = rank_influence_curve(rho, p)?;
    let scores = score_array(rho, n, ScoreScheme::CellAverage)?;
    let m = PerturbedMeasure::unperturbed(p.clone());
    let rn = sqrt(n as f64);
    let sq = paths::simulate(&m, n, replications, seed, exec, |x| {
        signed_rank_stat(x, &scores).map(|r| {
            let lin: f64 = x.iter().map(|&v| kappa.eval(v)).sum::<f64>() / rn;
            let d = rn * r.value - lin;
            d * d
        })
    })?
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(sq.iter().sum::<f64>() / replications as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::Serial;

    fn ident_array(values: Vec<f64>) -> ScoreArray {
        ScoreArray { n: values.len(), values, scheme: ScoreScheme::Midpoint, fell_back: false }
    }

    #[test]
    fn statistic_examples() {
        let r = signed_rank_stat(&[1.0, -2.0], &ident_array(alloc::vec![1.0, 2.0])).unwrap();
        assert_eq!(r.value, -0.5);
        assert_eq!(r.abs_ranks, alloc::vec![1, 2]);
        assert!(!r.ties);
        let r = signed_rank_stat(&[0.3, 2.0, 1.1], &ident_array(alloc::vec![1.0; 3])).unwrap();
        assert_eq!(r.value, 1.0);
        let data = [0.4, -1.3, 2.2, -0.1, 0.9];
        let s = ident_array(alloc::vec![0.1, 0.5, 0.2, 0.9, 0.3]);
        let flipped: Vec<f64> = data.iter().map(|x| -x).collect();
        assert_eq!(signed_rank_stat(&flipped, &s).unwrap().value, -signed_rank_stat(&data, &s).unwrap().value);
        let r = signed_rank_stat(&[1.0, -1.0], &ident_array(alloc::vec![1.0, 2.0])).unwrap();
        assert!(r.ties);
        assert_eq!(r.abs_ranks, alloc::vec![1, 2]);
        assert!(matches!(signed_rank_stat(&[], &ident_array(Vec::new())), Err(Error::EmptyData)));
    }

    #[test]
    fn score_schemes() {
        let w = ScoreFunction::wilcoxon();
        assert!((w.norm_sq_0() - 1.0 / 3.0).abs() < 1e-12);
        let a = score_array(&w, 3, ScoreScheme::Midpoint).unwrap();
        assert_eq!(a.values, alloc::vec![0.25, 0.5, 0.75]);
        let a = score_array(&w, 2, ScoreScheme::CellAverage).unwrap();
        assert!((a.values[0] - 0.25).abs() < 1e-15 && (a.values[1] - 0.75).abs() < 1e-15);
        assert!(score_array(&w, 0, ScoreScheme::Midpoint).is_err());
    }

    #[test]
    fn non_finite_midpoint_falls_back() {
        // infinite exactly at the midpoint 1/2, harmless for integration
        let rho = ScalarFunction::new("spike", |s: f64| if s == 0.5 { f64::INFINITY } else { s });
        let score = ScoreFunction { rho, norm_sq_0: 1.0 / 3.0, unbounded: true };
        let a = score_array(&score, 1, ScoreScheme::Midpoint).unwrap();
        assert!(a.fell_back);
        assert_eq!(a.scheme, ScoreScheme::CellAverage);
        assert!((a.values[0] - 0.5).abs() < 1e-14);
        let a = score_array(&ScoreFunction::normal_scores(), 4, ScoreScheme::Midpoint).unwrap();
        assert!(!a.fell_back);
    }

    #[test]
    fn normal_scores_norm() {
        let ns = ScoreFunction::normal_scores();
        assert!((ns.norm_sq_0() - 1.0).abs() < 1e-8, "{}", ns.norm_sq_0());
    }

    #[test]
    fn constant_scores_give_sign() {
        let p = BaseMeasure::standard_normal();
        let k = rank_influence_curve(&ScoreFunction::constant(1.0), &p).unwrap();
        for x in [-3.0, -0.2, 0.5, 4.0] {
            assert_eq!(k.eval(x), sign(x));
        }
    }

    #[test]
    fn asymmetric_measure_is_refused() {
        let p = BaseMeasure::normal(0.5, 1.0).unwrap();
        assert!(matches!(
            rank_influence_curve(&ScoreFunction::wilcoxon(), &p),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn invariant_tangent_unwinds_substitution() {
        let p = BaseMeasure::standard_normal();
        let mu = 1.0 / libm::sqrt(2.0 * normal::cdf(1.0) - 1.0);
        let q = ScoreFunction::step("q", alloc::vec![2.0 * normal::cdf(1.0) - 1.0], alloc::vec![mu, 0.0]).unwrap();
        let g = invariant_tangent(&q, &p).unwrap();
        let g2 = ScalarFunction::odd_step("g2", 1.0, mu, 0.0);
        for i in -40..=40 {
            let x = i as f64 * 0.0973;
            assert_eq!(g.eval(x), g2.eval(x), "{x}");
            assert_eq!(g.eval(-x), -g.eval(x));
        }
        assert!((hilbert::norm_sq(&g, &p).unwrap() - q.norm_sq_0()).abs() < 1e-6);
        assert!(hilbert::mean(&g, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn linearity_with_constant_scores() {
        let p = BaseMeasure::standard_normal();
        let msd = rank_linearity_check(&ScoreFunction::constant(0.7), &p, 50, 20, 5, &Serial).unwrap();
        assert!(msd < 1e-25, "{msd}");
    }

    #[test]
    fn rank_test_trivia() {
        let ns = ScoreFunction::normal_scores();
        assert_eq!(optimal_rank_test(&ns, 0.05, &[-0.3, -1.0, -2.5]).unwrap(), Decision::Accept);
        assert_eq!(optimal_rank_test(&ns, 0.05, &[0.3, 1.0, 2.5, 0.7, 1.9]).unwrap(), Decision::Reject);
    }
}
