//! The two worked examples under `P = N(0,1)` with `κ(x) = x`.
//!
//! Example 1 has generators `g₁ = sign` and `g₂ = μ_a sign·1(|x| ≤ a)` with
//! `μ_a⁻² = 2Φ(a) − 1`. The span projection puts a negative weight on `g₂`,
//! so the cone and span projections differ, and `κ̃ = b₁g₁`.
//!
//! Example 2 replaces `g₂` by the odd step `g₃`, equal to `δ_a` on `(0, a]`
//! and `−η_a` beyond `a`, where
//! `σ_a = a(1 − Φ(a))/(φ(0) − φ(a))`, `δ_a = σ_a η_a` and
//! `η_a⁻² = 2(σ_a²[Φ(a) − ½] + [1 − Φ(a)])`. Then `⟨κ|g₃⟩ < 0 < ⟨κ̃|g₃⟩`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cone::{self, GramSystem};
use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::hilbert;
use crate::math::sqrt;
use crate::measure::BaseMeasure;
use crate::model::{LocalModel, TangentSet};
use crate::normal;
use crate::quadrature::{QuadratureRule, DEFAULT_ABS_TOL, DEFAULT_ORDER};
use crate::ranks::ScoreFunction;

#[derive(Debug, Clone)]
pub struct ExampleModel {
    pub measure: BaseMeasure,
    pub kappa: ScalarFunction,
    pub generators: Vec<ScalarFunction>,
    /// Named constants: `a` and `mu` (example 1), or `a`, `sigma`, `eta`, `delta` (example 2).
    pub params: Vec<(String, f64)>,
}

impl ExampleModel {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn model(&self, tangent_set: TangentSet) -> LocalModel {
        LocalModel::new(self.measure.clone(), self.kappa.clone(), self.generators.clone(), tangent_set)
    }

    pub fn gram(&self) -> Result<GramSystem> {
        cone::build_gram(&self.kappa, &self.generators, &self.measure)
    }

    /// Unit norm and oddness of every generator.
    pub fn check_invariants(&self) -> Result<()> {
        for g in &self.generators {
            let nsq = hilbert::norm_sq(g, &self.measure)?;
            if (nsq - 1.0).abs() > 1e-6 {
                return Err(Error::NumericalFailure { reason: alloc::format!("‖{}‖² = {nsq}", g.label()), best: Vec::new() });
            }
            for i in 1..=100 {
                let x = i as f64 * 0.0617;
                if g.eval(-x) != -g.eval(x) {
                    return Err(Error::NumericalFailure { reason: alloc::format!("{} is not odd at {x}", g.label()), best: Vec::new() });
                }
            }
        }
        Ok(())
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!("a = {a} must be positive and finite")))
    }
}

/// `μ_a = (2Φ(a) − 1)^{−1/2}`.
pub fn mu(a: f64) -> f64 {
    1.0 / sqrt(2.0 * normal::cdf(a) - 1.0)
}

/// `(σ_a, η_a, δ_a)`.
pub fn example_2_constants(a: f64) -> (f64, f64, f64) {
    let (phi0, phia, cdf) = (normal::pdf(0.0), normal::pdf(a), normal::cdf(a));
    let sigma = a * (1.0 - cdf) / (phi0 - phia);
    let eta = 1.0 / sqrt(2.0 * (sigma * sigma * (cdf - 0.5) + (1.0 - cdf)));
    (sigma, eta, sigma * eta)
}

pub fn build_example_1(a: f64) -> Result<ExampleModel> {
    check_a(a)?;
    let m = mu(a);
    Ok(ExampleModel {
        measure: BaseMeasure::standard_normal(),
        kappa: ScalarFunction::identity(),
        generators: alloc::vec![ScalarFunction::sign().with_label("g1"), ScalarFunction::odd_step("g2", a, m, 0.0)],
        params: alloc::vec![("a".to_string(), a), ("mu".to_string(), m)],
    })
}

pub fn build_example_2(a: f64) -> Result<ExampleModel> {
    check_a(a)?;
    let (sigma, eta, delta) = example_2_constants(a);
    Ok(ExampleModel {
        measure: BaseMeasure::standard_normal(),
        kappa: ScalarFunction::identity(),
        generators: alloc::vec![ScalarFunction::sign().with_label("g1"), ScalarFunction::odd_step("g3", a, delta, -eta)],
        params: alloc::vec![
            ("a".to_string(), a),
            ("sigma".to_string(), sigma),
            ("eta".to_string(), eta),
            ("delta".to_string(), delta),
        ],
    })
}

/// Example 1 on the rank side: normal scores projected onto the span of the
/// scores of `g₁` and `g₂`, namely `q₁ ≡ 1` and `q₂ = μ_a 1(s ≤ 2Φ(a) − 1)`.
/// The coefficients equal those of the span projection of `κ = x`.
pub fn example_1_span_scores(a: f64) -> Result<ScoreFunction> {
    let sys = build_example_1(a)?.gram()?;
    let gamma = cone::project_span(&sys)?.coeffs;
    let cut = 2.0 * normal::cdf(a) - 1.0;
    ScoreFunction::step("span-projected normal scores", alloc::vec![cut], alloc::vec![gamma[0] + gamma[1] * mu(a), gamma[0]])
}

/// The printed values of example 1 at `a = 1`.
pub const PRINTED_A1: [(&str, f64); 10] = [
    ("mu", 1.210),
    ("b1", 0.798),
    ("b2", 0.380),
    ("gram_cross", 0.826),
    ("gamma_bar_1", 1.525),
    ("gamma_bar_2", -0.880),
    ("span_norm_sq", 0.882),
    ("cone_norm_sq", 0.637),
    ("ratio_span_to_cone", 1.386),
    ("ratio_cone_to_span", 0.721),
];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableRow {
    pub name: String,
    /// Printed value; only available at `a = 1`.
    pub printed: Option<f64>,
    pub computed: f64,
    pub deviation: Option<f64>,
}

/// Recomputes the ten example-1 quantities, paired with the printed values
/// when `a = 1`.
pub fn reproduce_table(a: f64) -> Result<Vec<TableRow>> {
    let ex = build_example_1(a)?;
    let sys = ex.gram()?;
    let span = cone::project_span(&sys)?;
    let cone_p = cone::project_cone(&sys)?;
    let computed = [
        ex.param("mu").unwrap_or(f64::NAN),
        sys.cross[0],
        sys.cross[1],
        sys.gram.get(0, 1),
        span.coeffs[0],
        span.coeffs[1],
        span.norm_sq,
        cone_p.norm_sq,
        span.norm_sq / cone_p.norm_sq,
        cone_p.norm_sq / span.norm_sq,
    ];
    Ok(PRINTED_A1
        .iter()
        .zip(computed)
        .map(|(&(name, printed), computed)| {
            let printed = (a == 1.0).then_some(printed);
            TableRow { name: name.to_string(), printed, computed, deviation: printed.map(|p| (computed - p).abs()) }
        })
        .collect())
}

/// `‖κ̃‖² / ‖κ̄‖²` for example 1.
pub fn norm_ratio(a: f64) -> Result<f64> {
    let sys = build_example_1(a)?.gram()?;
    let span = cone::project_span(&sys)?;
    let cone_p = cone::project_cone(&sys)?;
    Ok(cone_p.norm_sq / span.norm_sq)
}

/// Grid minimizer of [`norm_ratio`]: `(a*, ratio(a*))`, first minimizer on ties.
pub fn minimize_norm_ratio(a_grid: &[f64]) -> Result<(f64, f64)> {
    if a_grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".to_string()));
    }
    let mut best = (f64::NAN, f64::INFINITY);
    for &a in a_grid {
        let r = norm_ratio(a)?;
        if r < best.1 {
            best = (a, r);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignPatternReport {
    pub a: f64,
    pub gamma_bar: [f64; 2],
    /// `γ̄₁ > 0 > γ̄₂`.
    pub gamma_pattern: bool,
    /// `r(a) = (φ(0) − φ(a))/(2Φ(a) − 1)`.
    pub r_a: f64,
    /// `r(a) < φ(0)`.
    pub r_below_phi0: bool,
    /// `∫₀ᵃ xφ(x) dx`, by quadrature.
    pub integral: f64,
    /// `a(Φ(a) − ½)`.
    pub integral_bound: f64,
    pub integral_inequality: bool,
    pub passed: bool,
}

/// Verifies the sign pattern of the span coefficients of example 1 and the
/// inequalities behind it.
pub fn sign_pattern_check(a: f64) -> Result<SignPatternReport> {
    let sys = build_example_1(a)?.gram()?;
    let span = cone::project_span(&sys)?;
    let gamma_bar = [span.coeffs[0], span.coeffs[1]];
    let gamma_pattern = gamma_bar[0] > 0.0 && gamma_bar[1] < 0.0;
    let phi0 = normal::pdf(0.0);
    let r_a = (phi0 - normal::pdf(a)) / (2.0 * normal::cdf(a) - 1.0);
    let panels = 16;
    let edges: Vec<f64> = (0..=panels).map(|i| a * i as f64 / panels as f64).collect();
    let rule = QuadratureRule::composite(&edges, DEFAULT_ORDER, normal::pdf, DEFAULT_ABS_TOL);
    let integral = rule.integrate(|x| x);
    let integral_bound = a * (normal::cdf(a) - 0.5);
    let integral_inequality = integral < integral_bound;
    let r_below_phi0 = r_a < phi0;
    Ok(SignPatternReport {
        a,
        gamma_bar,
        gamma_pattern,
        r_a,
        r_below_phi0,
        integral,
        integral_bound,
        integral_inequality,
        passed: gamma_pattern && r_below_phi0 && integral_inequality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_scores_match_span_projection() {
        let rho = example_1_span_scores(1.0).unwrap();
        assert!((rho.eval(0.9) - 1.525).abs() < 1e-3);
        assert!((rho.eval(0.3) - (1.525 - 0.880 * 1.210)).abs() < 2e-3);
        // isometry: ‖ϱ̄‖₀ = ‖κ̄‖
        assert!((rho.norm_sq_0() - 0.882).abs() < 1e-3);
    }

    #[test]
    fn example_1_values() {
        let ex = build_example_1(1.0).unwrap();
        assert!((ex.param("mu").unwrap() - 1.210).abs() < 1e-3);
        ex.check_invariants().unwrap();
        let sys = ex.gram().unwrap();
        assert!((sys.cross[0] - 0.798).abs() < 1e-3);
        assert!((sys.cross[1] - 0.380).abs() < 1e-3);
        assert!((sys.gram.get(0, 1) - 0.826).abs() < 1e-3);
        for a in [0.3, 2.0, 4.5] {
            let ex = build_example_1(a).unwrap();
            assert!((hilbert::norm_sq(&ex.generators[1], &ex.measure).unwrap() - 1.0).abs() < 1e-6);
        }
        assert!(build_example_1(0.0).is_err());
    }

    #[test]
    fn example_2_values() {
        let (sigma, eta, delta) = example_2_constants(1.0);
        assert!((sigma - 1.0108).abs() < 1e-3 && (eta - 0.9927).abs() < 1e-3);
        assert!((delta - sigma * eta).abs() < 1e-15);
        let ex = build_example_2(1.0).unwrap();
        ex.check_invariants().unwrap();
        let sys = ex.gram().unwrap();
        // ½b₃ = δ(φ(0) − φ(a)) − ηφ(a)
        let oracle = 2.0 * (delta * (normal::pdf(0.0) - normal::pdf(1.0)) - eta * normal::pdf(1.0));
        assert!((sys.cross[1] - oracle).abs() < 5e-9);
        assert!((sys.cross[1] + 0.165).abs() < 1e-3);
        for a in [0.5, 1.0, 2.0] {
            let sys = build_example_2(a).unwrap().gram().unwrap();
            assert!(sys.cross[1] < 0.0 && sys.gram.get(0, 1) > 0.0, "a = {a}");
        }
    }

    #[test]
    fn table_at_one() {
        let rows = reproduce_table(1.0).unwrap();
        assert_eq!(rows.len(), 10);
        for r in &rows {
            assert!(r.deviation.unwrap() < 1e-3, "{r:?}");
        }
        assert!(reproduce_table(2.0).unwrap().iter().all(|r| r.printed.is_none()));
    }

    #[test]
    fn cone_projection_is_b1_g1() {
        for a in [0.25, 0.5, 1.0, 2.0, 4.0] {
            for ex in [build_example_1(a).unwrap(), build_example_2(a).unwrap()] {
                let sys = ex.gram().unwrap();
                let c = cone::project_cone(&sys).unwrap();
                assert_eq!(c.active_set, alloc::vec![0]);
                assert!((c.coeffs[0] - sys.cross[0]).abs() < 1e-9);
                let s = cone::project_span(&sys).unwrap();
                assert!(s.coeffs.iter().any(|&g| g < 0.0));
                assert!(c.norm_sq < s.norm_sq);
            }
        }
    }

    #[test]
    fn sign_patterns() {
        for a in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let r = sign_pattern_check(a).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.r_a < 0.39894);
            let exact = normal::pdf(0.0) - normal::pdf(a);
            assert!((r.integral - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_at_one_is_minimal_nearby() {
        let at_one = norm_ratio(1.0).unwrap();
        assert!((at_one - 0.721).abs() < 1e-3);
        for a in [0.5, 0.8, 1.2, 2.0, 3.0] {
            assert!(at_one <= norm_ratio(a).unwrap() + 1e-3);
        }
    }
}
