//! `L2(P)` geometry by quadrature over the base measure.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::measure::BaseMeasure;
use crate::quadrature::QuadratureRule;

fn rule_for(funcs: &[&ScalarFunction], p: &BaseMeasure) -> QuadratureRule {
    let mut breaks: Vec<f64> = funcs.iter().flat_map(|f| f.breakpoints().iter().copied()).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    p.rule(&breaks)
}

fn checked(f: &ScalarFunction, x: f64) -> Result<f64> {
    let v = f.eval(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { label: f.label().to_string(), node: x })
    }
}

/// `⟨f|g⟩ = ∫ f·g dP`.
pub fn inner_product(f: &ScalarFunction, g: &ScalarFunction, p: &BaseMeasure) -> Result<f64> {
    let rule = rule_for(&[f, g], p);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * (checked(f, x)? * checked(g, x)?);
    }
    Ok(acc)
}

/// `‖f‖² = ⟨f|f⟩`.
pub fn norm_sq(f: &ScalarFunction, p: &BaseMeasure) -> Result<f64> {
    inner_product(f, f, p).map(|v| v.max(0.0))
}

/// `∫ f dP`.
pub fn mean(f: &ScalarFunction, p: &BaseMeasure) -> Result<f64> {
    let rule = rule_for(&[f], p);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * checked(f, x)?;
    }
    Ok(acc)
}

/// Whether `g` qualifies as a tangent, i.e. `|⟨g|1⟩| ≤ tol`.
pub fn check_tangent(g: &ScalarFunction, p: &BaseMeasure, tol: f64) -> Result<bool> {
    Ok(mean(g, p)?.abs() <= tol)
}

/// Gram matrix (row-major) of `funcs`, computed for `i ≤ j` and mirrored.
pub fn gram_matrix(funcs: &[ScalarFunction], p: &BaseMeasure) -> Result<Vec<f64>> {
    let k = funcs.len();
    let mut g = alloc::vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let v = inner_product(&funcs[i], &funcs[j], p)?;
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    Ok(g)
}
