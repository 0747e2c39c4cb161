//! Real functions on the sample line: tangents, influence curves, scores.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::sign;

type Eval = dyn Fn(f64) -> f64 + Send + Sync;

/// An evaluable function together with the metadata quadrature and sampling
/// rely on: an optional bound on `|f|`, the points where `f` jumps or kinks,
/// and an optional support interval.
///
/// Breakpoints are the caller's responsibility: an undeclared jump is not
/// detected and only costs integration accuracy.
#[derive(Clone)]
pub struct ScalarFunction {
    eval: Arc<Eval>,
    sup_bound: Option<f64>,
    breakpoints: Vec<f64>,
    support: Option<(f64, f64)>,
    label: String,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("label", &self.label)
            .field("sup_bound", &self.sup_bound)
            .field("breakpoints", &self.breakpoints)
            .field("support", &self.support)
            .finish()
    }
}

impl ScalarFunction {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            sup_bound: None,
            breakpoints: Vec::new(),
            support: None,
            label: label.into(),
        }
    }

    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        self.sup_bound = Some(bound.abs());
        self
    }

    pub fn with_breakpoints(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| b.is_finite());
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breakpoints = breaks;
        self
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = Some((lo, hi));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `sign(x)`, with `sign(0) = 0`.
    pub fn sign() -> Self {
        Self::new("sign", sign).with_sup_bound(1.0).with_breakpoints(alloc::vec![0.0])
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), move |_| c).with_sup_bound(c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0).with_label("zero")
    }

    /// Odd step function `sign(x)·inner` for `|x| ≤ a` and `sign(x)·outer`
    /// beyond.
    pub fn odd_step(label: impl Into<String>, a: f64, inner: f64, outer: f64) -> Self {
        Self::new(label, move |x| {
            let v = if x.abs() <= a { inner } else { outer };
            sign(x) * v
        })
        .with_sup_bound(inner.abs().max(outer.abs()))
        .with_breakpoints(alloc::vec![-a, 0.0, a])
    }

    /// Step function with `values[i]` on `(breaks[i-1], breaks[i]]`; needs
    /// `values.len() == breaks.len() + 1` and strictly increasing breaks.
    pub fn piecewise_constant(label: impl Into<String>, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "piecewise constant function needs {} values for {} breaks, got {}",
                breaks.len() + 1,
                breaks.len(),
                values.len()
            )));
        }
        if !breaks.windows(2).all(|w| w[0] < w[1]) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("breaks must be finite and strictly increasing".to_string()));
        }
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bp = breaks.clone();
        Ok(Self::new(label, move |x| {
            let i = bp.partition_point(|&b| b < x);
            values[i]
        })
        .with_sup_bound(sup)
        .with_breakpoints(breaks))
    }

    /// Linear interpolation through `(xs[i], ys[i])`, constant beyond the ends.
    pub fn piecewise_linear(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidArgument("piecewise linear table needs matching nonempty columns".to_string()));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("table abscissae must be strictly increasing".to_string()));
        }
        let sup = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let kinks = xs.clone();
        Ok(Self::new(label, move |x| {
            let i = xs.partition_point(|&b| b < x);
            if i == 0 {
                ys[0]
            } else if i == xs.len() {
                ys[ys.len() - 1]
            } else {
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (x - x0) / (x1 - x0);
                ys[i - 1] + w * (ys[i] - ys[i - 1])
            }
        })
        .with_sup_bound(sup)
        .with_breakpoints(kinks))
    }

    /// Function on a finite atom set; evaluates to the value of the nearest atom.
    pub fn from_table(label: impl Into<String>, atoms: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != values.len() {
            return Err(Error::InvalidArgument("table needs matching nonempty columns".to_string()));
        }
        if !atoms.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("atoms must be strictly increasing".to_string()));
        }
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self::new(label, move |x| {
            let i = atoms.partition_point(|&a| a < x);
            let j = if i == 0 {
                0
            } else if i == atoms.len() || (x - atoms[i - 1]) <= (atoms[i] - x) {
                i - 1
            } else {
                i
            };
            values[j]
        })
        .with_sup_bound(sup))
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.eval.clone();
        let mut out = Self::new(format!("{c}*{}", self.label), move |x| c * f(x));
        out.sup_bound = self.sup_bound.map(|b| b * c.abs());
        out.breakpoints = self.breakpoints.clone();
        out.support = self.support;
        out
    }

    /// `Σ cᵢ fᵢ`; the result carries the union of breakpoints and the
    /// triangle-inequality bound.
    pub fn linear_combination(coeffs: &[f64], funcs: &[ScalarFunction]) -> Self {
        assert_eq!(coeffs.len(), funcs.len(), "one coefficient per function");
        let terms: Vec<(f64, Arc<Eval>)> = coeffs
            .iter()
            .zip(funcs)
            .filter(|(c, _)| **c != 0.0)
            .map(|(&c, f)| (c, f.eval.clone()))
            .collect();
        let label = coeffs
            .iter()
            .zip(funcs)
            .map(|(c, f)| format!("{c}*{}", f.label))
            .collect::<Vec<_>>()
            .join(" + ");
        let mut out = Self::new(label, move |x| terms.iter().map(|(c, f)| c * f(x)).sum());
        out.sup_bound = coeffs
            .iter()
            .zip(funcs)
            .try_fold(0.0, |acc, (c, f)| if *c == 0.0 { Some(acc) } else { f.sup_bound.map(|b| acc + c.abs() * b) });
        let mut breaks: Vec<f64> = funcs.iter().flat_map(|f| f.breakpoints.iter().copied()).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        out.breakpoints = breaks;
        out
    }
}
