//! Base measures on the real line and the quadrature rules they induce.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{exp, ln};
use crate::normal;
use crate::quadrature::{self, QuadratureRule, DEFAULT_ABS_TOL, DEFAULT_ORDER};

/// Tail mass cut from each side of an unbounded support before integrating.
pub const TAIL_CUT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "lowercase"))]
pub enum Family {
    Normal { mean: f64, sd: f64 },
    Laplace { location: f64, scale: f64 },
    Uniform { lower: f64, upper: f64 },
    Discrete { atoms: Vec<f64>, probs: Vec<f64> },
}

/// A probability on the real line with density, distribution function,
/// quantile, sampler and a composite quadrature layout.
///
/// For `Discrete`, [`BaseMeasure::density`] returns the point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMeasure {
    family: Family,
    panels: usize,
    order: usize,
    abs_tol: f64,
}

impl BaseMeasure {
    fn with_family(family: Family, panels: usize) -> Self {
        Self { family, panels, order: DEFAULT_ORDER, abs_tol: DEFAULT_ABS_TOL }
    }

    pub fn standard_normal() -> Self {
        Self::with_family(Family::Normal { mean: 0.0, sd: 1.0 }, 32)
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidArgument(format!("normal needs finite mean and sd > 0, got ({mean}, {sd})")));
        }
        Ok(Self::with_family(Family::Normal { mean, sd }, 32))
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && location.is_finite()) {
            return Err(Error::InvalidArgument(format!("laplace needs scale > 0, got {scale}")));
        }
        Ok(Self::with_family(Family::Laplace { location, scale }, 48))
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper && lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!("uniform needs lower < upper, got [{lower}, {upper}]")));
        }
        Ok(Self::with_family(Family::Uniform { lower, upper }, 16))
    }

    /// Lebesgue measure on `(0, 1)`.
    pub fn unit_interval() -> Self {
        Self::with_family(Family::Uniform { lower: 0.0, upper: 1.0 }, 16)
    }

    pub fn discrete(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(Error::InvalidProbability("atoms and probabilities must match and be nonempty".to_string()));
        }
        if !atoms.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("atoms must be strictly increasing".to_string()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbability("probabilities must be nonnegative and sum to one".to_string()));
        }
        Ok(Self::with_family(Family::Discrete { atoms, probs }, 0))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    /// Overrides the number of regular panels (the rule gains more at breakpoints).
    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels.max(1);
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order.max(1);
        self
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Normal { mean, sd } => normal::pdf((x - mean) / sd) / sd,
            Family::Laplace { location, scale } => 0.5 * exp(-(x - location).abs() / scale) / scale,
            Family::Uniform { lower, upper } => {
                if x >= *lower && x <= *upper {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
            Family::Discrete { atoms, probs } => atoms.iter().position(|&a| a == x).map_or(0.0, |i| probs[i]),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.family {
            Family::Normal { mean, sd } => normal::cdf((x - mean) / sd),
            Family::Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z < 0.0 {
                    0.5 * exp(z)
                } else {
                    1.0 - 0.5 * exp(-z)
                }
            }
            Family::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            Family::Discrete { atoms, probs } => {
                atoms.iter().zip(probs).take_while(|(a, _)| **a <= x).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
        }
    }

    /// Generalized inverse `inf{x : cdf(x) ≥ u}`.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.family {
            Family::Normal { mean, sd } => mean + sd * normal::quantile(u),
            Family::Laplace { location, scale } => {
                if u < 0.5 {
                    location + scale * ln(2.0 * u)
                } else {
                    location - scale * ln(2.0 * (1.0 - u))
                }
            }
            Family::Uniform { lower, upper } => lower + u.clamp(0.0, 1.0) * (upper - lower),
            Family::Discrete { atoms, probs } => {
                let mut acc = 0.0;
                for (a, p) in atoms.iter().zip(probs) {
                    acc += p;
                    if acc >= u {
                        return *a;
                    }
                }
                atoms[atoms.len() - 1]
            }
        }
    }

    /// One draw from the measure.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            Family::Laplace { .. } | Family::Uniform { .. } | Family::Discrete { .. } => {
                let u: f64 = rng.sample(Open01);
                self.quantile(u)
            }
        }
    }

    /// Integration range: the exact support when bounded, otherwise the
    /// support with [`TAIL_CUT`] removed from each tail.
    pub fn integration_range(&self) -> (f64, f64) {
        match &self.family {
            Family::Uniform { lower, upper } => (*lower, *upper),
            Family::Discrete { atoms, .. } => (atoms[0], atoms[atoms.len() - 1]),
            _ => (self.quantile(TAIL_CUT), self.quantile(1.0 - TAIL_CUT)),
        }
    }

    /// Points where the density itself is not smooth.
    fn own_breakpoints(&self) -> Vec<f64> {
        match &self.family {
            Family::Laplace { location, .. } => alloc::vec![*location],
            Family::Normal { mean, .. } => alloc::vec![*mean],
            _ => Vec::new(),
        }
    }

    /// Composite rule with panels additionally split at `breaks`.
    pub fn rule(&self, breaks: &[f64]) -> QuadratureRule {
        if let Family::Discrete { atoms, probs } = &self.family {
            return QuadratureRule::from_points(atoms.clone(), probs.clone(), self.abs_tol);
        }
        let (lo, hi) = self.integration_range();
        let base = match &self.family {
            Family::Uniform { .. } => quadrature::graded_edges(lo, hi, self.panels, 12),
            _ => quadrature::uniform_edges(lo, hi, self.panels),
        };
        let mut all_breaks = self.own_breakpoints();
        all_breaks.extend_from_slice(breaks);
        let edges = quadrature::merge_edges(&base, &all_breaks);
        QuadratureRule::composite(&edges, self.order, |x| self.density(x), self.abs_tol)
    }

    /// Checks `density(x) = density(−x)` on a grid over the integration range.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let (_, hi) = self.integration_range();
        let reach = hi.abs().max(1e-3);
        if let Family::Discrete { atoms, .. } = &self.family {
            for &a in atoms {
                let (l, r) = (self.density(a), self.density(-a));
                if (l - r).abs() > tol {
                    return Err(Error::SymmetryViolation { x: a, left: l, right: r });
                }
            }
            return Ok(());
        }
        for i in 1..=200 {
            let x = reach * i as f64 / 200.0;
            let (l, r) = (self.density(x), self.density(-x));
            if (l - r).abs() > tol {
                return Err(Error::SymmetryViolation { x, left: l, right: r });
            }
        }
        Ok(())
    }
}
