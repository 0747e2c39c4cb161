//! The inferential scene at `P`: base measure, influence curve and the
//! generators of the tangent set.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::cone::{self, ConeProjection, GramSystem, SpanProjection};
use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::measure::BaseMeasure;

/// Whether the tangent set is the convex cone or the linear span of the
/// generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TangentSet {
    Cone,
    Span,
}

#[derive(Debug, Clone)]
pub struct LocalModel {
    pub measure: BaseMeasure,
    pub kappa: ScalarFunction,
    pub generators: Vec<ScalarFunction>,
    pub tangent_set: TangentSet,
}

/// A projected influence curve as a concrete function, with its norm.
#[derive(Debug, Clone)]
pub struct ProjectedInfluence {
    pub function: ScalarFunction,
    pub coeffs: Vec<f64>,
    pub norm: f64,
}

impl LocalModel {
    pub fn new(measure: BaseMeasure, kappa: ScalarFunction, generators: Vec<ScalarFunction>, tangent_set: TangentSet) -> Self {
        Self { measure, kappa, generators, tangent_set }
    }

    pub fn gram(&self) -> Result<GramSystem> {
        cone::build_gram(&self.kappa, &self.generators, &self.measure)
    }

    pub fn project_span(&self) -> Result<SpanProjection> {
        cone::project_span(&self.gram()?)
    }

    pub fn project_cone(&self) -> Result<ConeProjection> {
        cone::project_cone(&self.gram()?)
    }

    /// `κ̃ = Σ γ̃ᵢ gᵢ`. Fails with a degenerate-model error when `κ̃ = 0`.
    pub fn cone_influence(&self) -> Result<ProjectedInfluence> {
        let proj = self.project_cone()?;
        self.assemble(proj.coeffs, proj.norm_sq, "cone projection")
    }

    /// `κ̄ = Σ γ̄ᵢ gᵢ`. Fails with a degenerate-model error when `κ̄ = 0`.
    pub fn span_influence(&self) -> Result<ProjectedInfluence> {
        let proj = self.project_span()?;
        self.assemble(proj.coeffs, proj.norm_sq, "span projection")
    }

    /// The projection matching the model's own tangent set.
    pub fn efficient_influence(&self) -> Result<ProjectedInfluence> {
        match self.tangent_set {
            TangentSet::Cone => self.cone_influence(),
            TangentSet::Span => self.span_influence(),
        }
    }

    fn assemble(&self, coeffs: Vec<f64>, norm_sq: f64, what: &str) -> Result<ProjectedInfluence> {
        if !(norm_sq > 0.0) {
            return Err(Error::Degenerate(alloc::format!("{what} of the influence curve is zero")));
        }
        let function = ScalarFunction::linear_combination(&coeffs, &self.generators).with_label(what.to_string());
        Ok(ProjectedInfluence { function, coeffs, norm: crate::math::sqrt(norm_sq) })
    }
}
