//! Declarative model files.
//!
//! A model file is TOML:
//!
//! ```toml
//! tangent_set = "cone"      # or "span"
//! anchor = 0.0              # T(P), used by the estimators
//!
//! [measure]
//! family = "laplace"        # normal {mean, sd} | laplace {location, scale} | uniform {lower, upper}
//! location = 0.0
//! scale = 1.0
//!
//! [kappa]
//! kind = "identity"         # identity | sign | table {x = [...], y = [...]}
//!
//! [[tangent]]
//! label = "g1"
//! breaks = [0.0]            # strictly increasing
//! values = [-1.0, 1.0]      # one more than breaks; values[i] on (breaks[i-1], breaks[i]]
//! ```
//!
//! Tangents are piecewise constant so that every inner product is a finite
//! sum of exact panel integrals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use onesided_core::{BaseMeasure, Error as CoreError, LocalModel, ScalarFunction, TangentSet};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read model file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed model file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid model: {0}")]
    Model(#[from] CoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureConfig {
    Normal {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        sd: f64,
    },
    Laplace {
        #[serde(default)]
        location: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KappaConfig {
    Identity,
    Sign,
    /// Linear interpolation through `(x[i], y[i])`, flat beyond the ends.
    Table { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TangentConfig {
    pub label: String,
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub measure: MeasureConfig,
    pub kappa: KappaConfig,
    #[serde(rename = "tangent")]
    pub tangents: Vec<TangentConfig>,
    #[serde(default = "default_tangent_set")]
    pub tangent_set: TangentSet,
    #[serde(default)]
    pub anchor: f64,
}

fn default_tangent_set() -> TangentSet {
    TangentSet::Cone
}

impl ModelConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn measure(&self) -> Result<BaseMeasure, CoreError> {
        match self.measure {
            MeasureConfig::Normal { mean, sd } => BaseMeasure::normal(mean, sd),
            MeasureConfig::Laplace { location, scale } => BaseMeasure::laplace(location, scale),
            MeasureConfig::Uniform { lower, upper } => BaseMeasure::uniform(lower, upper),
        }
    }

    pub fn kappa(&self) -> Result<ScalarFunction, CoreError> {
        match &self.kappa {
            KappaConfig::Identity => Ok(ScalarFunction::identity()),
            KappaConfig::Sign => Ok(ScalarFunction::sign()),
            KappaConfig::Table { x, y } => ScalarFunction::piecewise_linear("kappa", x.clone(), y.clone()),
        }
    }

    /// Builds the model and checks that every tangent has mean zero.
    pub fn build(&self) -> Result<LocalModel, ConfigError> {
        if self.tangents.is_empty() {
            return Err(CoreError::InvalidArgument("a model needs at least one [[tangent]]".to_string()).into());
        }
        let measure = self.measure()?;
        let generators = self
            .tangents
            .iter()
            .map(|t| ScalarFunction::piecewise_constant(t.label.clone(), t.breaks.clone(), t.values.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let model = LocalModel::new(measure, self.kappa()?, generators, self.tangent_set);
        model.gram()?;
        Ok(model)
    }
}
