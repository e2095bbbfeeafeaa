use std::fmt;
use std::path::Path;

use serde::Deserialize;

use hkdelta::expr::{ExprIntegrand, ParseError};
use hkdelta::integrator::{EngineConfig, Integrand};
use hkdelta::riesz::{LatticeElement, LatticeSpace};
use hkdelta::timescale::{TimeScaleSpec, TsInterval};

/// Contents of a `--config` file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub timescale: TimeScaleSpec,
    #[serde(default)]
    pub expr: Option<String>,
    /// Defaults to `[min T, max T]`.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    #[serde(default = "default_tolerance")]
    pub tolerance: Tolerance,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples_per_level: usize,
    #[serde(default = "default_levels")]
    pub max_levels: u32,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub initial_scale: Option<f64>,
}

fn default_tolerance() -> Tolerance {
    Tolerance::Scalar(1e-6)
}

fn default_samples() -> usize {
    8
}

fn default_levels() -> u32 {
    40
}

/// `"scalar"` or `{"vector": d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceSpec {
    Scalar,
    Vector(usize),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// A configuration problem, reported with exit code 1.
#[derive(Debug)]
pub enum ConfigError {
    Io(String, std::io::Error),
    Json(serde_json::Error),
    Parse { expr: String, error: ParseError },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(path, e) => write!(f, "cannot read {path}: {e}"),
            ConfigError::Json(e) => write!(f, "malformed config: {e}"),
            ConfigError::Parse { expr, error } => {
                let col = expr[..error.offset.min(expr.len())].chars().count();
                write!(f, "{error}\n  {expr}\n  {}^", " ".repeat(col))
            }
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

fn invalid(msg: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid(msg.to_string())
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(ConfigError::Json)
    }

    pub fn interval(&self) -> Result<TsInterval, ConfigError> {
        let scale = self.timescale.build().map_err(invalid)?;
        let [a, b] = self.interval.unwrap_or([scale.min(), scale.max()]);
        TsInterval::new(scale, a, b).map_err(invalid)
    }

    pub fn engine(&self, seed: Option<u64>) -> EngineConfig {
        EngineConfig {
            seed: seed.unwrap_or(self.seed),
            samples_per_level: self.samples_per_level,
            max_levels: self.max_levels,
            initial_scale: self.initial_scale,
            ..EngineConfig::default()
        }
    }

    /// Parses `expr` and checks it against `space`.
    pub fn integrand(&self) -> Result<ExprIntegrand, ConfigError> {
        let text = self.expr.as_deref().ok_or_else(|| invalid("missing field `expr`"))?;
        let f = ExprIntegrand::parse(text)
            .map_err(|error| ConfigError::Parse { expr: text.to_string(), error })?
            .smooth(self.oracle);
        let dim = f.space().dim();
        match self.space {
            Some(SpaceSpec::Scalar) if dim != 1 => {
                Err(invalid(format!("space is scalar but the expression has {dim} components")))
            }
            Some(SpaceSpec::Vector(d)) if d != dim => {
                Err(invalid(format!("space has dimension {d} but the expression has {dim} components")))
            }
            _ => Ok(f),
        }
    }

    pub fn tolerance(&self, space: LatticeSpace) -> Result<LatticeElement, ConfigError> {
        let coords = match &self.tolerance {
            Tolerance::Scalar(x) => vec![*x; space.dim()],
            Tolerance::Vector(v) if v.len() == space.dim() => v.clone(),
            Tolerance::Vector(v) => {
                return Err(invalid(format!("tolerance has {} components, expected {}", v.len(), space.dim())))
            }
        };
        if let Some(x) = coords.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(invalid(format!("tolerance {x} must be positive and finite")));
        }
        LatticeElement::new(space, &coords).map_err(invalid)
    }
}
