//! Experiment configuration: a single JSON document, validated before any computation.
//!
//! ```json
//! {
//!   "channel": { "builder": "incovariant", "p": 0.2864, "s": 0.1316 },
//!   "initial_state": {
//!     "eigenvalues": [0.8, 0.2],
//!     "eigenvectors": [[[0.5, 0.0], [0.0, -0.8660254037844386]],
//!                      [[0.8660254037844386, 0.0], [0.0, 0.5]]]
//!   },
//!   "theta": { "min": -3.141592653589793, "max": 3.141592653589793, "count": 101 },
//!   "shots": 1000000,
//!   "seed": 7,
//!   "output_dir": "out",
//!   "tolerances": { "cluster": 1e-9 }
//! }
//! ```
//!
//! Every key is optional; missing keys fall back to the reference scenario. Complex numbers are
//! `[re, im]` pairs and matrices are lists of rows. A channel is either a `builder`
//! (`incovariant`, `covariant` with `p`, `s`; `identity` with `dim`) or an explicit `kraus` list.
//! `theta` is a list of values or an inclusive sweep.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channels::{build_covariant, build_incovariant, KrausChannel};
use crate::matcore::{ComplexMatrix, C64};
use crate::presets;
use crate::state::DensityMatrix;
use crate::tolerance::Tolerances;

/// Problems with the configuration itself, as opposed to the mathematics it describes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

type Complex = [f64; 2];
type Matrix = Vec<Vec<Complex>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builder {
    Incovariant,
    Covariant,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<Builder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<Matrix>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<Complex>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_matrix: Option<Matrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    List(Vec<f64>),
    Sweep(Sweep),
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Sweep(Sweep {
            min: -PI,
            max: PI,
            count: 101,
        })
    }
}

impl ThetaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ThetaSpec::List(v) => v.clone(),
            ThetaSpec::Sweep(Sweep { min, max, count }) => match count {
                0 => Vec::new(),
                1 => vec![*min],
                n => (0..*n)
                    .map(|k| min + (max - min) * k as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub initial_state: StateSpec,
    #[serde(default)]
    pub theta: ThetaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn complex(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn matrix(rows: &Matrix, what: &str) -> Result<ComplexMatrix, ConfigError> {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(complex).collect()).collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| ConfigError::Invalid(format!("{what}: {e}")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok((Self::from_json(&text)?, bytes))
    }

    /// Schema-level checks that need no numerics.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.channel;
        match (c.builder, &c.kraus) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "channel: give either `builder` or `kraus`, not both".into(),
                ))
            }
            (None, Some(k)) if k.is_empty() => return Err(ConfigError::Invalid("channel: empty `kraus` list".into())),
            (None, Some(_)) if c.p.is_some() || c.s.is_some() || c.dim.is_some() => {
                return Err(ConfigError::Invalid(
                    "channel: `p`, `s`, `dim` only apply to builders".into(),
                ))
            }
            (Some(Builder::Identity), _) if c.p.is_some() || c.s.is_some() => {
                return Err(ConfigError::Invalid("channel: identity takes only `dim`".into()))
            }
            (Some(Builder::Incovariant | Builder::Covariant), _) if c.dim.is_some_and(|d| d != 2) => {
                return Err(ConfigError::Invalid(
                    "channel: this builder is a qubit channel (dim 2)".into(),
                ))
            }
            _ => {}
        }
        if c.dim == Some(0) {
            return Err(ConfigError::Invalid("channel: `dim` must be positive".into()));
        }
        let st = &self.initial_state;
        match (&st.eigenvalues, &st.eigenvectors, &st.density_matrix) {
            (None, None, _) => {}
            (Some(v), Some(k), None) if v.len() == k.len() && !v.is_empty() => {}
            (Some(_), Some(_), None) => {
                return Err(ConfigError::Invalid(
                    "initial_state: need as many eigenvectors as eigenvalues".into(),
                ))
            }
            (_, _, Some(_)) => {
                return Err(ConfigError::Invalid(
                    "initial_state: give either `density_matrix` or `eigenvalues` + `eigenvectors`".into(),
                ))
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "initial_state: `eigenvalues` and `eigenvectors` go together".into(),
                ))
            }
        }
        if let ThetaSpec::Sweep(s) = &self.theta {
            if s.count == 0 || s.min.partial_cmp(&s.max).is_none_or(|o| o.is_gt()) {
                return Err(ConfigError::Invalid(
                    "theta: sweep needs count ≥ 1 and min ≤ max".into(),
                ));
            }
        }
        if self.theta.values().iter().any(|t| !t.is_finite()) {
            return Err(ConfigError::Invalid("theta: values must be finite".into()));
        }
        Ok(())
    }

    /// The channel, or a [`crate::Error`] if it is not a valid CPTP map.
    pub fn channel(&self) -> Result<KrausChannel, ConfigOrMath> {
        let c = &self.channel;
        if let Some(list) = &c.kraus {
            let kraus = list
                .iter()
                .enumerate()
                .map(|(n, k)| matrix(k, &format!("kraus[{n}]")))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(KrausChannel::new("configured", kraus)?);
        }
        let p = c.p.unwrap_or(presets::P);
        let s = c.s.unwrap_or(presets::S);
        Ok(match c.builder.unwrap_or(Builder::Incovariant) {
            Builder::Incovariant => build_incovariant(p, s)?,
            Builder::Covariant => build_covariant(p, s)?,
            Builder::Identity => KrausChannel::identity(c.dim.unwrap_or(2)),
        })
    }

    pub fn initial_state(&self) -> Result<DensityMatrix, ConfigOrMath> {
        let st = &self.initial_state;
        if let Some(rows) = &st.density_matrix {
            return Ok(DensityMatrix::with_tolerances(
                matrix(rows, "density_matrix")?,
                &self.tolerances,
            )?);
        }
        match (&st.eigenvalues, &st.eigenvectors) {
            (Some(values), Some(vectors)) => {
                let kets: Vec<Vec<C64>> = vectors.iter().map(|v| v.iter().map(complex).collect()).collect();
                Ok(DensityMatrix::from_ensemble(values, &kets)?)
            }
            _ => Ok(presets::initial_state()),
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.theta.values()
    }
}

/// Failure while turning a config into mathematical objects.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigOrMath {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Math(#[from] crate::Error),
}
