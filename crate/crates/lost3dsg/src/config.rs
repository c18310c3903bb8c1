//! Run configuration read from TOML.
//!
//! Every key is optional; missing keys take the library defaults. Unknown
//! keys are rejected.
//!
//! ```toml
//! tau = 0.75
//! epsilon = 0.5
//! near = 0.3
//! far = 4.0
//! uncertain_recovery = false
//! components = ["label", "color", "material", "description"]
//! word_vectors = "vectors.txt"   # relative to this file
//!
//! [weights]
//! alpha = 0.15
//! beta = 0.30
//! gamma = 0.15
//! delta = 0.40
//!
//! [embedder]
//! kind = "local"                 # or "remote"
//! endpoint = "http://localhost:8080/embed"
//! timeout_secs = 10
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use lost3dsg_core::similarity::DEFAULT_TAU;
use lost3dsg_core::{
    Component, ComponentSet, ConfigError, LsfConfig, LsfWeights, TrackerConfig, TrackerError,
};
use serde::Deserialize;

use crate::remote::DEFAULT_TIMEOUT;

#[derive(Debug, thiserror::Error)]
pub enum RunConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Lsf(#[from] ConfigError),
    #[error("config: {0}")]
    Tracker(#[from] TrackerError),
    #[error("config: remote embedder needs an endpoint")]
    MissingEndpoint,
    #[error("config: embedder timeout must be positive")]
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderChoice {
    Local,
    Remote,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc {
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    delta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedderDoc {
    kind: Option<EmbedderChoice>,
    endpoint: Option<String>,
    timeout_secs: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    weights: Option<WeightsDoc>,
    components: Option<Vec<String>>,
    tau: Option<f64>,
    epsilon: Option<f64>,
    near: Option<f64>,
    far: Option<f64>,
    uncertain_recovery: Option<bool>,
    embedder: Option<EmbedderDoc>,
    word_vectors: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedderSettings {
    pub kind: EmbedderChoice,
    pub endpoint: Option<String>,
    pub timeout: Duration,
}

impl Default for EmbedderSettings {
    fn default() -> Self {
        EmbedderSettings {
            kind: EmbedderChoice::Local,
            endpoint: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

/// Validated settings for one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub embedder: EmbedderSettings,
    /// `None` selects the bundled vectors.
    pub word_vectors: Option<PathBuf>,
}

impl RunConfig {
    /// Parses TOML text. A relative `word_vectors` path is resolved against
    /// `base_dir` when given.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, RunConfigError> {
        let doc: ConfigDoc = toml::from_str(text).map_err(|e| RunConfigError::Parse(e.to_string()))?;
        let d = LsfWeights::DEFAULT;
        let w = doc.weights.unwrap_or_default();
        let weights = LsfWeights::new(
            w.alpha.unwrap_or(d.get(Component::Label)),
            w.beta.unwrap_or(d.get(Component::Color)),
            w.gamma.unwrap_or(d.get(Component::Material)),
            w.delta.unwrap_or(d.get(Component::Description)),
        )?;
        let components = match doc.components {
            None => ComponentSet::FULL,
            Some(names) => ComponentSet::new(
                names
                    .iter()
                    .map(|n| Component::parse(n).ok_or_else(|| ConfigError::UnknownComponent(n.clone())))
                    .collect::<Result<Vec<_>, _>>()?,
            )?,
        };
        let lsf = LsfConfig::new(weights, components, doc.tau.unwrap_or(DEFAULT_TAU))?;
        let defaults = TrackerConfig::default();
        let tracker = TrackerConfig {
            lsf,
            epsilon: doc.epsilon.unwrap_or(defaults.epsilon),
            near: doc.near.unwrap_or(defaults.near),
            far: doc.far.unwrap_or(defaults.far),
            uncertain_recovery: doc.uncertain_recovery.unwrap_or(defaults.uncertain_recovery),
            ..defaults
        };
        tracker.validate()?;

        let e = doc.embedder.unwrap_or_default();
        let timeout = match e.timeout_secs {
            None => DEFAULT_TIMEOUT,
            Some(s) if s > 0.0 && s.is_finite() => Duration::from_secs_f64(s),
            Some(_) => return Err(RunConfigError::Timeout),
        };
        let embedder = EmbedderSettings {
            kind: e.kind.unwrap_or(EmbedderChoice::Local),
            endpoint: e.endpoint,
            timeout,
        };
        if embedder.kind == EmbedderChoice::Remote && embedder.endpoint.is_none() {
            return Err(RunConfigError::MissingEndpoint);
        }

        let word_vectors = doc.word_vectors.map(|p| match base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p,
        });
        Ok(RunConfig {
            tracker,
            embedder,
            word_vectors,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, RunConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path.parent())
    }
}
