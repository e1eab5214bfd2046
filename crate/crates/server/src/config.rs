//! Service configuration: a `palm.toml` file plus `PALM_*` environment
//! overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use palm_core::engagement::CohortFilter;
use palm_core::ingestion::parse_grade_scale;
use palm_core::relevance::{RenderPolicy, TokenizeMode, Tokenizer};
use palm_core::{GradeScale, MapConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("environment variable {name}={value:?} is not valid")]
    Env { name: &'static str, value: String },
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error("grade scale: {0}")]
    GradeScale(#[from] palm_core::ingestion::IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen_port: u16,
    pub store_path: PathBuf,
    /// Required in the `x-admin-token` header for ingestion; ingestion is
    /// refused for everyone when unset.
    pub admin_token: Option<String>,
    pub min_similarity: f64,
    pub top_k: Option<usize>,
    pub tokenizer: TokenizeMode,
    pub stop_words: Vec<String>,
    pub cohort_filter: CohortFilter,
    pub min_cohort_n: usize,
    pub grade_scale_path: Option<PathBuf>,
    pub cors_allowed_origins: Vec<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let map = MapConfig::default();
        Self {
            listen_port: 8080,
            store_path: PathBuf::from("store"),
            admin_token: None,
            min_similarity: map.policy.min_similarity,
            top_k: map.policy.top_k,
            tokenizer: map.tokenizer.mode,
            stop_words: Vec::new(),
            cohort_filter: map.cohort_filter,
            min_cohort_n: map.min_cohort_n,
            grade_scale_path: None,
            cors_allowed_origins: Vec::new(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), source: Box::new(e) })
    }

    /// Reads `path` if given (a missing file is an error), otherwise
    /// defaults; then applies environment overrides.
    pub fn load(path: Option<&Path>, env: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text =
                    fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?;
                Self::from_toml(&text, p)?
            }
            None => Self::default(),
        };
        config.apply_env(env)?;
        config.validate()?;
        Ok(config)
    }

    /// `PALM_STORE`, `PALM_PORT` and `PALM_ADMIN_TOKEN` win over the file.
    pub fn apply_env(&mut self, env: &BTreeMap<String, String>) -> Result<(), ConfigError> {
        if let Some(v) = env.get("PALM_STORE") {
            self.store_path = PathBuf::from(v);
        }
        if let Some(v) = env.get("PALM_PORT") {
            self.listen_port = v.parse().map_err(|_| ConfigError::Env { name: "PALM_PORT", value: v.clone() })?;
        }
        if let Some(v) = env.get("PALM_ADMIN_TOKEN") {
            self.admin_token = (!v.is_empty()).then(|| v.clone());
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.min_similarity.is_finite() || self.min_similarity < 0.0 {
            return Err(ConfigError::Invalid(format!("min_similarity must be >= 0, got {}", self.min_similarity)));
        }
        if self.top_k == Some(0) {
            return Err(ConfigError::Invalid("top_k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grade_scale(&self) -> Result<Option<GradeScale>, ConfigError> {
        let Some(path) = &self.grade_scale_path else {
            return Ok(None);
        };
        let bytes = fs::read(path).map_err(|source| ConfigError::Read { path: path.clone(), source })?;
        Ok(Some(parse_grade_scale(&bytes)?))
    }

    /// The composition settings recorded in each snapshot.
    pub fn map_config(&self, grade_scale: Option<GradeScale>) -> MapConfig {
        MapConfig {
            policy: RenderPolicy { min_similarity: self.min_similarity, top_k: self.top_k },
            tokenizer: Tokenizer::new(self.tokenizer).with_stop_words(self.stop_words.iter()),
            cohort_filter: self.cohort_filter,
            min_cohort_n: self.min_cohort_n,
            grade_scale,
        }
    }
}

/// The process environment as a map, for [`ServiceConfig::load`].
pub fn process_env() -> BTreeMap<String, String> {
    std::env::vars().filter(|(k, _)| k.starts_with("PALM_")).collect()
}
