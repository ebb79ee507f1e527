//! Engine configuration file.
//!
//! A single TOML document. Every table is optional and falls back to the
//! library defaults; relative paths are resolved against the directory that
//! holds the config file.
//!
//! ```toml
//! ontology = "ontology.toml"      # default: bundled vocabulary
//! cue_rules = "cue_rules.toml"    # default: bundled rules
//! history = "history.jsonl"       # default: no history
//!
//! [vectorizer]
//! min_token_len = 2
//! stopwords = true
//!
//! [willingness]
//! eta = 0.5
//! lambda = 0.7
//!
//! [utility]
//! alpha = 0.5
//! beta = 0.5
//! form = "product"                # or "split"
//!
//! [capacity]
//! default = 1
//! overrides = { v001 = 2 }
//!
//! [extractor]
//! kind = "rule"                   # or "remote", configured in [extractor.remote]
//! parallelism = 4
//!
//! [seeds]
//! synthetic = 7
//! random = 7
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::assignment::{CapacityMap, UtilityParams};
use crate::corpus::SyntheticConfig;
use crate::extraction::{CueRules, Extractor, RemoteExtractor, RemoteExtractorConfig, RuleBasedExtractor};
use crate::ontology::Ontology;
use crate::pipeline::PipelineError;
use crate::similarity::VectorizerSettings;
use crate::willingness::{load_histories, History, WillingnessParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("config references missing file {0}")]
    MissingFile(PathBuf),

    #[error("config value out of range: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    #[default]
    Rule,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSettings {
    pub kind: ExtractorKind,
    pub parallelism: usize,
    pub remote: RemoteExtractorConfig,
}

impl Default for ExtractorSettings {
    fn default() -> Self {
        Self {
            kind: ExtractorKind::Rule,
            parallelism: 4,
            remote: RemoteExtractorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub synthetic: Option<u64>,
    pub random: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub ontology: Option<PathBuf>,
    pub cue_rules: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub vectorizer: VectorizerSettings,
    pub willingness: WillingnessParams,
    pub utility: UtilityParams,
    pub capacity: CapacityMap,
    pub extractor: ExtractorSettings,
    pub seeds: Seeds,
    pub synthetic: SyntheticConfig,
}

impl EngineConfig {
    /// Parse `text`, resolving relative paths against `base_dir`, and check
    /// ranges and file references.
    pub fn from_toml_str(text: &str, base_dir: &Path, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: EngineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        for p in [&mut cfg.ontology, &mut cfg.cue_rules, &mut cfg.history].into_iter().flatten() {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
            if !p.exists() {
                return Err(ConfigError::MissingFile(p.clone()));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.willingness
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.utility
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.capacity
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.vectorizer.min_token_len == 0 {
            return Err(ConfigError::Invalid("vectorizer.min_token_len must be at least 1".into()));
        }
        if self.extractor.parallelism == 0 || self.extractor.remote.max_in_flight == 0 {
            return Err(ConfigError::Invalid("extractor parallelism must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical TOML form; the manifest hashes this.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn load_ontology(&self) -> Result<Ontology, PipelineError> {
        match &self.ontology {
            Some(p) => Ok(Ontology::load(p)?),
            None => Ok(Ontology::builtin()),
        }
    }

    pub fn load_histories(&self) -> Result<BTreeMap<String, History>, PipelineError> {
        match &self.history {
            Some(p) => Ok(load_histories(p)?),
            None => Ok(BTreeMap::new()),
        }
    }

    /// The configured extractor. Remote settings pick up environment
    /// overrides here.
    pub fn extractor<'a>(&self, ontology: &'a Ontology) -> Result<Box<dyn Extractor + 'a>, PipelineError> {
        Ok(match self.extractor.kind {
            ExtractorKind::Rule => {
                let rules = match &self.cue_rules {
                    Some(p) => CueRules::load(p)?,
                    None => CueRules::default(),
                };
                Box::new(RuleBasedExtractor::with_rules(ontology, rules))
            }
            ExtractorKind::Remote => {
                Box::new(RemoteExtractor::new(self.extractor.remote.clone().with_env_overrides()?))
            }
        })
    }

    /// Worker count for batch extraction.
    pub fn parallelism(&self) -> usize {
        match self.extractor.kind {
            ExtractorKind::Rule => self.extractor.parallelism,
            ExtractorKind::Remote => self.extractor.remote.max_in_flight,
        }
    }
}
