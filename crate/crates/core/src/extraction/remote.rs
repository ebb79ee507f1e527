//! HTTP client for a model-backed extraction service.
//!
//! Request body: `{"doc_id", "text", "schema_version", "prompt"}`. The
//! response must validate against [`EXTRACTION_SCHEMA`]; invalid responses
//! are retried up to `retries` times before giving up with the last
//! violation. Transport failures and timeouts are returned immediately.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{validate_extraction, ExtractionError, ExtractionResult, Extractor};
use crate::corpus::Document;

pub const PROMPT_TEMPLATE: &str = include_str!("../../data/prompts/extract_v1.txt");
pub const EXTRACTION_SCHEMA: &str = include_str!("../../data/extraction_schema_v1.json");

pub const ENV_API_KEY: &str = "SWATI_REMOTE_API_KEY";
pub const ENV_TIMEOUT_MS: &str = "SWATI_REMOTE_TIMEOUT_MS";
pub const ENV_RETRIES: &str = "SWATI_REMOTE_RETRIES";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteExtractorConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub schema_version: String,
    /// Upper bound on concurrent requests in batch extraction.
    pub max_in_flight: usize,
    /// Only ever read from the environment.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for RemoteExtractorConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/extract".into(),
            timeout_ms: 30_000,
            retries: 2,
            schema_version: "1".into(),
            max_in_flight: 4,
            api_key: None,
        }
    }
}

impl RemoteExtractorConfig {
    /// Apply `SWATI_REMOTE_*` overrides from the process environment.
    pub fn with_env_overrides(self) -> Result<Self, ExtractionError> {
        self.with_overrides(|k| std::env::var(k).ok())
    }

    pub fn with_overrides(
        mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ExtractionError> {
        if let Some(k) = lookup(ENV_API_KEY) {
            self.api_key = Some(k);
        }
        if let Some(t) = lookup(ENV_TIMEOUT_MS) {
            self.timeout_ms = t
                .parse()
                .map_err(|_| ExtractionError::Config(format!("{ENV_TIMEOUT_MS}={t} is not an integer")))?;
        }
        if let Some(r) = lookup(ENV_RETRIES) {
            self.retries = r
                .parse()
                .map_err(|_| ExtractionError::Config(format!("{ENV_RETRIES}={r} is not an integer")))?;
        }
        Ok(self)
    }
}

pub struct RemoteExtractor {
    config: RemoteExtractorConfig,
    agent: ureq::Agent,
}

impl RemoteExtractor {
    pub fn new(config: RemoteExtractorConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(true)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &RemoteExtractorConfig {
        &self.config
    }

    pub fn render_prompt(&self, doc: &Document) -> String {
        PROMPT_TEMPLATE
            .replace("{schema_version}", &self.config.schema_version)
            .replace("{schema}", EXTRACTION_SCHEMA.trim_end())
            .replace("{doc_id}", &doc.id)
            .replace("{text}", &doc.text)
    }

    fn request(&self, doc: &Document) -> Result<String, ExtractionError> {
        let body = json!({
            "doc_id": doc.id,
            "text": doc.text,
            "schema_version": self.config.schema_version,
            "prompt": self.render_prompt(doc),
        });
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let resp = req.send_json(&body).map_err(map_transport)?;
        resp.into_body().read_to_string().map_err(map_transport)
    }
}

fn map_transport(e: ureq::Error) -> ExtractionError {
    match e {
        ureq::Error::Timeout(_) => ExtractionError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => ExtractionError::Timeout,
        other => ExtractionError::Transport(other.to_string()),
    }
}

impl Extractor for RemoteExtractor {
    fn extract(&self, doc: &Document) -> Result<ExtractionResult, ExtractionError> {
        let mut last = None;
        for attempt in 0..=self.config.retries {
            let text = self.request(doc)?;
            let parsed = serde_json::from_str::<Value>(&text)
                .map_err(|e| ExtractionError::SchemaViolation {
                    path: "$".into(),
                    reason: format!("response is not JSON: {e}"),
                })
                .and_then(|v| validate_extraction(&v, doc));
            match parsed {
                Ok(r) => return Ok(r),
                Err(e) => {
                    log::warn!("{}: attempt {} rejected: {e}", doc.id, attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides() {
        let cfg = RemoteExtractorConfig::default()
            .with_overrides(|k| match k {
                ENV_API_KEY => Some("secret".into()),
                ENV_RETRIES => Some("5".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!(cfg.api_key.as_deref(), Some("secret"));
        assert_eq!(cfg.retries, 5);
        assert_eq!(cfg.timeout_ms, 30_000);

        let bad = RemoteExtractorConfig::default().with_overrides(|k| {
            (k == ENV_TIMEOUT_MS).then(|| "soon".to_string())
        });
        assert!(matches!(bad, Err(ExtractionError::Config(_))));
    }

    #[test]
    fn prompt_embeds_schema_and_text() {
        let ex = RemoteExtractor::new(RemoteExtractorConfig::default());
        let doc = Document::new("v7", crate::corpus::DocKind::Volunteer, "Rust and CV");
        let p = ex.render_prompt(&doc);
        assert!(p.contains("\"volunteering_history\""));
        assert!(p.contains("Rust and CV"));
        assert!(p.contains("Document id: v7"));
        assert!(!p.contains("{schema}"));
    }

    #[test]
    fn schema_file_is_json() {
        let v: Value = serde_json::from_str(EXTRACTION_SCHEMA).unwrap();
        assert_eq!(v["version"], "1");
    }
}
