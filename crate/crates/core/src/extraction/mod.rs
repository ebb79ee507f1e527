//! Structured extraction from documents and the hybrid profile representation.
//!
//! An [`Extractor`] turns a [`Document`] into an [`ExtractionResult`]: skill
//! mentions with evidence spans and proficiency, plus five preference cues.
//! Two implementations ship: [`RuleBasedExtractor`] (deterministic, ontology
//! driven) and [`RemoteExtractor`] (HTTP client for a model-backed service).
//! Everything downstream only sees `ExtractionResult`.
//!
//! Evidence spans are `[start, end)` offsets in characters.

mod remote;
mod rules;
pub(crate) mod tokens;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::Document;
use crate::ontology::Ontology;
use crate::similarity::{SparseVector, VectorizerModel};

pub use remote::{RemoteExtractor, RemoteExtractorConfig, EXTRACTION_SCHEMA, PROMPT_TEMPLATE};
pub use rules::{CueLexicons, CueRules, RuleBasedExtractor};

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("transport error: {0}")]
    Transport(String),

    #[error("request timed out")]
    Timeout,

    #[error("schema violation at `{path}`: {reason}")]
    SchemaViolation { path: String, reason: String },

    #[error("extractor config: {0}")]
    Config(String),

    #[error("extraction result for `{found}` does not belong to document `{expected}`")]
    DocIdMismatch { expected: String, found: String },
}

impl ExtractionError {
    fn schema(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::SchemaViolation {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillMention {
    pub raw: String,
    pub evidence: (usize, usize),
    /// Stored for diagnostics; no scoring function reads it.
    pub proficiency: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceCues {
    pub domain_affinity: f64,
    pub prior_exposure: f64,
    pub stated_interest: f64,
    pub volunteering_history: f64,
    pub availability: f64,
}

impl PreferenceCues {
    pub const FIELDS: [&'static str; 5] = [
        "domain_affinity",
        "prior_exposure",
        "stated_interest",
        "volunteering_history",
        "availability",
    ];

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.domain_affinity,
            self.prior_exposure,
            self.stated_interest,
            self.volunteering_history,
            self.availability,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            domain_affinity: a[0],
            prior_exposure: a[1],
            stated_interest: a[2],
            volunteering_history: a[3],
            availability: a[4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub doc_id: String,
    pub mentions: Vec<SkillMention>,
    pub cues: PreferenceCues,
}

impl ExtractionResult {
    pub fn raws(&self) -> Vec<&str> {
        self.mentions.iter().map(|m| m.raw.as_str()).collect()
    }
}

/// Anything that can map a document to an extraction result. Implementations
/// must be callable concurrently on different documents.
pub trait Extractor: Sync {
    fn extract(&self, doc: &Document) -> Result<ExtractionResult, ExtractionError>;
}

/// Extract every document with at most `parallelism` in flight, keeping
/// input order. Fails on the first error.
pub fn extract_batch<E: Extractor + ?Sized>(
    extractor: &E,
    docs: &[Document],
    parallelism: usize,
) -> Result<Vec<ExtractionResult>, ExtractionError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| ExtractionError::Config(e.to_string()))?;
    pool.install(|| docs.par_iter().map(|d| extractor.extract(d)).collect())
}

fn unit_number(v: Option<&Value>, path: &str) -> Result<f64, ExtractionError> {
    let x = v
        .and_then(Value::as_f64)
        .ok_or_else(|| ExtractionError::schema(path, "expected a number"))?;
    if !(0.0..=1.0).contains(&x) {
        return Err(ExtractionError::schema(path, format!("{x} outside [0, 1]")));
    }
    Ok(x)
}

/// Check a structured extractor response against `doc` and convert it.
///
/// Mentions may be listed under `skills` or `mentions`; violations are
/// reported with `mentions[i].field` paths. Each evidence span must lie
/// inside the text and contain the raw skill (case-insensitive).
pub fn validate_extraction(raw: &Value, doc: &Document) -> Result<ExtractionResult, ExtractionError> {
    let obj = raw
        .as_object()
        .ok_or_else(|| ExtractionError::schema("$", "expected an object"))?;
    if let Some(id) = obj.get("doc_id") {
        if id.as_str() != Some(doc.id.as_str()) {
            return Err(ExtractionError::schema("doc_id", "does not match the document"));
        }
    }
    let list = obj
        .get("skills")
        .or_else(|| obj.get("mentions"))
        .and_then(Value::as_array)
        .ok_or_else(|| ExtractionError::schema("mentions", "expected an array"))?;

    let chars: Vec<char> = doc.text.chars().collect();
    let mut mentions = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let at = |f: &str| format!("mentions[{i}].{f}");
        let m = item
            .as_object()
            .ok_or_else(|| ExtractionError::schema(format!("mentions[{i}]"), "expected an object"))?;
        let raw_skill = m
            .get("raw")
            .and_then(Value::as_str)
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| ExtractionError::schema(at("raw"), "expected a non-empty string"))?;
        let span = m
            .get("evidence")
            .and_then(Value::as_array)
            .filter(|a| a.len() == 2)
            .and_then(|a| Some((a[0].as_u64()? as usize, a[1].as_u64()? as usize)))
            .ok_or_else(|| ExtractionError::schema(at("evidence"), "expected [start, end]"))?;
        if span.0 >= span.1 || span.1 > chars.len() {
            return Err(ExtractionError::schema(
                at("evidence"),
                format!("span {span:?} invalid for text of {} chars", chars.len()),
            ));
        }
        let cited: String = chars[span.0..span.1].iter().collect();
        if !cited.to_lowercase().contains(&raw_skill.to_lowercase()) {
            return Err(ExtractionError::schema(
                at("evidence"),
                format!("span text `{cited}` does not contain `{raw_skill}`"),
            ));
        }
        let proficiency = unit_number(m.get("proficiency"), &at("proficiency"))?;
        mentions.push(SkillMention {
            raw: raw_skill.to_string(),
            evidence: span,
            proficiency,
        });
    }

    let cues_obj = obj
        .get("cues")
        .and_then(Value::as_object)
        .ok_or_else(|| ExtractionError::schema("cues", "expected an object"))?;
    let mut cues = [0.0; 5];
    for (slot, name) in cues.iter_mut().zip(PreferenceCues::FIELDS) {
        *slot = unit_number(cues_obj.get(name), &format!("cues.{name}"))?;
    }

    Ok(ExtractionResult {
        doc_id: doc.id.clone(),
        mentions,
        cues: PreferenceCues::from_array(cues),
    })
}

/// Hybrid representation of a volunteer: canonical skills plus content vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub id: String,
    pub skills: BTreeSet<String>,
    pub content_vector: SparseVector,
    pub cues: PreferenceCues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub required_skills: BTreeSet<String>,
    pub content_vector: SparseVector,
    /// Volunteers a task needs; always 1.
    pub capacity_demand: u32,
}

fn check_doc(doc: &Document, ex: &ExtractionResult) -> Result<(), ExtractionError> {
    if doc.id != ex.doc_id {
        return Err(ExtractionError::DocIdMismatch {
            expected: doc.id.clone(),
            found: ex.doc_id.clone(),
        });
    }
    Ok(())
}

pub fn build_profile(
    doc: &Document,
    ex: &ExtractionResult,
    ontology: &Ontology,
    vectorizer: &VectorizerModel,
) -> Result<Profile, ExtractionError> {
    check_doc(doc, ex)?;
    Ok(Profile {
        id: doc.id.clone(),
        skills: ontology.canonicalize_set(&ex.raws()).skills,
        content_vector: vectorizer.vectorize(&doc.text),
        cues: ex.cues,
        history_ref: None,
    })
}

pub fn build_taskspec(
    doc: &Document,
    ex: &ExtractionResult,
    ontology: &Ontology,
    vectorizer: &VectorizerModel,
) -> Result<TaskSpec, ExtractionError> {
    check_doc(doc, ex)?;
    Ok(TaskSpec {
        id: doc.id.clone(),
        required_skills: ontology.canonicalize_set(&ex.raws()).skills,
        content_vector: vectorizer.vectorize(&doc.text),
        capacity_demand: 1,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStats {
    /// Sum of per-document canonical skill-set sizes.
    pub total_skills: usize,
    /// Size of the union of canonical skill sets.
    pub unique_vocabulary: usize,
    /// `total_skills / documents`, rounded to the nearest integer.
    pub avg_per_doc: u64,
    /// Mentions that no alias resolved; dropped from skill sets.
    pub unresolved_mentions: usize,
}

pub fn extraction_stats(results: &[ExtractionResult], ontology: &Ontology) -> ExtractionStats {
    let mut stats = ExtractionStats::default();
    let mut vocab = BTreeSet::new();
    for r in results {
        let c = ontology.canonicalize_set(&r.raws());
        stats.total_skills += c.skills.len();
        stats.unresolved_mentions += c.unresolved.len();
        vocab.extend(c.skills);
    }
    stats.unique_vocabulary = vocab.len();
    if !results.is_empty() {
        stats.avg_per_doc = (stats.total_skills as f64 / results.len() as f64).round() as u64;
    }
    stats
}

/// Per-document summary written alongside extraction artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    #[serde(flatten)]
    pub result: ExtractionResult,
    pub canonical_skills: BTreeSet<String>,
    pub unresolved: Vec<String>,
    /// Highest proficiency seen per canonical skill.
    pub proficiency: BTreeMap<String, f64>,
}

impl ExtractionRecord {
    pub fn new(result: ExtractionResult, ontology: &Ontology) -> Self {
        let c = ontology.canonicalize_set(&result.raws());
        let mut proficiency: BTreeMap<String, f64> = BTreeMap::new();
        for m in &result.mentions {
            if let Some(s) = ontology.resolve(&m.raw) {
                let e = proficiency.entry(s.to_string()).or_insert(0.0);
                *e = e.max(m.proficiency);
            }
        }
        Self {
            result,
            canonical_skills: c.skills,
            unresolved: c.unresolved,
            proficiency,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, DocKind};
    use crate::ontology::SkillEntry;
    use crate::similarity::{fit_vectorizer, VectorizerSettings};
    use serde_json::json;

    fn doc(text: &str) -> Document {
        Document::new("d1", DocKind::Volunteer, text)
    }

    fn cues_json() -> Value {
        json!({"domain_affinity": 0.5, "prior_exposure": 0.0, "stated_interest": 0.25,
               "volunteering_history": 1.0, "availability": 0.75})
    }

    #[test]
    fn parses_well_formed_response() {
        let d = doc("I know a lot of CV and more");
        let v = json!({"skills": [{"raw": "CV", "evidence": [16, 18], "proficiency": 0.7}],
                       "cues": cues_json()});
        let r = validate_extraction(&v, &d).unwrap();
        assert_eq!(r.mentions.len(), 1);
        assert_eq!(r.mentions[0].evidence, (16, 18));
        assert_eq!(r.cues.availability, 0.75);
    }

    fn violation_path(v: &Value, d: &Document) -> String {
        match validate_extraction(v, d) {
            Err(ExtractionError::SchemaViolation { path, .. }) => path,
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_proficiency() {
        let d = doc("I know a lot of CV and more");
        let v = json!({"skills": [{"raw": "CV", "evidence": [16, 18], "proficiency": 1.4}],
                       "cues": cues_json()});
        assert_eq!(violation_path(&v, &d), "mentions[0].proficiency");
    }

    #[test]
    fn rejects_bad_citation() {
        let d = doc("I know a lot of CV and more");
        let v = json!({"mentions": [{"raw": "CV", "evidence": [0, 6], "proficiency": 0.5}],
                       "cues": cues_json()});
        assert_eq!(violation_path(&v, &d), "mentions[0].evidence");
        let v = json!({"mentions": [{"raw": "CV", "evidence": [16, 99], "proficiency": 0.5}],
                       "cues": cues_json()});
        assert_eq!(violation_path(&v, &d), "mentions[0].evidence");
        let v = json!({"mentions": [{"raw": "CV", "evidence": [18, 16], "proficiency": 0.5}],
                       "cues": cues_json()});
        assert_eq!(violation_path(&v, &d), "mentions[0].evidence");
    }

    #[test]
    fn rejects_bad_cues_and_shape() {
        let d = doc("text");
        let mut c = cues_json();
        c["availability"] = json!(-0.1);
        assert_eq!(violation_path(&json!({"skills": [], "cues": c}), &d), "cues.availability");
        assert_eq!(violation_path(&json!({"skills": []}), &d), "cues");
        assert_eq!(violation_path(&json!({"cues": cues_json()}), &d), "mentions");
        assert_eq!(violation_path(&json!([1, 2]), &d), "$");
        assert_eq!(
            violation_path(&json!({"doc_id": "other", "skills": [], "cues": cues_json()}), &d),
            "doc_id"
        );
    }

    #[test]
    fn valid_result_round_trips_unchanged() {
        let d = doc("Expert in CV");
        let r = ExtractionResult {
            doc_id: "d1".into(),
            mentions: vec![SkillMention {
                raw: "CV".into(),
                evidence: (10, 12),
                proficiency: 0.8,
            }],
            cues: PreferenceCues::from_array([0.1, 0.2, 0.3, 0.4, 0.5]),
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(validate_extraction(&v, &d).unwrap(), r);
    }

    fn fixture() -> (Ontology, Corpus) {
        let e = |c: &str, a: &[&str]| SkillEntry {
            canonical: c.into(),
            aliases: a.iter().map(|s| s.to_string()).collect(),
            parent: None,
        };
        let o = Ontology::from_entries(vec![e("Computer Vision", &["cv"]), e("Python", &[])]).unwrap();
        let c = Corpus::from_documents([
            Document::new("v1", DocKind::Volunteer, "CV and cv work with python"),
            Document::new("t1", DocKind::Task, "needs python scripts"),
        ])
        .unwrap();
        (o, c)
    }

    #[test]
    fn profile_from_extraction() {
        let (o, c) = fixture();
        let vec = fit_vectorizer(&c, &VectorizerSettings::default()).unwrap();
        let ex = RuleBasedExtractor::new(&o);
        let r = ex.extract(&c.volunteers[0]).unwrap();
        let p = build_profile(&c.volunteers[0], &r, &o, &vec).unwrap();
        assert_eq!(p.skills, BTreeSet::from(["Computer Vision".to_string(), "Python".to_string()]));
        assert!((p.content_vector.norm() - 1.0).abs() < 1e-9);

        let r = ex.extract(&c.tasks[0]).unwrap();
        let t = build_taskspec(&c.tasks[0], &r, &o, &vec).unwrap();
        assert_eq!(t.required_skills.len(), 1);
        assert_eq!(t.capacity_demand, 1);

        let err = build_taskspec(&c.volunteers[0], &r, &o, &vec).unwrap_err();
        assert!(matches!(err, ExtractionError::DocIdMismatch { .. }));
    }

    #[test]
    fn profile_without_known_terms_is_empty() {
        let (o, c) = fixture();
        let vec = fit_vectorizer(&c, &VectorizerSettings::default()).unwrap();
        let d = Document::new("v9", DocKind::Volunteer, "zzz qqq");
        let r = RuleBasedExtractor::new(&o).extract(&d).unwrap();
        let p = build_profile(&d, &r, &o, &vec).unwrap();
        assert!(p.skills.is_empty());
        assert!(p.content_vector.is_empty());
    }

    #[test]
    fn stats_arithmetic() {
        let (o, _) = fixture();
        let mk = |id: &str, raws: &[&str]| ExtractionResult {
            doc_id: id.into(),
            mentions: raws
                .iter()
                .map(|r| SkillMention {
                    raw: r.to_string(),
                    evidence: (0, 1),
                    proficiency: 0.5,
                })
                .collect(),
            cues: PreferenceCues::default(),
        };
        assert_eq!(extraction_stats(&[], &o), ExtractionStats::default());
        let s = extraction_stats(&[mk("a", &["cv", "python"]), mk("b", &["python", "knitting"])], &o);
        assert_eq!((s.total_skills, s.unique_vocabulary, s.avg_per_doc), (3, 2, 2));
        assert_eq!(s.unresolved_mentions, 1);
    }

    #[test]
    fn batch_preserves_order() {
        let (o, c) = fixture();
        let ex = RuleBasedExtractor::new(&o);
        let docs: Vec<_> = c.documents().cloned().collect();
        let out = extract_batch(&ex, &docs, 2).unwrap();
        let ids: Vec<_> = out.iter().map(|r| r.doc_id.as_str()).collect();
        assert_eq!(ids, ["v1", "t1"]);
    }
}
