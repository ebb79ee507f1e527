//! Volunteer and task documents.
//!
//! Corpora are read from JSONL, one document per line:
//!
//! ```text
//! {"id": "v1", "kind": "volunteer", "text": "...", "meta": {"source": "kaggle"}}
//! ```
//!
//! Unknown fields are an error under [`Strictness::Strict`] and a logged
//! warning under [`Strictness::Lenient`].

mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synthetic::{generate_synthetic, SkillRange, SyntheticConfig};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate document id `{id}`")]
    DuplicateId { id: String, line: usize },

    #[error("invalid synthetic config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Volunteer,
    Task,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub kind: DocKind,
    pub text: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, kind: DocKind, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            text: text.into(),
            meta: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    Strict,
    #[default]
    Lenient,
}

/// Volunteers and tasks, each in file order. Ids are unique across both lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub volunteers: Vec<Document>,
    pub tasks: Vec<Document>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_volunteers: usize,
    pub n_tasks: usize,
    /// Mean length in characters over every document; 0 for an empty corpus.
    pub mean_text_length: f64,
}

const KNOWN_FIELDS: [&str; 4] = ["id", "kind", "text", "meta"];

impl Corpus {
    /// Build a corpus from documents, rejecting duplicate ids. The reported
    /// line is the 1-based position of the offending document.
    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self, CorpusError> {
        let mut seen = HashMap::new();
        let mut corpus = Corpus::default();
        for (i, doc) in docs.into_iter().enumerate() {
            if seen.insert(doc.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: doc.id,
                    line: i + 1,
                });
            }
            match doc.kind {
                DocKind::Volunteer => corpus.volunteers.push(doc),
                DocKind::Task => corpus.tasks.push(doc),
            }
        }
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.volunteers.len() + self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volunteers followed by tasks.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.volunteers.iter().chain(self.tasks.iter())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for doc in self.documents() {
            serde_json::to_writer(&mut w, doc)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)?;
        w.flush()
    }
}

fn parse_record(line: &str, lineno: usize, strict: Strictness) -> Result<Document, CorpusError> {
    let perr = |message: String| CorpusError::Parse {
        line: lineno,
        message,
    };
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| perr(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| perr("record is not a JSON object".into()))?;
    for key in obj.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            match strict {
                Strictness::Strict => return Err(perr(format!("unknown field `{key}`"))),
                Strictness::Lenient => log::warn!("line {lineno}: ignoring unknown field `{key}`"),
            }
        }
    }
    let doc = Document {
        id: field(obj, "id", lineno)?,
        kind: field(obj, "kind", lineno)?,
        text: field(obj, "text", lineno)?,
        meta: match obj.get("meta") {
            None => BTreeMap::new(),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| perr(format!("field `meta`: {e}")))?,
        },
    };
    if doc.id.is_empty() {
        return Err(perr("empty `id`".into()));
    }
    if doc.text.is_empty() {
        return Err(perr(format!("document `{}` has empty `text`", doc.id)));
    }
    Ok(doc)
}

fn field<T: serde::de::DeserializeOwned>(
    obj: &serde_json::Map<String, serde_json::Value>,
    name: &str,
    line: usize,
) -> Result<T, CorpusError> {
    let v = obj.get(name).ok_or_else(|| CorpusError::Parse {
        line,
        message: format!("missing field `{name}`"),
    })?;
    serde_json::from_value(v.clone()).map_err(|e| CorpusError::Parse {
        line,
        message: format!("field `{name}`: {e}"),
    })
}

/// Parse JSONL from any reader. Blank lines are skipped but still counted.
pub fn read_corpus<R: BufRead>(reader: R, strict: Strictness) -> Result<Corpus, CorpusError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut corpus = Corpus::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_record(&line, lineno, strict)?;
        if seen.insert(doc.id.clone(), lineno).is_some() {
            return Err(CorpusError::DuplicateId {
                id: doc.id,
                line: lineno,
            });
        }
        match doc.kind {
            DocKind::Volunteer => corpus.volunteers.push(doc),
            DocKind::Task => corpus.tasks.push(doc),
        }
    }
    Ok(corpus)
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    strict: Strictness,
) -> Result<Corpus, CorpusError> {
    match format {
        CorpusFormat::Jsonl => {
            let f = std::fs::File::open(path)?;
            read_corpus(BufReader::new(f), strict)
        }
    }
}

pub fn corpus_stats(c: &Corpus) -> CorpusStats {
    let n = c.len();
    let total: usize = c.documents().map(|d| d.text.chars().count()).sum();
    CorpusStats {
        n_volunteers: c.volunteers.len(),
        n_tasks: c.tasks.len(),
        mean_text_length: if n == 0 { 0.0 } else { total as f64 / n as f64 },
    }
}
