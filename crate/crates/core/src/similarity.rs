//! Skill-set and content similarity.
//!
//! Skill similarity is Jaccard overlap of canonical skill sets. Content
//! similarity is the cosine of L2-normalized TF-IDF vectors, with
//! `idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1`, fitted jointly over
//! volunteers and tasks.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

const STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("cannot fit a vectorizer on an empty corpus")]
    EmptyCorpus,

    #[error("vectorizer model I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("vectorizer model format: {0}")]
    Format(#[from] serde_json::Error),
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizerSettings {
    pub min_token_len: usize,
    pub stopwords: bool,
}

impl Default for VectorizerSettings {
    fn default() -> Self {
        Self {
            min_token_len: 2,
            stopwords: true,
        }
    }
}

impl VectorizerSettings {
    /// Lowercase, split on non-alphanumerics, drop short tokens and stopwords.
    pub fn tokenize<'a>(&'a self, text: &'a str) -> impl Iterator<Item = String> + 'a {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(move |t| t.chars().count() >= self.min_token_len)
            .filter(move |t| !self.stopwords || !stopwords().contains(t.as_str()))
    }
}

/// Sparse vector with strictly increasing indices. Non-empty vectors built
/// through [`SparseVector::normalized`] have unit L2 norm.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// L2-normalize `(index, weight)` pairs. Zero weights are dropped; an
    /// all-zero input gives the empty vector.
    pub fn normalized(mut entries: Vec<(u32, f64)>) -> Self {
        entries.retain(|&(_, w)| w != 0.0);
        entries.sort_unstable_by_key(|&(i, _)| i);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self::default();
        }
        for e in &mut entries {
            e.1 /= norm;
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Merge-join dot product.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizerModel {
    vocabulary: BTreeMap<String, u32>,
    idf: Vec<f64>,
    doc_count: usize,
    settings: VectorizerSettings,
}

/// Fit on every volunteer and task document.
pub fn fit_vectorizer(
    corpus: &Corpus,
    settings: &VectorizerSettings,
) -> Result<VectorizerModel, SimilarityError> {
    VectorizerModel::fit(corpus.documents().map(|d| d.text.as_str()), settings)
}

impl VectorizerModel {
    pub fn fit<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        settings: &VectorizerSettings,
    ) -> Result<Self, SimilarityError> {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0usize;
        for text in texts {
            n_docs += 1;
            let terms: BTreeSet<String> = settings.tokenize(text).collect();
            for t in terms {
                *df.entry(t).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(SimilarityError::EmptyCorpus);
        }
        let n = n_docs as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (term, d)) in df.into_iter().enumerate() {
            idf.push(((1.0 + n) / (1.0 + d as f64)).ln() + 1.0);
            vocabulary.insert(term, i as u32);
        }
        Ok(Self {
            vocabulary,
            idf,
            doc_count: n_docs,
            settings: settings.clone(),
        })
    }

    /// Assemble a model from explicit weights; `idf[i]` belongs to the term
    /// at position `i` of `terms`.
    pub fn from_parts(
        terms: &[&str],
        idf: Vec<f64>,
        doc_count: usize,
        settings: VectorizerSettings,
    ) -> Self {
        assert_eq!(terms.len(), idf.len(), "one idf weight per term");
        let vocabulary = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.to_string(), i as u32))
            .collect();
        Self {
            vocabulary,
            idf,
            doc_count,
            settings,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn settings(&self) -> &VectorizerSettings {
        &self.settings
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.vocabulary.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i as usize])
    }

    /// Raw term counts times idf, then L2-normalized. Unknown terms are dropped.
    pub fn vectorize(&self, text: &str) -> SparseVector {
        let mut tf: HashMap<u32, u32> = HashMap::new();
        for t in self.settings.tokenize(text) {
            if let Some(&i) = self.vocabulary.get(&t) {
                *tf.entry(i).or_default() += 1;
            }
        }
        SparseVector::normalized(
            tf.into_iter()
                .map(|(i, c)| (i, f64::from(c) * self.idf[i as usize]))
                .collect(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SimilarityError> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimilarityError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Jaccard overlap. Two empty sets score 0.
pub fn skill_sim<S: Ord>(a: &BTreeSet<S>, b: &BTreeSet<S>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Cosine of two unit vectors, clamped to [0, 1]. Empty input scores 0.
pub fn content_sim(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    a.dot(b).clamp(0.0, 1.0)
}
