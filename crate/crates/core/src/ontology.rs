//! Controlled skill vocabulary and alias resolution.
//!
//! An [`Ontology`] maps every normalized alias to exactly one canonical skill.
//! Resolution is exact-match after [`normalize_alias`]; there is no fuzzy
//! matching. Entries may name a `parent`, which makes the vocabulary a forest
//! that [`Ontology::rollup`] can walk.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const BUILTIN_ONTOLOGY: &str = include_str!("../data/ontology.toml");

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("failed to read ontology file: {0}")]
    Io(#[from] std::io::Error),

    #[error("ontology parse error: {0}")]
    Parse(String),

    #[error("alias `{alias}` is claimed by both `{first}` and `{second}`")]
    AliasConflict {
        alias: String,
        first: String,
        second: String,
    },

    #[error("parent cycle through `{0}`")]
    Cycle(String),

    #[error("`{child}` names unknown parent `{parent}`")]
    UnknownParent { child: String, parent: String },

    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
}

/// One canonical skill with its lexical variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillEntry {
    pub canonical: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct OntologyFile {
    #[serde(default)]
    skill: Vec<SkillEntry>,
}

/// Result of canonicalizing a batch of raw skill strings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Canonicalized {
    pub skills: BTreeSet<String>,
    /// Raw strings that did not resolve, in input order.
    pub unresolved: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Ontology {
    entries: Vec<SkillEntry>,
    alias_index: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
    parents: Vec<Option<usize>>,
    roots: Vec<usize>,
    depth: usize,
}

/// Characters that survive edge stripping even though they are punctuation
/// (`c++`, `c#`).
const KEPT_EDGE_CHARS: [char; 2] = ['+', '#'];

/// Normalize an alias or raw skill string: trim, lowercase, collapse runs of
/// whitespace to one space, and strip surrounding punctuation.
pub fn normalize_alias(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    let is_edge = |c: char| c.is_ascii_punctuation() && !KEPT_EDGE_CHARS.contains(&c);
    collapsed
        .trim_matches(|c: char| is_edge(c) || c.is_whitespace())
        .to_string()
}

impl Ontology {
    /// Validate `entries` and build the alias index. Fails without producing
    /// a partial ontology on any invariant violation.
    pub fn from_entries(entries: Vec<SkillEntry>) -> Result<Self, OntologyError> {
        let mut by_name = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.canonical.trim().is_empty() {
                return Err(OntologyError::Parse(format!(
                    "entry {i} has an empty canonical name"
                )));
            }
            if let Some(prev) = by_name.insert(e.canonical.clone(), i) {
                return Err(OntologyError::Parse(format!(
                    "canonical `{}` defined twice (entries {prev} and {i})",
                    e.canonical
                )));
            }
        }

        let mut alias_index: HashMap<String, usize> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            for raw in std::iter::once(&e.canonical).chain(e.aliases.iter()) {
                let key = normalize_alias(raw);
                if key.is_empty() {
                    return Err(OntologyError::Parse(format!(
                        "alias `{raw}` of `{}` normalizes to nothing",
                        e.canonical
                    )));
                }
                match alias_index.get(&key) {
                    Some(&owner) if owner != i => {
                        return Err(OntologyError::AliasConflict {
                            alias: key,
                            first: entries[owner].canonical.clone(),
                            second: e.canonical.clone(),
                        });
                    }
                    _ => {
                        alias_index.insert(key, i);
                    }
                }
            }
        }

        let mut parents = Vec::with_capacity(entries.len());
        for e in &entries {
            let parent = match &e.parent {
                None => None,
                Some(p) => Some(*by_name.get(p).ok_or_else(|| OntologyError::UnknownParent {
                    child: e.canonical.clone(),
                    parent: p.clone(),
                })?),
            };
            parents.push(parent);
        }

        // Walk every chain; a chain longer than the entry count must revisit a node.
        let mut depth = 0;
        let mut roots = Vec::with_capacity(entries.len());
        for start in 0..entries.len() {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parents[cur] {
                cur = p;
                steps += 1;
                if steps > entries.len() {
                    return Err(OntologyError::Cycle(entries[start].canonical.clone()));
                }
            }
            roots.push(cur);
            depth = depth.max(steps);
        }

        Ok(Self {
            entries,
            alias_index,
            by_name,
            parents,
            roots,
            depth,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, OntologyError> {
        let file: OntologyFile =
            toml::from_str(text).map_err(|e| OntologyError::Parse(e.to_string()))?;
        Self::from_entries(file.skill)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// The starter CS/IT vocabulary bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_ONTOLOGY).expect("bundled ontology is valid")
    }

    pub fn to_toml_string(&self) -> String {
        let file = OntologyFile {
            skill: self.entries.clone(),
        };
        toml::to_string(&file).expect("ontology serializes")
    }

    pub fn entries(&self) -> &[SkillEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest parent chain in the forest.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.by_name.contains_key(canonical)
    }

    /// Map a raw string to its canonical skill, if any alias matches exactly.
    pub fn resolve(&self, raw: &str) -> Option<&str> {
        self.alias_index
            .get(&normalize_alias(raw))
            .map(|&i| self.entries[i].canonical.as_str())
    }

    /// Follow parent links up to `levels` steps, stopping early at a root.
    pub fn rollup(&self, skill: &str, levels: usize) -> Result<&str, OntologyError> {
        let mut cur = *self
            .by_name
            .get(skill)
            .ok_or_else(|| OntologyError::UnknownSkill(skill.to_string()))?;
        for _ in 0..levels {
            match self.parents[cur] {
                Some(p) => cur = p,
                None => break,
            }
        }
        Ok(&self.entries[cur].canonical)
    }

    /// The root ancestor of a canonical skill.
    pub fn root(&self, skill: &str) -> Result<&str, OntologyError> {
        let i = *self
            .by_name
            .get(skill)
            .ok_or_else(|| OntologyError::UnknownSkill(skill.to_string()))?;
        Ok(&self.entries[self.roots[i]].canonical)
    }

    /// Canonical names of every root, in file order.
    pub fn root_names(&self) -> Vec<&str> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(i, _)| self.parents[*i].is_none())
            .map(|(_, e)| e.canonical.as_str())
            .collect()
    }

    /// Resolve every raw string, dropping unresolved ones and duplicates.
    pub fn canonicalize_set<S: AsRef<str>>(&self, raws: &[S]) -> Canonicalized {
        let mut out = Canonicalized::default();
        for raw in raws {
            match self.resolve(raw.as_ref()) {
                Some(c) => {
                    out.skills.insert(c.to_string());
                }
                None => out.unresolved.push(raw.as_ref().to_string()),
            }
        }
        out
    }

    /// Every `(normalized alias, canonical)` pair, sorted by alias.
    pub fn alias_pairs(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<_> = self
            .alias_index
            .iter()
            .map(|(a, &i)| (a.as_str(), self.entries[i].canonical.as_str()))
            .collect();
        v.sort_unstable();
        v
    }

    /// Stable content fingerprint, used as the vocabulary reference in
    /// manifests and synthetic configs.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let sorted: BTreeMap<&str, &SkillEntry> = self
            .entries
            .iter()
            .map(|e| (e.canonical.as_str(), e))
            .collect();
        for (name, e) in sorted {
            h.update((name.len() as u32).to_be_bytes());
            h.update(name.as_bytes());
            for a in &e.aliases {
                h.update((a.len() as u32).to_be_bytes());
                h.update(a.as_bytes());
            }
            h.update([0xff]);
            if let Some(p) = &e.parent {
                h.update(p.as_bytes());
            }
            h.update([0x00]);
        }
        hex::encode(h.finalize())
    }
}
