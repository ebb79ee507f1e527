//! Deterministic ontology-driven extractor.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::tokens::{tokenize, PhraseMatcher, Token};
use super::{ExtractionError, ExtractionResult, Extractor, PreferenceCues, SkillMention};
use crate::corpus::Document;
use crate::ontology::Ontology;

const DEFAULT_RULES: &str = include_str!("../../data/cue_rules.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueLexicons {
    pub prior_exposure: Vec<String>,
    pub stated_interest: Vec<String>,
    pub volunteering_history: Vec<String>,
    pub availability: Vec<String>,
}

impl CueLexicons {
    /// Lexicons in cue-vector order (after domain affinity).
    pub fn in_order(&self) -> [&[String]; 4] {
        [
            &self.prior_exposure,
            &self.stated_interest,
            &self.volunteering_history,
            &self.availability,
        ]
    }
}

/// Heuristic constants for the rule-based extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueRules {
    pub proximity_window: usize,
    pub base_proficiency: f64,
    pub expertise_bonus: f64,
    pub years_bonus: f64,
    pub years_min: u32,
    pub cue_step: f64,
    pub expertise_keywords: Vec<String>,
    pub lexicons: CueLexicons,
}

impl Default for CueRules {
    fn default() -> Self {
        toml::from_str(DEFAULT_RULES).expect("bundled cue rules are valid")
    }
}

impl CueRules {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExtractionError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExtractionError::Config(e.to_string()))?;
        toml::from_str(&text).map_err(|e| ExtractionError::Config(e.to_string()))
    }
}

/// Scans documents for every ontology alias as a whole-token sequence.
pub struct RuleBasedExtractor<'a> {
    ontology: &'a Ontology,
    rules: CueRules,
    aliases: PhraseMatcher,
    keywords: PhraseMatcher,
    cues: [PhraseMatcher; 4],
    years: Regex,
}

impl<'a> RuleBasedExtractor<'a> {
    pub fn new(ontology: &'a Ontology) -> Self {
        Self::with_rules(ontology, CueRules::default())
    }

    pub fn with_rules(ontology: &'a Ontology, rules: CueRules) -> Self {
        let aliases = PhraseMatcher::new(ontology.alias_pairs().into_iter().map(|(a, _)| (a, 0)));
        let keywords = PhraseMatcher::new(rules.expertise_keywords.iter().map(|k| (k.as_str(), 0)));
        let cues = rules
            .lexicons
            .in_order()
            .map(|lex| PhraseMatcher::new(lex.iter().map(|p| (p.as_str(), 0))));
        Self {
            ontology,
            rules,
            aliases,
            keywords,
            cues,
            years: Regex::new(r"(?i)\b(\d+)\s*\+\s*(?:years?|yrs)\b").expect("static regex"),
        }
    }

    pub fn rules(&self) -> &CueRules {
        &self.rules
    }

    fn within_window(&self, span: (usize, usize), other: (usize, usize)) -> bool {
        let gap = if other.1 <= span.0 {
            span.0 - other.1
        } else {
            other.0.saturating_sub(span.1)
        };
        gap <= self.rules.proximity_window
    }

    /// Extract mentions and cues from `doc`.
    pub fn extract_document(&self, doc: &Document) -> ExtractionResult {
        let text = &doc.text;
        let chars: Vec<char> = text.chars().collect();
        let tokens = tokenize(text);

        let keyword_spans: Vec<(usize, usize)> = self
            .keywords
            .find_all(&tokens)
            .iter()
            .map(|m| span_of(&tokens, m.first, m.last))
            .collect();
        let year_spans = self.year_spans(text);

        let mentions: Vec<SkillMention> = self
            .aliases
            .find_all(&tokens)
            .iter()
            .map(|m| {
                let span = span_of(&tokens, m.first, m.last);
                let mut rho = self.rules.base_proficiency;
                if keyword_spans.iter().any(|k| self.within_window(span, *k)) {
                    rho += self.rules.expertise_bonus;
                }
                if year_spans.iter().any(|y| self.within_window(span, *y)) {
                    rho += self.rules.years_bonus;
                }
                SkillMention {
                    raw: chars[span.0..span.1].iter().collect(),
                    evidence: span,
                    proficiency: rho.min(1.0),
                }
            })
            .collect();

        let step = |n: usize| (self.rules.cue_step * n as f64).min(1.0);
        let counts = self.cues.each_ref().map(|m| m.find_all(&tokens).len());
        ExtractionResult {
            doc_id: doc.id.clone(),
            cues: PreferenceCues {
                domain_affinity: self.domain_affinity(&mentions),
                prior_exposure: step(counts[0]),
                stated_interest: step(counts[1]),
                volunteering_history: step(counts[2]),
                availability: step(counts[3]),
            },
            mentions,
        }
    }

    /// "N+ years" spans with N at or above the configured minimum.
    fn year_spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for caps in self.years.captures_iter(text) {
            let n: u64 = caps[1].parse().unwrap_or(0);
            if n < u64::from(self.rules.years_min) {
                continue;
            }
            let whole = caps.get(0).expect("group 0");
            let start = text[..whole.start()].chars().count();
            let len = whole.as_str().chars().count();
            out.push((start, start + len));
        }
        out
    }

    /// Fraction of distinct matched skills whose root is the most common root.
    /// Ties go to the lexicographically smallest root.
    fn domain_affinity(&self, mentions: &[SkillMention]) -> f64 {
        let skills: BTreeSet<&str> = mentions
            .iter()
            .filter_map(|m| self.ontology.resolve(&m.raw))
            .collect();
        if skills.is_empty() {
            return 0.0;
        }
        let mut per_root: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &skills {
            if let Ok(r) = self.ontology.root(s) {
                *per_root.entry(r).or_default() += 1;
            }
        }
        let best = per_root
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(_, &n)| n)
            .unwrap_or(0);
        best as f64 / skills.len() as f64
    }
}

fn span_of(tokens: &[Token], first: usize, last: usize) -> (usize, usize) {
    (tokens[first].start, tokens[last - 1].end)
}

impl Extractor for RuleBasedExtractor<'_> {
    fn extract(&self, doc: &Document) -> Result<ExtractionResult, ExtractionError> {
        Ok(self.extract_document(doc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocKind;
    use crate::ontology::SkillEntry;

    fn onto() -> Ontology {
        let e = |c: &str, a: &[&str], p: Option<&str>| SkillEntry {
            canonical: c.into(),
            aliases: a.iter().map(|s| s.to_string()).collect(),
            parent: p.map(Into::into),
        };
        Ontology::from_entries(vec![
            e("Computer Vision", &["cv"], None),
            e("YOLO", &["yolov8"], Some("Computer Vision")),
            e("Python", &[], Some("Programming")),
            e("Programming", &[], None),
        ])
        .unwrap()
    }

    fn doc(text: &str) -> Document {
        Document::new("d", DocKind::Volunteer, text)
    }

    #[test]
    fn expert_keyword_raises_proficiency() {
        let o = onto();
        let ex = RuleBasedExtractor::new(&o);
        let r = ex.extract_document(&doc("Expert in computer vision using YOLOv8"));
        assert_eq!(r.mentions.len(), 2);
        let cv = &r.mentions[0];
        assert_eq!(cv.raw, "computer vision");
        assert_eq!(cv.evidence, (10, 25));
        assert!((cv.proficiency - 0.8).abs() < 1e-12);
        assert_eq!(r.mentions[1].raw, "YOLOv8");
        // both skills share the Computer Vision root
        assert_eq!(r.cues.domain_affinity, 1.0);
    }

    #[test]
    fn years_pattern_needs_three_or_more() {
        let o = onto();
        let ex = RuleBasedExtractor::new(&o);
        let r = ex.extract_document(&doc("Python with 5+ years, advanced"));
        assert!((r.mentions[0].proficiency - 1.0).abs() < 1e-12);
        let r = ex.extract_document(&doc("Python with 2+ years"));
        assert!((r.mentions[0].proficiency - 0.5).abs() < 1e-12);
        let r = ex.extract_document(&doc("Python with 4+ years"));
        assert!((r.mentions[0].proficiency - 0.7).abs() < 1e-12);
    }

    #[test]
    fn keyword_outside_window_is_ignored() {
        let o = onto();
        let ex = RuleBasedExtractor::new(&o);
        let far = format!("expert{}python", " ".repeat(41));
        let r = ex.extract_document(&doc(&far));
        assert!((r.mentions[0].proficiency - 0.5).abs() < 1e-12);
        let near = format!("expert{}python", " ".repeat(40));
        let r = ex.extract_document(&doc(&near));
        assert!((r.mentions[0].proficiency - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_text_yields_nothing() {
        let o = onto();
        let r = RuleBasedExtractor::new(&o).extract_document(&doc(""));
        assert!(r.mentions.is_empty());
        assert_eq!(r.cues, PreferenceCues::default());
    }

    #[test]
    fn repeated_skill_gives_repeated_mentions() {
        let o = onto();
        let r = RuleBasedExtractor::new(&o)
            .extract_document(&doc("Computer Vision and more Computer Vision"));
        assert_eq!(r.mentions.len(), 2);
        let set = o.canonicalize_set(&r.mentions.iter().map(|m| m.raw.as_str()).collect::<Vec<_>>());
        assert_eq!(set.skills.len(), 1);
    }

    #[test]
    fn cue_counts_step_and_cap() {
        let o = onto();
        let r = RuleBasedExtractor::new(&o).extract_document(&doc(
            "I volunteered at a shelter. Volunteer tutor. Available on weekends. \
             Interested in charity work, community service, nonprofit boards.",
        ));
        // volunteered, volunteer, charity, community service, nonprofit
        assert_eq!(r.cues.volunteering_history, 1.0);
        // available, weekends
        assert_eq!(r.cues.availability, 0.5);
        assert_eq!(r.cues.stated_interest, 0.25);
        assert_eq!(r.cues.prior_exposure, 0.0);
        assert_eq!(r.cues.domain_affinity, 0.0);
    }

    #[test]
    fn affinity_is_dominant_root_fraction() {
        let o = onto();
        let r = RuleBasedExtractor::new(&o).extract_document(&doc("cv, yolov8, python"));
        assert!((r.cues.domain_affinity - 2.0 / 3.0).abs() < 1e-12);
    }
}
