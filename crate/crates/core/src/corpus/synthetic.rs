//! Seeded synthetic volunteer and task corpora.
//!
//! Every document gets a home domain (an ontology root). Skills are drawn
//! mostly from that domain and written as a randomly chosen alias, so
//! extraction has to resolve them. Volunteers also carry an engagement level
//! that drives how many preference-cue sentences they contain.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, DocKind, Document};
use crate::ontology::Ontology;

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillRange {
    pub min: usize,
    pub max: usize,
}

impl SkillRange {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_volunteers: usize,
    pub n_tasks: usize,
    pub skills_per_volunteer: SkillRange,
    pub skills_per_task: SkillRange,
    pub cue_density: f64,
    /// Free-form label recorded in each document's metadata.
    pub vocabulary_ref: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_volunteers: 342,
            n_tasks: 300,
            skills_per_volunteer: SkillRange::new(10, 14),
            skills_per_task: SkillRange::new(2, 4),
            cue_density: 0.5,
            vocabulary_ref: "builtin".into(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self, ontology: &Ontology) -> Result<(), CorpusError> {
        if ontology.is_empty() {
            return Err(CorpusError::Config("ontology is empty".into()));
        }
        if self.n_volunteers == 0 || self.n_tasks == 0 {
            return Err(CorpusError::Config("n_volunteers and n_tasks must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.cue_density) {
            return Err(CorpusError::Config(format!("cue_density {} outside [0, 1]", self.cue_density)));
        }
        for (name, r) in [
            ("skills_per_volunteer", self.skills_per_volunteer),
            ("skills_per_task", self.skills_per_task),
        ] {
            if r.min == 0 || r.min > r.max {
                return Err(CorpusError::Config(format!("{name} [{}, {}] is empty", r.min, r.max)));
            }
            if r.max > ontology.len() {
                return Err(CorpusError::Config(format!(
                    "{name} asks for up to {} skills but the ontology has {}",
                    r.max,
                    ontology.len()
                )));
            }
        }
        Ok(())
    }
}

/// Topical words per root. None of them is a skill alias or a cue trigger.
const DOMAIN_WORDS: &[(&str, &[&str])] = &[
    ("Programming Languages", &["syntax", "runtime", "interpreter", "idioms", "libraries", "tooling", "refactoring", "modules", "generics", "closures"]),
    ("Web Development", &["browser", "frontend", "backend", "pages", "forms", "routing", "rendering", "stylesheets", "components", "endpoints"]),
    ("Data Science", &["datasets", "insights", "dashboards", "metrics", "surveys", "trends", "sampling", "experiments", "cohorts", "reports"]),
    ("Artificial Intelligence", &["models", "training", "inference", "features", "labels", "embeddings", "annotation", "benchmarks", "classifiers", "predictions"]),
    ("Databases", &["tables", "indexes", "queries", "records", "transactions", "replication", "backups", "migrations", "joins", "storage"]),
    ("Cloud Computing", &["hosting", "regions", "instances", "scaling", "billing", "tenancy", "buckets", "provisioning", "uptime", "clusters"]),
    ("DevOps", &["deployments", "pipelines", "releases", "monitoring", "alerts", "rollbacks", "builds", "automation", "runbooks", "environments"]),
    ("Cybersecurity", &["threats", "patching", "audits", "phishing", "credentials", "exploits", "hardening", "breaches", "policies", "attackers"]),
    ("Mobile Development", &["handsets", "tablets", "notifications", "gestures", "offline", "screens", "stores", "permissions", "battery", "sensors"]),
    ("Networking", &["routers", "switches", "cabling", "bandwidth", "latency", "packets", "subnets", "outages", "topology", "gateways"]),
    ("Data Engineering", &["ingestion", "batches", "schemas", "lineage", "connectors", "lakes", "throughput", "partitions", "jobs", "orchestration"]),
    ("Project Management", &["milestones", "timelines", "budgets", "sprints", "backlog", "deliverables", "planning", "coordination", "meetings", "estimates"]),
    ("Software Engineering", &["architecture", "maintainability", "modules", "reviews", "specifications", "refactoring", "quality", "releases", "documentation", "testing"]),
    ("UI/UX Design", &["layouts", "personas", "journeys", "sketches", "typography", "colors", "icons", "navigation", "feedback", "onboarding"]),
];

const GENERIC_WORDS: &[&str] = &["outreach", "tooling", "planning", "documentation", "community", "impact", "mentoring", "quality"];

/// Sentences with exactly one trigger phrase each, by cue category.
const CUE_SENTENCES: [&[&str]; 4] = [
    &[
        "I previously worked with a regional team.",
        "Prior experience includes a campus project.",
        "I worked on a food bank scheduler.",
        "Hands-on experience came from a small startup.",
        "I contributed to an open project.",
    ],
    &[
        "I am interested in civic projects.",
        "I am passionate about public good.",
        "I am eager to mentor newcomers.",
        "I am keen to learn from peers.",
        "I am excited to join new teams.",
    ],
    &[
        "I served as a volunteer at a shelter.",
        "I volunteered at a library.",
        "Weekly volunteering at a clinic keeps me grounded.",
        "I supported a nonprofit for two years.",
        "I did community service in school.",
        "I organized a charity run.",
    ],
    &[
        "I am available most days.",
        "My availability is steady.",
        "I can help on weekends.",
        "I can help in the evenings.",
        "I keep flexible hours.",
        "I can give ten hours per week.",
    ],
];

const VOLUNTEER_OPENERS: &[&str] = &["Applicant {id} profile.", "Profile for {id}.", "Resume summary of {id}."];
const TASK_OPENERS: &[&str] = &["Task {id} request.", "Request {id} from a partner organization.", "Open request {id}."];

fn domain_words(root: &str) -> &'static [&'static str] {
    DOMAIN_WORDS
        .iter()
        .find(|(r, _)| *r == root)
        .map(|(_, w)| *w)
        .unwrap_or(GENERIC_WORDS)
}

struct Pools<'a> {
    ontology: &'a Ontology,
    roots: Vec<&'a str>,
    by_root: BTreeMap<&'a str, Vec<usize>>,
}

impl<'a> Pools<'a> {
    fn new(ontology: &'a Ontology) -> Self {
        let mut by_root: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, e) in ontology.entries().iter().enumerate() {
            let root = ontology.root(&e.canonical).expect("entry is in the ontology");
            by_root.entry(root).or_default().push(i);
        }
        Self {
            ontology,
            roots: ontology.root_names(),
            by_root,
        }
    }

    /// `count` distinct entries, each from `home` with probability 0.75 while
    /// it has unused entries, otherwise from the whole ontology.
    fn sample_skills(&self, rng: &mut ChaCha8Rng, home: &str, count: usize) -> Vec<usize> {
        let mut chosen = BTreeSet::new();
        let mut picked = Vec::with_capacity(count);
        let home_pool = &self.by_root[home];
        while picked.len() < count {
            let from_home = rng.gen_bool(0.75);
            let i = if from_home && home_pool.iter().any(|i| !chosen.contains(i)) {
                *home_pool.choose(rng).expect("non-empty pool")
            } else {
                rng.gen_range(0..self.ontology.len())
            };
            if chosen.insert(i) {
                picked.push(i);
            }
        }
        picked
    }

    fn alias_for(&self, rng: &mut ChaCha8Rng, i: usize) -> &'a str {
        let e = &self.ontology.entries()[i];
        let k = rng.gen_range(0..=e.aliases.len());
        if k == 0 {
            &e.canonical
        } else {
            &e.aliases[k - 1]
        }
    }
}

/// Counts whose running mean is the range midpoint: every odd-indexed draw
/// mirrors the previous one.
struct AntitheticCounts {
    range: SkillRange,
    last: Option<usize>,
}

impl AntitheticCounts {
    fn new(range: SkillRange) -> Self {
        Self { range, last: None }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> usize {
        match self.last.take() {
            Some(prev) => self.range.min + self.range.max - prev,
            None => {
                let c = rng.gen_range(self.range.min..=self.range.max);
                self.last = Some(c);
                c
            }
        }
    }
}

fn filler(rng: &mut ChaCha8Rng, root: &str, n: usize) -> String {
    let words: Vec<&str> = domain_words(root).choose_multiple(rng, n).copied().collect();
    words.join(", ")
}

fn skill_list(rng: &mut ChaCha8Rng, pools: &Pools<'_>, skills: &[usize]) -> String {
    skills
        .iter()
        .map(|&i| pools.alias_for(rng, i))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Document metadata. `skills` lists the planted canonical skills, sorted
/// and separated by `;`.
fn meta(cfg: &SyntheticConfig, pools: &Pools<'_>, root: &str, skills: &[usize]) -> BTreeMap<String, String> {
    let planted: BTreeSet<&str> = skills
        .iter()
        .map(|&i| pools.ontology.entries()[i].canonical.as_str())
        .collect();
    BTreeMap::from([
        ("source".to_string(), "synthetic".to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("vocabulary".to_string(), cfg.vocabulary_ref.clone()),
        ("domain".to_string(), root.to_string()),
        ("skills".to_string(), planted.into_iter().collect::<Vec<_>>().join(";")),
    ])
}

/// Generate a corpus. The output depends only on `cfg` and `ontology`.
pub fn generate_synthetic(cfg: &SyntheticConfig, ontology: &Ontology) -> Result<Corpus, CorpusError> {
    cfg.validate(ontology)?;
    let pools = Pools::new(ontology);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.n_volunteers.max(cfg.n_tasks).to_string().len().max(3);

    let mut counts = AntitheticCounts::new(cfg.skills_per_volunteer);
    let mut volunteers = Vec::with_capacity(cfg.n_volunteers);
    for k in 1..=cfg.n_volunteers {
        let id = format!("v{k:0width$}");
        let root = *pools.roots.choose(&mut rng).expect("ontology has a root");
        let n = counts.next(&mut rng);
        let skills = pools.sample_skills(&mut rng, root, n);
        let engagement: f64 = rng.gen();
        let p = (2.0 * cfg.cue_density * engagement).clamp(0.0, 1.0);

        let mut text = VOLUNTEER_OPENERS.choose(&mut rng).expect("non-empty").replace("{id}", &id);
        text.push_str(" Skills: ");
        text.push_str(&skill_list(&mut rng, &pools, &skills));
        text.push_str(". Background covers ");
        text.push_str(&filler(&mut rng, root, 3));
        text.push('.');
        for sentences in CUE_SENTENCES {
            let hits = (0..4).filter(|_| rng.gen_bool(p)).count();
            for _ in 0..hits {
                text.push(' ');
                text.push_str(sentences.choose(&mut rng).expect("non-empty"));
            }
        }
        let mut doc = Document::new(id, DocKind::Volunteer, text);
        doc.meta = meta(cfg, &pools, root, &skills);
        volunteers.push(doc);
    }

    let mut counts = AntitheticCounts::new(cfg.skills_per_task);
    let mut tasks = Vec::with_capacity(cfg.n_tasks);
    for k in 1..=cfg.n_tasks {
        let id = format!("t{k:0width$}");
        let root = *pools.roots.choose(&mut rng).expect("ontology has a root");
        let n = counts.next(&mut rng);
        let skills = pools.sample_skills(&mut rng, root, n);

        let mut text = TASK_OPENERS.choose(&mut rng).expect("non-empty").replace("{id}", &id);
        text.push_str(" Required skills: ");
        text.push_str(&skill_list(&mut rng, &pools, &skills));
        text.push_str(". Scope covers ");
        text.push_str(&filler(&mut rng, root, 4));
        text.push('.');
        let mut doc = Document::new(id, DocKind::Task, text);
        doc.meta = meta(cfg, &pools, root, &skills);
        tasks.push(doc);
    }

    Corpus::from_documents(volunteers.into_iter().chain(tasks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::RuleBasedExtractor;
    use crate::ontology::SkillEntry;

    fn small(seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            seed,
            n_volunteers: 10,
            n_tasks: 5,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let o = Ontology::builtin();
        let a = generate_synthetic(&small(7), &o).unwrap();
        let b = generate_synthetic(&small(7), &o).unwrap();
        assert_eq!(a.to_jsonl_string(), b.to_jsonl_string());
        assert_ne!(a, generate_synthetic(&small(8), &o).unwrap());
        assert_eq!((a.volunteers.len(), a.tasks.len()), (10, 5));
        assert_eq!(a.volunteers[0].id, "v001");
        assert_eq!(a.tasks[4].id, "t005");
    }

    #[test]
    fn fixed_range_gives_exact_skill_counts() {
        let o = Ontology::builtin();
        let cfg = SyntheticConfig {
            skills_per_volunteer: SkillRange::new(3, 3),
            ..small(3)
        };
        let c = generate_synthetic(&cfg, &o).unwrap();
        let ex = RuleBasedExtractor::new(&o);
        for d in &c.volunteers {
            let r = ex.extract_document(d);
            assert_eq!(o.canonicalize_set(&r.raws()).skills.len(), 3, "{}", d.text);
        }
    }

    #[test]
    fn infeasible_range_is_config_error() {
        let o = Ontology::from_entries(vec![
            SkillEntry {
                canonical: "A".into(),
                aliases: vec![],
                parent: None,
            },
            SkillEntry {
                canonical: "B".into(),
                aliases: vec![],
                parent: None,
            },
        ])
        .unwrap();
        let cfg = SyntheticConfig {
            skills_per_task: SkillRange::new(5, 5),
            ..small(1)
        };
        assert!(matches!(generate_synthetic(&cfg, &o), Err(CorpusError::Config(_))));
        let cfg = SyntheticConfig {
            cue_density: 1.5,
            ..small(1)
        };
        assert!(matches!(generate_synthetic(&cfg, &o), Err(CorpusError::Config(_))));
    }

    #[test]
    fn template_text_has_no_aliases_or_triggers() {
        let o = Ontology::builtin();
        let ex = RuleBasedExtractor::new(&o);
        let mut fixed: Vec<String> = DOMAIN_WORDS
            .iter()
            .map(|(_, w)| w.join(", "))
            .chain([GENERIC_WORDS.join(", ")])
            .collect();
        fixed.extend(VOLUNTEER_OPENERS.iter().chain(TASK_OPENERS).map(|s| s.replace("{id}", "v001")));
        fixed.push("Skills: . Background covers . Required skills: . Scope covers .".into());
        for text in fixed {
            let r = ex.extract_document(&Document::new("x", DocKind::Volunteer, text.as_str()));
            assert!(r.mentions.is_empty(), "{text}: {:?}", r.mentions);
            assert_eq!(r.cues.to_array()[1..], [0.0; 4], "{text}");
        }
        for root in o.root_names() {
            assert!(DOMAIN_WORDS.iter().any(|(r, _)| *r == root), "no filler for {root}");
        }
    }

    #[test]
    fn cue_sentences_carry_one_trigger() {
        let o = Ontology::builtin();
        let ex = RuleBasedExtractor::new(&o);
        for (cat, sentences) in CUE_SENTENCES.iter().enumerate() {
            for s in *sentences {
                let r = ex.extract_document(&Document::new("x", DocKind::Volunteer, *s));
                assert!(r.mentions.is_empty(), "{s}");
                let mut expected = [0.0; 4];
                expected[cat] = 0.25;
                assert_eq!(r.cues.to_array()[1..], expected, "{s}");
            }
        }
    }

    #[test]
    fn planted_skills_are_recovered() {
        let o = Ontology::builtin();
        let ex = RuleBasedExtractor::new(&o);
        let cfg = SyntheticConfig {
            n_volunteers: 60,
            n_tasks: 40,
            ..small(11)
        };
        let c = generate_synthetic(&cfg, &o).unwrap();
        for d in c.documents() {
            let r = ex.extract_document(d);
            let found = o.canonicalize_set(&r.raws());
            assert!(found.unresolved.is_empty());
            let planted: BTreeSet<String> = d.meta["skills"].split(';').map(String::from).collect();
            assert_eq!(found.skills, planted, "{}", d.text);
            let range = match d.kind {
                DocKind::Volunteer => cfg.skills_per_volunteer,
                DocKind::Task => cfg.skills_per_task,
            };
            assert!((range.min..=range.max).contains(&found.skills.len()), "{}", d.text);
        }
    }

    #[test]
    fn antithetic_counts_average_to_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = AntitheticCounts::new(SkillRange::new(10, 14));
        let total: usize = (0..100).map(|_| c.next(&mut rng)).sum();
        assert_eq!(total, 1200);
    }
}
