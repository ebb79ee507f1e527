//! Assignment quality, utility distributions and scaling benchmarks.
//!
//! Average utility is taken over assigned pairs, not over all tasks, so an
//! assignment covering 90% of 300 tasks with total 167.4 averages
//! 167.4 / 270 = 0.62.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{
    greedy_select, pair_similarities, pair_skill_similarities, random_selection, raw_willingness_matrix,
    smooth_matrix, Assignment, CapacityMap, Method, UtilityMatrix, UtilityParams,
};
use crate::corpus::{generate_synthetic, Corpus, SyntheticConfig};
use crate::extraction::{extract_batch, Profile, RuleBasedExtractor, TaskSpec};
use crate::ontology::Ontology;
use crate::pipeline::PipelineError;
use crate::similarity::{fit_vectorizer, SparseVector, VectorizerSettings};
use crate::willingness::{WillingnessParams, WillingnessState};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{pairs} pairs cannot cover only {tasks} tasks")]
    InconsistentInput { pairs: usize, tasks: usize },

    #[error("benchmark sizes must be positive and ascending")]
    BadSizes,

    #[error("at least 3 repetitions are needed, got {0}")]
    TooFewRepetitions(usize),

    #[error(transparent)]
    Pipeline(#[from] PipelineError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub method: String,
    pub total_utility: f64,
    pub avg_utility: f64,
    pub coverage: f64,
    pub pair_count: usize,
}

impl QualityReport {
    pub fn labeled(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }
}

pub fn quality(a: &Assignment, m_tasks: usize) -> Result<QualityReport, MetricsError> {
    let pairs = a.pairs.len();
    if pairs > m_tasks {
        return Err(MetricsError::InconsistentInput { pairs, tasks: m_tasks });
    }
    if pairs == 0 {
        return Ok(QualityReport::default());
    }
    let total = a.total_utility();
    Ok(QualityReport {
        method: String::new(),
        total_utility: total,
        avg_utility: total / pairs as f64,
        coverage: pairs as f64 / m_tasks as f64,
        pair_count: pairs,
    })
}

/// Empirical CDF of per-pair utilities at thresholds `k / bins` for
/// `k = 1..=bins`: the fraction of pairs with utility at or below each
/// threshold. All zeros for an empty assignment.
///
/// # Panics
///
/// If `bins < 2`.
pub fn utility_cdf(a: &Assignment, bins: usize) -> Vec<(f64, f64)> {
    assert!(bins >= 2, "utility_cdf needs at least 2 bins");
    let mut u: Vec<f64> = a.pairs.iter().map(|p| p.utility).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len();
    (1..=bins)
        .map(|k| {
            let threshold = k as f64 / bins as f64;
            let below = u.partition_point(|&x| x <= threshold);
            let fraction = if n == 0 { 0.0 } else { below as f64 / n as f64 };
            (threshold, fraction)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Extraction,
    Similarity,
    Willingness,
    Assignment,
    Total,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Extraction => "extraction",
            Stage::Similarity => "similarity",
            Stage::Willingness => "willingness",
            Stage::Assignment => "assignment",
            Stage::Total => "total",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSample {
    pub stage: Stage,
    pub rep: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Dispersion {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Some(Self {
            min: v[0],
            median,
            max: v[n - 1],
        })
    }
}

/// Wall-clock samples for one method at one market size. Stages a method
/// does not run are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub market_size: usize,
    pub method: Method,
    pub repetitions: usize,
    pub samples: Vec<StageSample>,
}

impl TimingReport {
    pub fn stage(&self, stage: Stage) -> Option<Dispersion> {
        let v: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.stage == stage)
            .map(|s| s.seconds)
            .collect();
        Dispersion::of(&v)
    }

    pub fn total(&self) -> Dispersion {
        self.stage(Stage::Total).expect("every report has total samples")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub repetitions: usize,
    /// Template for generated corpora; counts and seed are overwritten.
    pub synthetic: SyntheticConfig,
    pub vectorizer: VectorizerSettings,
    pub willingness: WillingnessParams,
    pub utility: UtilityParams,
    pub capacities: CapacityMap,
}

impl BenchConfig {
    pub fn new(sizes: Vec<usize>, methods: Vec<Method>, seed: u64) -> Self {
        Self {
            sizes,
            methods,
            seed,
            repetitions: 3,
            synthetic: SyntheticConfig::default(),
            vectorizer: VectorizerSettings::default(),
            willingness: WillingnessParams::default(),
            utility: UtilityParams::default(),
            capacities: CapacityMap::default(),
        }
    }
}

struct Clock {
    rep: usize,
    start: Instant,
    lap: Instant,
    samples: Vec<StageSample>,
}

impl Clock {
    fn start(rep: usize) -> Self {
        let now = Instant::now();
        Self {
            rep,
            start: now,
            lap: now,
            samples: Vec::new(),
        }
    }

    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.samples.push(StageSample {
            stage,
            rep: self.rep,
            seconds: (now - self.lap).as_secs_f64(),
        });
        self.lap = now;
    }

    fn finish(mut self) -> Vec<StageSample> {
        self.samples.push(StageSample {
            stage: Stage::Total,
            rep: self.rep,
            seconds: self.start.elapsed().as_secs_f64(),
        });
        self.samples
    }
}

fn ids(docs: &[crate::corpus::Document]) -> Vec<String> {
    docs.iter().map(|d| d.id.clone()).collect()
}

/// Extraction reduced to canonical skill sets, shared by skill-only and SWATi.
fn extract_skills(
    corpus: &Corpus,
    ontology: &Ontology,
) -> Result<(Vec<Profile>, Vec<TaskSpec>), PipelineError> {
    let ex = RuleBasedExtractor::new(ontology);
    let par = rayon::current_num_threads();
    let vs = extract_batch(&ex, &corpus.volunteers, par).map_err(PipelineError::from)?;
    let ts = extract_batch(&ex, &corpus.tasks, par).map_err(PipelineError::from)?;
    let profiles = vs
        .into_iter()
        .map(|r| Profile {
            skills: ontology.canonicalize_set(&r.raws()).skills,
            id: r.doc_id,
            content_vector: SparseVector::default(),
            cues: r.cues,
            history_ref: None,
        })
        .collect();
    let tasks = ts
        .into_iter()
        .map(|r| TaskSpec {
            required_skills: ontology.canonicalize_set(&r.raws()).skills,
            id: r.doc_id,
            content_vector: SparseVector::default(),
            capacity_demand: 1,
        })
        .collect();
    Ok((profiles, tasks))
}

fn run_once(
    corpus: &Corpus,
    ontology: &Ontology,
    method: Method,
    cfg: &BenchConfig,
    rep: usize,
) -> Result<Vec<StageSample>, MetricsError> {
    let mut clock = Clock::start(rep);
    let caps = &cfg.capacities;
    match method {
        Method::Random => {
            let picks = random_selection(&ids(&corpus.volunteers), &ids(&corpus.tasks), caps, cfg.seed);
            std::hint::black_box(picks);
            clock.lap(Stage::Assignment);
        }
        Method::SkillOnly => {
            let (profiles, tasks) = extract_skills(corpus, ontology)?;
            clock.lap(Stage::Extraction);
            let scores = pair_skill_similarities(&profiles, &tasks);
            clock.lap(Stage::Similarity);
            let vids: Vec<String> = profiles.iter().map(|p| p.id.clone()).collect();
            let tids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
            std::hint::black_box(greedy_select(&vids, &tids, &scores, caps));
            clock.lap(Stage::Assignment);
        }
        Method::Swati => {
            let (mut profiles, mut tasks) = extract_skills(corpus, ontology)?;
            clock.lap(Stage::Extraction);
            let model = fit_vectorizer(corpus, &cfg.vectorizer).map_err(PipelineError::from)?;
            for (p, d) in profiles.iter_mut().zip(&corpus.volunteers) {
                p.content_vector = model.vectorize(&d.text);
            }
            for (t, d) in tasks.iter_mut().zip(&corpus.tasks) {
                t.content_vector = model.vectorize(&d.text);
            }
            let sims = pair_similarities(&profiles, &tasks);
            clock.lap(Stage::Similarity);
            let raw = raw_willingness_matrix(&profiles, &tasks, &BTreeMap::new(), &cfg.willingness);
            let w = smooth_matrix(&mut WillingnessState::new(), &profiles, &tasks, &raw, &cfg.willingness);
            clock.lap(Stage::Willingness);
            let u = UtilityMatrix::from_parts(
                profiles.iter().map(|p| p.id.clone()).collect(),
                tasks.iter().map(|t| t.id.clone()).collect(),
                &sims,
                &w,
                &cfg.utility,
            )
            .map_err(PipelineError::from)?;
            std::hint::black_box(greedy_select(u.volunteers(), u.tasks(), u.utilities(), caps));
            clock.lap(Stage::Assignment);
        }
    }
    Ok(clock.finish())
}

/// Time every method on a generated market of each size (`|V| = |T| =
/// size`). Methods run one after another, never concurrently.
pub fn bench_scaling(cfg: &BenchConfig, ontology: &Ontology) -> Result<Vec<TimingReport>, MetricsError> {
    if cfg.sizes.is_empty() || cfg.sizes[0] == 0 || cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MetricsError::BadSizes);
    }
    if cfg.repetitions < 3 {
        return Err(MetricsError::TooFewRepetitions(cfg.repetitions));
    }
    let mut reports = Vec::new();
    for &size in &cfg.sizes {
        let syn = SyntheticConfig {
            seed: cfg.seed,
            n_volunteers: size,
            n_tasks: size,
            ..cfg.synthetic.clone()
        };
        let corpus = generate_synthetic(&syn, ontology).map_err(PipelineError::from)?;
        for &method in &cfg.methods {
            // Warm-up run, discarded.
            run_once(&corpus, ontology, method, cfg, 0)?;
            let mut samples = Vec::new();
            for rep in 0..cfg.repetitions {
                samples.extend(run_once(&corpus, ontology, method, cfg, rep)?);
            }
            log::debug!("bench size={size} method={method} done");
            reports.push(TimingReport {
                market_size: size,
                method,
                repetitions: cfg.repetitions,
                samples,
            });
        }
    }
    Ok(reports)
}

/// Columns: `method,total,avg,coverage,pairs`.
pub fn write_quality_csv<W: Write>(w: W, reports: &[QualityReport]) -> Result<(), MetricsError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "total", "avg", "coverage", "pairs"])?;
    for r in reports {
        out.write_record([
            r.method.clone(),
            r.total_utility.to_string(),
            r.avg_utility.to_string(),
            r.coverage.to_string(),
            r.pair_count.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Columns: `threshold` then one fraction column per method. All curves must
/// share the same thresholds.
pub fn write_cdf_csv<W: Write>(w: W, curves: &[(String, Vec<(f64, f64)>)]) -> Result<(), MetricsError> {
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> = std::iter::once("threshold")
        .chain(curves.iter().map(|(m, _)| m.as_str()))
        .collect();
    out.write_record(&header)?;
    let rows = curves.first().map_or(0, |(_, c)| c.len());
    for i in 0..rows {
        let mut rec = vec![curves[0].1[i].0.to_string()];
        rec.extend(curves.iter().map(|(_, c)| c[i].1.to_string()));
        out.write_record(&rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Columns: `size,method,stage,rep,seconds`.
pub fn write_timing_csv<W: Write>(w: W, reports: &[TimingReport]) -> Result<(), MetricsError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["size", "method", "stage", "rep", "seconds"])?;
    for r in reports {
        for s in &r.samples {
            out.write_record([
                r.market_size.to_string(),
                r.method.to_string(),
                s.stage.name().to_string(),
                s.rep.to_string(),
                format!("{:.9}", s.seconds),
            ])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
