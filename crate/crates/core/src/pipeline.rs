//! Glue from a corpus to matchable profiles and task specs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::assignment::{
    assign_random, assign_skill_only, run_epoch, AssignmentError, Assignment, CapacityMap, EpochInputs, Method,
    UtilityMatrix, UtilityParams,
};
use crate::corpus::{Corpus, CorpusError};
use crate::extraction::{
    build_profile, build_taskspec, extract_batch, ExtractionError, ExtractionResult, Extractor, Profile, TaskSpec,
};
use crate::ledger::LedgerError;
use crate::ontology::{Ontology, OntologyError};
use crate::similarity::{fit_vectorizer, SimilarityError, VectorizerModel, VectorizerSettings};
use crate::willingness::{History, WillingnessError, WillingnessParams, WillingnessState};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Willingness(#[from] WillingnessError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("{0}")]
    Invalid(String),
}

/// Extracted and vectorized corpus, ready for matching.
#[derive(Debug, Clone)]
pub struct Market {
    pub profiles: Vec<Profile>,
    pub tasks: Vec<TaskSpec>,
    pub volunteer_extractions: Vec<ExtractionResult>,
    pub task_extractions: Vec<ExtractionResult>,
    pub vectorizer: VectorizerModel,
}

impl Market {
    pub fn volunteer_ids(&self) -> Vec<String> {
        self.profiles.iter().map(|p| p.id.clone()).collect()
    }

    pub fn task_ids(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.id.clone()).collect()
    }
}

/// Extract every document, fit TF-IDF on the whole corpus and build the
/// hybrid representations.
pub fn build_market<E: Extractor + ?Sized>(
    corpus: &Corpus,
    extractor: &E,
    ontology: &Ontology,
    settings: &VectorizerSettings,
    parallelism: usize,
) -> Result<Market, PipelineError> {
    let volunteer_extractions = extract_batch(extractor, &corpus.volunteers, parallelism)?;
    let task_extractions = extract_batch(extractor, &corpus.tasks, parallelism)?;
    let vectorizer = fit_vectorizer(corpus, settings)?;
    let profiles = corpus
        .volunteers
        .iter()
        .zip(&volunteer_extractions)
        .map(|(d, e)| build_profile(d, e, ontology, &vectorizer))
        .collect::<Result<_, _>>()?;
    let tasks = corpus
        .tasks
        .iter()
        .zip(&task_extractions)
        .map(|(d, e)| build_taskspec(d, e, ontology, &vectorizer))
        .collect::<Result<_, _>>()?;
    Ok(Market {
        profiles,
        tasks,
        volunteer_extractions,
        task_extractions,
        vectorizer,
    })
}

/// Everything fixed across the epochs of one matching run.
#[derive(Debug, Clone, Copy)]
pub struct MatchParams<'a> {
    pub method: Method,
    pub histories: &'a BTreeMap<String, History>,
    pub capacities: &'a CapacityMap,
    pub willingness: &'a WillingnessParams,
    pub utility: &'a UtilityParams,
    /// Required for [`Method::Random`].
    pub seed: Option<u64>,
}

/// One epoch over `profiles` and `tasks`. Every method reports utilities
/// from the same SWATi matrix, so their totals are comparable.
pub fn match_epoch(
    profiles: &[Profile],
    tasks: &[TaskSpec],
    params: &MatchParams<'_>,
    state: &mut WillingnessState,
    epoch: u64,
) -> Result<(UtilityMatrix, Assignment), PipelineError> {
    if params.method == Method::Random && params.seed.is_none() {
        return Err(PipelineError::Invalid("the random method needs a seed".into()));
    }
    let inputs = EpochInputs {
        profiles,
        tasks,
        histories: params.histories,
        capacities: params.capacities,
    };
    let outcome = run_epoch(inputs, params.willingness, params.utility, state, epoch)?;
    let mut assignment = match (params.method, params.seed) {
        (Method::Swati, _) => outcome.assignment,
        (Method::SkillOnly, _) => assign_skill_only(&outcome.matrix, params.capacities),
        (Method::Random, seed) => assign_random(&outcome.matrix, params.capacities, seed.unwrap_or_default()),
    };
    assignment.epoch = epoch;
    Ok((outcome.matrix, assignment))
}
