//! Per-pair willingness estimation.
//!
//! A raw estimate mixes a history tendency `g` with a cue score `f`, passes
//! the mix through a gain/center logistic, and is then exponentially
//! smoothed against the previous epoch's value:
//!
//! ```text
//! s      = eta * g + (1 - eta) * f
//! w_hat  = 1 / (1 + exp(-gain * (s - center)))
//! w(tau) = lambda * w(tau-) + (1 - lambda) * w_hat     (w_hat on first sight)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{Profile, TaskSpec};

#[derive(Debug, Error)]
pub enum WillingnessError {
    #[error("invalid willingness parameters: {0}")]
    InvalidParams(String),

    #[error("history I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("history line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Cue vector in component order: domain affinity (task-adjusted), prior
/// exposure, stated interest, volunteering history, availability.
pub type CueVector = [f64; 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WillingnessParams {
    pub eta: f64,
    pub lambda: f64,
    pub cue_weights: [f64; 5],
    pub sigmoid_gain: f64,
    pub sigmoid_center: f64,
}

impl Default for WillingnessParams {
    fn default() -> Self {
        Self {
            eta: 0.5,
            lambda: 0.7,
            cue_weights: [0.2; 5],
            sigmoid_gain: 4.0,
            sigmoid_center: 0.5,
        }
    }
}

impl WillingnessParams {
    pub fn validate(&self) -> Result<(), WillingnessError> {
        let bad = |m: String| Err(WillingnessError::InvalidParams(m));
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta {} outside [0, 1]", self.eta));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if self.cue_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("cue weights must be non-negative".into());
        }
        let sum: f64 = self.cue_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("cue weights sum to {sum}, not 1"));
        }
        if !(self.sigmoid_gain.is_finite() && self.sigmoid_gain > 0.0) {
            return bad(format!("sigmoid gain {} must be positive", self.sigmoid_gain));
        }
        if !self.sigmoid_center.is_finite() {
            return bad("sigmoid center must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub task_skills: BTreeSet<String>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub volunteer_id: String,
    pub records: Vec<HistoryRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HistoryLine {
    volunteer_id: String,
    task_skills: BTreeSet<String>,
    accepted: bool,
}

/// Read `{volunteer_id, task_skills[], accepted}` lines, grouped per volunteer
/// in file order.
pub fn read_histories<R: BufRead>(reader: R) -> Result<BTreeMap<String, History>, WillingnessError> {
    let mut out: BTreeMap<String, History> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: HistoryLine = serde_json::from_str(&line).map_err(|e| WillingnessError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.entry(rec.volunteer_id.clone())
            .or_insert_with(|| History {
                volunteer_id: rec.volunteer_id.clone(),
                records: Vec::new(),
            })
            .records
            .push(HistoryRecord {
                task_skills: rec.task_skills,
                accepted: rec.accepted,
            });
    }
    Ok(out)
}

pub fn load_histories(path: impl AsRef<Path>) -> Result<BTreeMap<String, History>, WillingnessError> {
    let f = std::fs::File::open(path)?;
    read_histories(std::io::BufReader::new(f))
}

pub fn cue_vector(volunteer: &Profile, task: &TaskSpec) -> CueVector {
    let overlap = volunteer.skills.intersection(&task.required_skills).next().is_some();
    let mut p = volunteer.cues.to_array();
    if !overlap {
        p[0] *= 0.5;
    }
    p
}

/// Weighted sum of cue components.
pub fn profile_score(p: &CueVector, params: &WillingnessParams) -> f64 {
    p.iter().zip(&params.cue_weights).map(|(x, w)| x * w).sum()
}

/// Acceptance rate over records whose skills intersect the task, falling
/// back to the overall rate, then to 0.5 without any history.
pub fn history_tendency(history: Option<&History>, task: &TaskSpec) -> f64 {
    let Some(h) = history.filter(|h| !h.records.is_empty()) else {
        return 0.5;
    };
    let rate = |it: &mut dyn Iterator<Item = &HistoryRecord>| {
        let (mut n, mut yes) = (0usize, 0usize);
        for r in it {
            n += 1;
            yes += usize::from(r.accepted);
        }
        (n > 0).then(|| yes as f64 / n as f64)
    };
    let mut relevant = h
        .records
        .iter()
        .filter(|r| r.task_skills.intersection(&task.required_skills).next().is_some());
    rate(&mut relevant).unwrap_or_else(|| rate(&mut h.records.iter()).unwrap_or(0.5))
}

pub fn raw_willingness(g: f64, f: f64, params: &WillingnessParams) -> f64 {
    let s = params.eta * g + (1.0 - params.eta) * f;
    1.0 / (1.0 + (-params.sigmoid_gain * (s - params.sigmoid_center)).exp())
}

/// One smoothing step; `previous` is `None` on a pair's first epoch.
pub fn smooth(previous: Option<f64>, w_hat: f64, lambda: f64) -> f64 {
    match previous {
        None => w_hat,
        Some(prev) => lambda * prev + (1.0 - lambda) * w_hat,
    }
}

/// Last smoothed willingness per `(volunteer_id, task_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WillingnessState {
    values: HashMap<(String, String), f64>,
}

impl WillingnessState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, volunteer: &str, task: &str) -> Option<f64> {
        self.values.get(&(volunteer.to_string(), task.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smooth `w_hat` against the stored value for the pair and store the result.
    pub fn update(&mut self, volunteer: &str, task: &str, w_hat: f64, params: &WillingnessParams) -> f64 {
        let key = (volunteer.to_string(), task.to_string());
        let w = smooth(self.values.get(&key).copied(), w_hat, params.lambda);
        self.values.insert(key, w);
        w
    }

    /// Entries sorted by key, for stable serialization.
    pub fn sorted(&self) -> Vec<(&str, &str, f64)> {
        let mut v: Vec<_> = self
            .values
            .iter()
            .map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
            .collect();
        v.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        v
    }
}

/// Raw (unsmoothed) willingness for a pair.
pub fn estimate(
    volunteer: &Profile,
    task: &TaskSpec,
    history: Option<&History>,
    params: &WillingnessParams,
) -> f64 {
    let f = profile_score(&cue_vector(volunteer, task), params);
    let g = history_tendency(history, task);
    raw_willingness(g, f, params)
}
