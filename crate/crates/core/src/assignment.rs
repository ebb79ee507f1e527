//! Utilities and capacity-constrained assignment.
//!
//! [`assign_swati`] walks all volunteer/task pairs in non-increasing utility
//! and accepts a pair when its task is still open and the volunteer has
//! capacity left. Ties are broken by `(volunteer_id, task_id)` ascending, so
//! equal inputs always give identical assignments. The two baselines
//! ([`assign_skill_only`], [`assign_random`]) report the same utility as
//! SWATi for the pairs they pick, and [`assign_optimal_bruteforce`] is an
//! exhaustive oracle for small instances.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{Profile, TaskSpec};
use crate::similarity::{content_sim, skill_sim};
use crate::willingness::{self, History, WillingnessParams, WillingnessState};

/// Largest instance side the brute-force oracle accepts.
pub const BRUTEFORCE_LIMIT: usize = 8;

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AssignmentError {
    #[error("utility matrix needs at least one volunteer and one task (got {volunteers}x{tasks})")]
    Dimension { volunteers: usize, tasks: usize },

    #[error("brute force is limited to {BRUTEFORCE_LIMIT}x{BRUTEFORCE_LIMIT}, got {volunteers}x{tasks}")]
    InstanceTooLarge { volunteers: usize, tasks: usize },

    #[error("invalid utility parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityForm {
    /// `(alpha * s + beta * c) * w`
    #[default]
    Product,
    /// `alpha * s + beta * c * w`
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityParams {
    pub alpha: f64,
    pub beta: f64,
    pub form: UtilityForm,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            form: UtilityForm::Product,
        }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<(), AssignmentError> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.alpha) || !unit.contains(&self.beta) {
            return Err(AssignmentError::InvalidParams(format!(
                "alpha {} and beta {} must lie in [0, 1]",
                self.alpha, self.beta
            )));
        }
        if (self.alpha + self.beta - 1.0).abs() > 1e-12 {
            return Err(AssignmentError::InvalidParams(format!(
                "alpha + beta = {}, expected 1",
                self.alpha + self.beta
            )));
        }
        Ok(())
    }
}

pub fn compute_utility(s: f64, c: f64, w: f64, params: &UtilityParams) -> f64 {
    match params.form {
        UtilityForm::Product => (params.alpha * s + params.beta * c) * w,
        UtilityForm::Split => params.alpha * s + params.beta * c * w,
    }
}

/// Per-cell breakdown behind a utility value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    #[serde(rename = "s")]
    pub skill: f64,
    #[serde(rename = "c")]
    pub content: f64,
    #[serde(rename = "w")]
    pub willingness: f64,
}

/// Dense row-major `volunteers x tasks` utilities with their components.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    volunteers: Vec<String>,
    tasks: Vec<String>,
    utility: Vec<f64>,
    components: Vec<Components>,
}

impl UtilityMatrix {
    /// Combine precomputed `(skill, content)` similarities and willingness
    /// values (both row-major) into utilities.
    pub fn from_parts(
        volunteers: Vec<String>,
        tasks: Vec<String>,
        similarities: &[(f64, f64)],
        willingness: &[f64],
        params: &UtilityParams,
    ) -> Result<Self, AssignmentError> {
        let (n, m) = (volunteers.len(), tasks.len());
        if n == 0 || m == 0 || similarities.len() != n * m || willingness.len() != n * m {
            return Err(AssignmentError::Dimension {
                volunteers: n,
                tasks: m,
            });
        }
        let components: Vec<Components> = similarities
            .iter()
            .zip(willingness)
            .map(|(&(skill, content), &w)| Components {
                skill,
                content,
                willingness: w,
            })
            .collect();
        let utility = components
            .iter()
            .map(|c| compute_utility(c.skill, c.content, c.willingness, params))
            .collect();
        Ok(Self {
            volunteers,
            tasks,
            utility,
            components,
        })
    }

    /// A matrix given directly by utilities, with every component set to the
    /// utility itself. Handy for assignment-only experiments.
    pub fn from_utilities(
        volunteers: Vec<String>,
        tasks: Vec<String>,
        utility: Vec<f64>,
    ) -> Result<Self, AssignmentError> {
        let (n, m) = (volunteers.len(), tasks.len());
        if n == 0 || m == 0 || utility.len() != n * m {
            return Err(AssignmentError::Dimension {
                volunteers: n,
                tasks: m,
            });
        }
        let components = utility
            .iter()
            .map(|&u| Components {
                skill: u,
                content: u,
                willingness: 1.0,
            })
            .collect();
        Ok(Self {
            volunteers,
            tasks,
            utility,
            components,
        })
    }

    pub fn volunteers(&self) -> &[String] {
        &self.volunteers
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn n_volunteers(&self) -> usize {
        self.volunteers.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn utility(&self, i: usize, j: usize) -> f64 {
        self.utility[i * self.tasks.len() + j]
    }

    pub fn components(&self, i: usize, j: usize) -> Components {
        self.components[i * self.tasks.len() + j]
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utility
    }

    /// Skill similarity of every cell, row-major.
    pub fn skill_scores(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.skill).collect()
    }

    fn pair(&self, i: usize, j: usize) -> AssignedPair {
        AssignedPair {
            volunteer_id: self.volunteers[i].clone(),
            task_id: self.tasks[j].clone(),
            utility: self.utility(i, j),
        }
    }

    /// Position lookup by id.
    pub fn index(&self) -> (HashMap<&str, usize>, HashMap<&str, usize>) {
        (
            self.volunteers.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect(),
            self.tasks.iter().enumerate().map(|(j, t)| (t.as_str(), j)).collect(),
        )
    }
}

/// Skill and content similarity for every pair, row-major. Rows are
/// computed in parallel.
pub fn pair_similarities(profiles: &[Profile], tasks: &[TaskSpec]) -> Vec<(f64, f64)> {
    profiles
        .par_iter()
        .flat_map_iter(|p| {
            tasks.iter().map(move |t| {
                (
                    skill_sim(&p.skills, &t.required_skills),
                    content_sim(&p.content_vector, &t.content_vector),
                )
            })
        })
        .collect()
}

/// Skill similarity only, row-major.
pub fn pair_skill_similarities(profiles: &[Profile], tasks: &[TaskSpec]) -> Vec<f64> {
    profiles
        .par_iter()
        .flat_map_iter(|p| tasks.iter().map(move |t| skill_sim(&p.skills, &t.required_skills)))
        .collect()
}

/// Unsmoothed willingness for every pair, row-major.
pub fn raw_willingness_matrix(
    profiles: &[Profile],
    tasks: &[TaskSpec],
    histories: &BTreeMap<String, History>,
    params: &WillingnessParams,
) -> Vec<f64> {
    profiles
        .par_iter()
        .flat_map_iter(|p| {
            let h = histories.get(p.history_ref.as_deref().unwrap_or(&p.id));
            tasks.iter().map(move |t| willingness::estimate(p, t, h, params))
        })
        .collect()
}

/// Smooth a raw willingness matrix against `state`, updating it.
pub fn smooth_matrix(
    state: &mut WillingnessState,
    profiles: &[Profile],
    tasks: &[TaskSpec],
    raw: &[f64],
    params: &WillingnessParams,
) -> Vec<f64> {
    let m = tasks.len();
    raw.iter()
        .enumerate()
        .map(|(k, &w_hat)| state.update(&profiles[k / m].id, &tasks[k % m].id, w_hat, params))
        .collect()
}

/// Build the utility matrix; `willingness(i, j)` is called with indices into
/// `profiles` and `tasks`.
pub fn build_utility_matrix<W>(
    profiles: &[Profile],
    tasks: &[TaskSpec],
    willingness: W,
    params: &UtilityParams,
) -> Result<UtilityMatrix, AssignmentError>
where
    W: Fn(usize, usize) -> f64 + Sync,
{
    if profiles.is_empty() || tasks.is_empty() {
        return Err(AssignmentError::Dimension {
            volunteers: profiles.len(),
            tasks: tasks.len(),
        });
    }
    let m = tasks.len();
    let sims = pair_similarities(profiles, tasks);
    let w: Vec<f64> = (0..profiles.len() * m)
        .into_par_iter()
        .map(|k| willingness(k / m, k % m))
        .collect();
    UtilityMatrix::from_parts(
        profiles.iter().map(|p| p.id.clone()).collect(),
        tasks.iter().map(|t| t.id.clone()).collect(),
        &sims,
        &w,
        params,
    )
}

/// Assignment strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    #[serde(rename = "skill")]
    SkillOnly,
    Swati,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Random, Method::SkillOnly, Method::Swati];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::SkillOnly => "skill",
            Method::Swati => "swati",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = AssignmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Method::Random),
            "skill" | "skill-only" => Ok(Method::SkillOnly),
            "swati" => Ok(Method::Swati),
            other => Err(AssignmentError::InvalidParams(format!(
                "unknown method `{other}` (expected swati, skill or random)"
            ))),
        }
    }
}

/// Per-volunteer task limits; volunteers not listed get `default`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityMap {
    pub default: u32,
    pub overrides: BTreeMap<String, u32>,
}

impl Default for CapacityMap {
    fn default() -> Self {
        Self {
            default: 1,
            overrides: BTreeMap::new(),
        }
    }
}

impl CapacityMap {
    pub fn uniform(c: u32) -> Self {
        Self {
            default: c,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with(mut self, volunteer: impl Into<String>, c: u32) -> Self {
        self.overrides.insert(volunteer.into(), c);
        self
    }

    pub fn get(&self, volunteer: &str) -> u32 {
        self.overrides.get(volunteer).copied().unwrap_or(self.default)
    }

    pub fn validate(&self) -> Result<(), AssignmentError> {
        if self.default == 0 || self.overrides.values().any(|&c| c == 0) {
            return Err(AssignmentError::InvalidParams("capacities must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignedPair {
    pub volunteer_id: String,
    pub task_id: String,
    pub utility: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub pairs: Vec<AssignedPair>,
    pub epoch: u64,
}

impl Assignment {
    pub fn total_utility(&self) -> f64 {
        self.pairs.iter().map(|p| p.utility).sum()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(volunteer_id, task_id)` pairs in lexicographic order.
    pub fn pair_set(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<_> = self
            .pairs
            .iter()
            .map(|p| (p.volunteer_id.as_str(), p.task_id.as_str()))
            .collect();
        v.sort_unstable();
        v
    }
}

/// Serialized assignment line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub epoch: u64,
    pub volunteer_id: String,
    pub task_id: String,
    pub utility: f64,
    pub components: Components,
}

/// Attach component breakdowns to every pair. Pairs missing from the matrix
/// are skipped.
pub fn assignment_records(a: &Assignment, u: &UtilityMatrix) -> Vec<AssignmentRecord> {
    let (vi, ti) = u.index();
    a.pairs
        .iter()
        .filter_map(|p| {
            let i = *vi.get(p.volunteer_id.as_str())?;
            let j = *ti.get(p.task_id.as_str())?;
            Some(AssignmentRecord {
                epoch: a.epoch,
                volunteer_id: p.volunteer_id.clone(),
                task_id: p.task_id.clone(),
                utility: p.utility,
                components: u.components(i, j),
            })
        })
        .collect()
}

fn ranks(ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    let mut rank = vec![0; ids.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Greedy capacity-constrained selection over row-major `scores`, highest
/// first, ties by `(volunteer_id, task_id)` ascending. Returns accepted
/// `(row, column)` pairs in acceptance order.
pub fn greedy_select(
    volunteers: &[String],
    tasks: &[String],
    scores: &[f64],
    caps: &CapacityMap,
) -> Vec<(usize, usize)> {
    let (n, m) = (volunteers.len(), tasks.len());
    assert_eq!(scores.len(), n * m, "scores must be volunteers x tasks");
    let vr = ranks(volunteers);
    let tr = ranks(tasks);
    let mut order: Vec<u32> = (0..(n * m) as u32).collect();
    order.par_sort_unstable_by(|&a, &b| {
        let (a, b) = (a as usize, b as usize);
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| vr[a / m].cmp(&vr[b / m]))
            .then_with(|| tr[a % m].cmp(&tr[b % m]))
    });

    let mut remaining: Vec<u32> = volunteers.iter().map(|v| caps.get(v)).collect();
    let mut open_volunteers = remaining.iter().filter(|&&c| c > 0).count();
    let mut taken = vec![false; m];
    let mut out = Vec::with_capacity(m.min(n * m));
    for k in order {
        if out.len() == m || open_volunteers == 0 {
            break;
        }
        let (i, j) = (k as usize / m, k as usize % m);
        if taken[j] || remaining[i] == 0 {
            continue;
        }
        taken[j] = true;
        remaining[i] -= 1;
        if remaining[i] == 0 {
            open_volunteers -= 1;
        }
        out.push((i, j));
    }
    out
}

fn to_assignment(u: &UtilityMatrix, picks: &[(usize, usize)]) -> Assignment {
    Assignment {
        pairs: picks.iter().map(|&(i, j)| u.pair(i, j)).collect(),
        epoch: 0,
    }
}

pub fn assign_swati(u: &UtilityMatrix, caps: &CapacityMap) -> Assignment {
    to_assignment(u, &greedy_select(&u.volunteers, &u.tasks, &u.utility, caps))
}

/// Greedy on skill similarity alone; reported utilities are the full ones.
pub fn assign_skill_only(u: &UtilityMatrix, caps: &CapacityMap) -> Assignment {
    to_assignment(u, &greedy_select(&u.volunteers, &u.tasks, &u.skill_scores(), caps))
}

/// Skill-only selection straight from profiles, without building utilities.
pub fn skill_only_selection(
    profiles: &[Profile],
    tasks: &[TaskSpec],
    caps: &CapacityMap,
) -> Vec<(usize, usize)> {
    let vids: Vec<String> = profiles.iter().map(|p| p.id.clone()).collect();
    let tids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
    greedy_select(&vids, &tids, &pair_skill_similarities(profiles, tasks), caps)
}

/// Tasks in id order, each given to a uniformly drawn volunteer among those
/// with capacity left.
pub fn random_selection(
    volunteers: &[String],
    tasks: &[String],
    caps: &CapacityMap,
    seed: u64,
) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut task_order: Vec<usize> = (0..tasks.len()).collect();
    task_order.sort_by(|&a, &b| tasks[a].cmp(&tasks[b]));
    let mut available: Vec<usize> = (0..volunteers.len()).collect();
    available.sort_by(|&a, &b| volunteers[a].cmp(&volunteers[b]));
    let mut remaining: Vec<u32> = volunteers.iter().map(|v| caps.get(v)).collect();
    available.retain(|&i| remaining[i] > 0);

    let mut out = Vec::new();
    for j in task_order {
        if available.is_empty() {
            break;
        }
        let slot = rng.gen_range(0..available.len());
        let i = available[slot];
        remaining[i] -= 1;
        if remaining[i] == 0 {
            available.remove(slot);
        }
        out.push((i, j));
    }
    out
}

pub fn assign_random(u: &UtilityMatrix, caps: &CapacityMap, seed: u64) -> Assignment {
    to_assignment(u, &random_selection(&u.volunteers, &u.tasks, caps, seed))
}

struct Search<'a> {
    u: &'a UtilityMatrix,
    remaining: Vec<u32>,
    task_order: Vec<usize>,
    /// Best achievable from task position k onward, ignoring capacity.
    suffix_bound: Vec<f64>,
    current: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    best_total: f64,
}

impl Search<'_> {
    fn sorted_key(&self, pairs: &[(usize, usize)]) -> Vec<(String, String)> {
        let mut v: Vec<_> = pairs
            .iter()
            .map(|&(i, j)| (self.u.volunteers[i].clone(), self.u.tasks[j].clone()))
            .collect();
        v.sort_unstable();
        v
    }

    fn run(&mut self, pos: usize, total: f64) {
        if total + self.suffix_bound[pos] < self.best_total - TIE_EPS {
            return;
        }
        if pos == self.task_order.len() {
            let better = total > self.best_total + TIE_EPS
                || ((total - self.best_total).abs() <= TIE_EPS
                    && self.sorted_key(&self.current) < self.sorted_key(&self.best));
            if better {
                self.best_total = total;
                self.best = self.current.clone();
            }
            return;
        }
        let j = self.task_order[pos];
        for i in 0..self.u.n_volunteers() {
            if self.remaining[i] == 0 {
                continue;
            }
            self.remaining[i] -= 1;
            self.current.push((i, j));
            self.run(pos + 1, total + self.u.utility(i, j));
            self.current.pop();
            self.remaining[i] += 1;
        }
        self.run(pos + 1, total);
    }
}

/// Exhaustive maximum-total-utility assignment. Among optimal assignments
/// (within 1e-12) the one with the lexicographically smallest sorted pair
/// list wins.
pub fn assign_optimal_bruteforce(u: &UtilityMatrix, caps: &CapacityMap) -> Result<Assignment, AssignmentError> {
    let (n, m) = (u.n_volunteers(), u.n_tasks());
    if n > BRUTEFORCE_LIMIT || m > BRUTEFORCE_LIMIT {
        return Err(AssignmentError::InstanceTooLarge {
            volunteers: n,
            tasks: m,
        });
    }
    let mut task_order: Vec<usize> = (0..m).collect();
    task_order.sort_by(|&a, &b| u.tasks[a].cmp(&u.tasks[b]));
    let mut suffix_bound = vec![0.0; m + 1];
    for pos in (0..m).rev() {
        let j = task_order[pos];
        let col_max = (0..n).map(|i| u.utility(i, j)).fold(0.0, f64::max);
        suffix_bound[pos] = suffix_bound[pos + 1] + col_max;
    }
    let mut s = Search {
        u,
        remaining: u.volunteers.iter().map(|v| caps.get(v)).collect(),
        task_order,
        suffix_bound,
        current: Vec::new(),
        best: Vec::new(),
        best_total: 0.0,
    };
    s.run(0, 0.0);
    let mut best = s.best;
    best.sort_by(|a, b| {
        (&u.volunteers[a.0], &u.tasks[a.1]).cmp(&(&u.volunteers[b.0], &u.tasks[b.1]))
    });
    Ok(to_assignment(u, &best))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeasibilityViolation {
    #[error("task `{0}` assigned more than once")]
    DuplicateTask(String),
    #[error("volunteer `{volunteer}` holds {load} tasks, capacity {capacity}")]
    OverCapacity {
        volunteer: String,
        load: u32,
        capacity: u32,
    },
    #[error("pair ({0}, {1}) is not in the utility matrix")]
    UnknownPair(String, String),
    #[error("pair ({volunteer}, {task}) reports utility {reported}, matrix has {expected}")]
    UtilityMismatch {
        volunteer: String,
        task: String,
        reported: f64,
        expected: f64,
    },
}

/// Check task uniqueness and capacity bounds, and when `u` is given, that
/// every pair exists and carries its matrix utility.
pub fn validate_assignment(
    a: &Assignment,
    caps: &CapacityMap,
    u: Option<&UtilityMatrix>,
) -> Result<(), FeasibilityViolation> {
    let mut seen = HashSet::new();
    let mut load: HashMap<&str, u32> = HashMap::new();
    let index = u.map(|u| (u, u.index()));
    for p in &a.pairs {
        if !seen.insert(p.task_id.as_str()) {
            return Err(FeasibilityViolation::DuplicateTask(p.task_id.clone()));
        }
        let l = load.entry(p.volunteer_id.as_str()).or_default();
        *l += 1;
        let cap = caps.get(&p.volunteer_id);
        if *l > cap {
            return Err(FeasibilityViolation::OverCapacity {
                volunteer: p.volunteer_id.clone(),
                load: *l,
                capacity: cap,
            });
        }
        if let Some((u, (vi, ti))) = &index {
            let (Some(&i), Some(&j)) = (vi.get(p.volunteer_id.as_str()), ti.get(p.task_id.as_str())) else {
                return Err(FeasibilityViolation::UnknownPair(p.volunteer_id.clone(), p.task_id.clone()));
            };
            let expected = u.utility(i, j);
            if (expected - p.utility).abs() > 1e-12 {
                return Err(FeasibilityViolation::UtilityMismatch {
                    volunteer: p.volunteer_id.clone(),
                    task: p.task_id.clone(),
                    reported: p.utility,
                    expected,
                });
            }
        }
    }
    Ok(())
}

/// Everything one decision epoch consumes besides parameters and state.
#[derive(Debug, Clone, Copy)]
pub struct EpochInputs<'a> {
    pub profiles: &'a [Profile],
    pub tasks: &'a [TaskSpec],
    pub histories: &'a BTreeMap<String, History>,
    pub capacities: &'a CapacityMap,
}

#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub matrix: UtilityMatrix,
    pub assignment: Assignment,
}

/// Similarities, smoothed willingness, utilities, then greedy assignment.
/// `state` holds the post-epoch willingness on return.
pub fn run_epoch(
    inputs: EpochInputs<'_>,
    willingness_params: &WillingnessParams,
    utility_params: &UtilityParams,
    state: &mut WillingnessState,
    epoch: u64,
) -> Result<EpochOutcome, AssignmentError> {
    let (profiles, tasks) = (inputs.profiles, inputs.tasks);
    if profiles.is_empty() || tasks.is_empty() {
        return Err(AssignmentError::Dimension {
            volunteers: profiles.len(),
            tasks: tasks.len(),
        });
    }
    let sims = pair_similarities(profiles, tasks);
    let raw = raw_willingness_matrix(profiles, tasks, inputs.histories, willingness_params);
    let w = smooth_matrix(state, profiles, tasks, &raw, willingness_params);
    let matrix = UtilityMatrix::from_parts(
        profiles.iter().map(|p| p.id.clone()).collect(),
        tasks.iter().map(|t| t.id.clone()).collect(),
        &sims,
        &w,
        utility_params,
    )?;
    let mut assignment = assign_swati(&matrix, inputs.capacities);
    assignment.epoch = epoch;
    Ok(EpochOutcome { matrix, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn matrix(rows: &[&[f64]]) -> UtilityMatrix {
        let n = rows.len();
        let m = rows[0].len();
        UtilityMatrix::from_utilities(ids("v", n), ids("t", m), rows.concat()).unwrap()
    }

    fn pairs(a: &Assignment) -> Vec<(&str, &str)> {
        a.pairs
            .iter()
            .map(|p| (p.volunteer_id.as_str(), p.task_id.as_str()))
            .collect()
    }

    #[test]
    fn utility_forms() {
        let p = UtilityParams::default();
        let split = UtilityParams {
            form: UtilityForm::Split,
            ..p
        };
        assert_eq!(compute_utility(1.0, 1.0, 1.0, &p), 1.0);
        assert_eq!(compute_utility(1.0, 1.0, 1.0, &split), 1.0);
        assert_eq!(compute_utility(0.6, 0.4, 0.0, &p), 0.0);
        assert!((compute_utility(0.6, 0.4, 0.0, &split) - 0.3).abs() < 1e-12);
        assert!((compute_utility(0.6, 0.4, 0.5, &p) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn utility_params_validation() {
        assert!(UtilityParams::default().validate().is_ok());
        let bad = UtilityParams {
            alpha: 0.7,
            beta: 0.7,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn swati_examples() {
        let a = assign_swati(&matrix(&[&[0.9]]), &CapacityMap::default());
        assert_eq!(pairs(&a), [("v1", "t1")]);
        assert_eq!(a.pairs[0].utility, 0.9);

        let a = assign_swati(&matrix(&[&[0.9, 0.8]]), &CapacityMap::default());
        assert_eq!(pairs(&a), [("v1", "t1")]);

        let a = assign_swati(&matrix(&[&[0.5, 0.5], &[0.5, 0.5]]), &CapacityMap::default());
        assert_eq!(pairs(&a), [("v1", "t1"), ("v2", "t2")]);
    }

    #[test]
    fn ties_use_ids_not_positions() {
        let u = UtilityMatrix::from_utilities(
            vec!["vb".into(), "va".into()],
            vec!["t2".into(), "t1".into()],
            vec![0.5; 4],
        )
        .unwrap();
        let a = assign_swati(&u, &CapacityMap::default());
        assert_eq!(pairs(&a), [("va", "t1"), ("vb", "t2")]);
    }

    #[test]
    fn capacity_allows_multiple_tasks() {
        let u = matrix(&[&[0.9, 0.8, 0.7], &[0.1, 0.1, 0.1]]);
        let a = assign_swati(&u, &CapacityMap::default().with("v1", 2));
        assert_eq!(pairs(&a), [("v1", "t1"), ("v1", "t2"), ("v2", "t3")]);
        validate_assignment(&a, &CapacityMap::default().with("v1", 2), Some(&u)).unwrap();
    }

    #[test]
    fn skill_only_ignores_willingness() {
        let u = UtilityMatrix::from_parts(
            ids("v", 1),
            ids("t", 2),
            &[(1.0, 0.0), (0.5, 0.0)],
            &[0.1, 0.9],
            &UtilityParams::default(),
        )
        .unwrap();
        let caps = CapacityMap::default();
        let skill = assign_skill_only(&u, &caps);
        assert_eq!(pairs(&skill), [("v1", "t1")]);
        assert!((skill.pairs[0].utility - 0.05).abs() < 1e-12);
        let swati = assign_swati(&u, &caps);
        assert_eq!(pairs(&swati), [("v1", "t2")]);
    }

    #[test]
    fn skill_only_with_all_zero_skill_covers_tasks() {
        let u = UtilityMatrix::from_parts(
            ids("v", 2),
            ids("t", 3),
            &[(0.0, 0.3); 6],
            &[0.5; 6],
            &UtilityParams::default(),
        )
        .unwrap();
        let a = assign_skill_only(&u, &CapacityMap::default());
        assert_eq!(pairs(&a), [("v1", "t1"), ("v2", "t2")]);
    }

    #[test]
    fn random_examples() {
        let u = matrix(&[&[0.5, 0.5]]);
        assert_eq!(assign_random(&u, &CapacityMap::default(), 1).len(), 1);

        let u = matrix(&[&[0.1, 0.2, 0.3], &[0.3, 0.2, 0.1], &[0.5, 0.5, 0.5]]);
        let a = assign_random(&u, &CapacityMap::default(), 42);
        assert_eq!(a, assign_random(&u, &CapacityMap::default(), 42));
        assert_eq!(a.len(), 3);
        validate_assignment(&a, &CapacityMap::default(), Some(&u)).unwrap();
    }

    #[test]
    fn bruteforce_beats_greedy_on_crossing_instance() {
        let u = matrix(&[&[0.9, 0.8], &[0.85, 0.1]]);
        let caps = CapacityMap::default();
        let opt = assign_optimal_bruteforce(&u, &caps).unwrap();
        assert_eq!(pairs(&opt), [("v1", "t2"), ("v2", "t1")]);
        assert!((opt.total_utility() - 1.65).abs() < 1e-12);
        let greedy = assign_swati(&u, &caps);
        assert!((greedy.total_utility() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bruteforce_small_cases() {
        let caps = CapacityMap::default();
        assert_eq!(pairs(&assign_optimal_bruteforce(&matrix(&[&[0.3]]), &caps).unwrap()), [("v1", "t1")]);
        assert!(assign_optimal_bruteforce(&matrix(&[&[0.0]]), &caps).unwrap().is_empty());
        let tall = UtilityMatrix::from_utilities(ids("v", 9), ids("t", 1), vec![0.5; 9]).unwrap();
        assert!(matches!(
            assign_optimal_bruteforce(&tall, &caps),
            Err(AssignmentError::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn validator_catches_violations() {
        let caps = CapacityMap::default();
        let p = |v: &str, t: &str| AssignedPair {
            volunteer_id: v.into(),
            task_id: t.into(),
            utility: 0.5,
        };
        let dup = Assignment {
            pairs: vec![p("v1", "t1"), p("v2", "t1")],
            epoch: 0,
        };
        assert!(matches!(validate_assignment(&dup, &caps, None), Err(FeasibilityViolation::DuplicateTask(_))));
        let over = Assignment {
            pairs: vec![p("v1", "t1"), p("v1", "t2")],
            epoch: 0,
        };
        assert!(matches!(validate_assignment(&over, &caps, None), Err(FeasibilityViolation::OverCapacity { .. })));
        let u = matrix(&[&[0.4]]);
        let wrong = Assignment {
            pairs: vec![p("v1", "t1")],
            epoch: 0,
        };
        assert!(matches!(
            validate_assignment(&wrong, &caps, Some(&u)),
            Err(FeasibilityViolation::UtilityMismatch { .. })
        ));
    }

    #[test]
    fn empty_inputs_are_dimension_errors() {
        assert!(matches!(
            UtilityMatrix::from_utilities(vec![], ids("t", 1), vec![]),
            Err(AssignmentError::Dimension { .. })
        ));
        assert!(matches!(
            build_utility_matrix(&[], &[], |_, _| 1.0, &UtilityParams::default()),
            Err(AssignmentError::Dimension { .. })
        ));
    }
}
