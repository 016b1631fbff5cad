//! Causal state estimation: clustering conditionals, averaging them per
//! state, and restoring symbol determinism of the reconstructed machine.
//!
//! Clustering works on distinct configurations: observations with identical
//! `x` have identical conditionals and always share a state.

use std::collections::{BTreeMap, HashMap};

use crate::cluster::{connected_components, group_by_key, relabel_by_first_appearance, UnionFind};
use crate::compare::{counts_match, matches, MatchSpec, Metric};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::types::{Distribution, ObservationSet, PartitionKind, PointKey, StatePartition, Symbol};

pub const DEFAULT_THETA: f64 = 0.95;
pub const DEFAULT_MAX_ITER: usize = 64;

/// Distinct configurations of an observation set, in order of first
/// appearance.
#[derive(Debug, Clone)]
pub struct ConfigIndex {
    config_of: Vec<u32>,
    representative: Vec<usize>,
    counts: Vec<usize>,
}

impl ConfigIndex {
    pub fn build(obs: &ObservationSet) -> Self {
        let mut ids: HashMap<PointKey, u32> = HashMap::new();
        let mut index = ConfigIndex {
            config_of: Vec::with_capacity(obs.len()),
            representative: Vec::new(),
            counts: Vec::new(),
        };
        for i in 0..obs.len() {
            let next = index.representative.len() as u32;
            let id = *ids.entry(PointKey::of(obs.x(i))).or_insert(next);
            if id == next {
                index.representative.push(i);
                index.counts.push(0);
            }
            index.counts[id as usize] += 1;
            index.config_of.push(id);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.representative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representative.is_empty()
    }

    pub fn config_of(&self, i: usize) -> usize {
        self.config_of[i] as usize
    }

    /// First observation index holding configuration `c`.
    pub fn representative(&self, c: usize) -> usize {
        self.representative[c]
    }

    /// Number of observations holding configuration `c`.
    pub fn count(&self, c: usize) -> usize {
        self.counts[c]
    }
}

/// Outcome of the determinism-restoring loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminismReport {
    pub iterations: usize,
    pub converged: bool,
    pub splits: usize,
    pub merges: usize,
}

/// Causal state estimates with their averaged conditionals.
#[derive(Debug, Clone)]
pub struct CausalStateSet {
    partition: StatePartition,
    configs: ConfigIndex,
    config_state: Vec<usize>,
    conditionals: Vec<Distribution>,
    counts: Option<Vec<Vec<(u32, u64)>>>,
    state_distributions: Vec<Distribution>,
    determinism: Option<DeterminismReport>,
}

impl CausalStateSet {
    pub fn partition(&self) -> &StatePartition {
        &self.partition
    }

    pub fn num_states(&self) -> usize {
        self.partition.num_states()
    }

    pub fn configs(&self) -> &ConfigIndex {
        &self.configs
    }

    /// State of distinct configuration `c`.
    pub fn config_state(&self, c: usize) -> usize {
        self.config_state[c]
    }

    /// Conditional `p(Z|x)` of distinct configuration `c`.
    pub fn conditional(&self, c: usize) -> &Distribution {
        &self.conditionals[c]
    }

    /// Averaged representative `p(Z|state)` per state.
    pub fn state_distributions(&self) -> &[Distribution] {
        &self.state_distributions
    }

    pub fn determinism(&self) -> Option<&DeterminismReport> {
        self.determinism.as_ref()
    }

    /// Builds a state set from an explicit labelling of observations, for
    /// fixtures and externally supplied partitions. Observations sharing a
    /// configuration must share a label.
    pub fn from_labels<L: Eq + std::hash::Hash + Clone>(
        obs: &ObservationSet,
        model: &DensityModel,
        labels: &[L],
    ) -> Result<Self> {
        if labels.len() != obs.len() {
            return Err(Error::IndexSetMismatch);
        }
        let configs = ConfigIndex::build(obs);
        let dense = group_by_key(labels.iter().cloned());
        let mut config_label = vec![usize::MAX; configs.len()];
        for (i, &l) in dense.iter().enumerate() {
            let c = configs.config_of(i);
            if config_label[c] == usize::MAX {
                config_label[c] = l;
            } else if config_label[c] != l {
                return Err(Error::InvalidParams(
                    "observations with identical configurations must share a state".into(),
                ));
            }
        }
        let (conditionals, counts) = estimate(obs, &configs, model, false)?;
        assemble(configs, &config_label, conditionals, counts, None)
    }
}

fn estimate(
    obs: &ObservationSet,
    configs: &ConfigIndex,
    model: &DensityModel,
    need_counts: bool,
) -> Result<(Vec<Distribution>, Option<Vec<Vec<(u32, u64)>>>)> {
    let reps: Vec<&[f64]> = (0..configs.len()).map(|c| obs.x(configs.representative(c))).collect();
    let conditionals = model.conditionals(&reps)?;
    let counts = reps
        .iter()
        .map(|x| model.counts(x).map(<[_]>::to_vec))
        .collect::<Option<Vec<_>>>();
    if need_counts && counts.is_none() {
        return Err(Error::MissingCounts);
    }
    Ok((conditionals, counts))
}

fn assemble(
    configs: ConfigIndex,
    config_label: &[usize],
    conditionals: Vec<Distribution>,
    counts: Option<Vec<Vec<(u32, u64)>>>,
    determinism: Option<DeterminismReport>,
) -> Result<CausalStateSet> {
    let obs_labels: Vec<usize> = configs.config_of.iter().map(|&c| config_label[c as usize]).collect();
    let partition = StatePartition::from_labels(PartitionKind::Causal, &obs_labels)?;
    let mut config_state = vec![0; configs.len()];
    for c in 0..configs.len() {
        config_state[c] = partition.state_of(configs.representative(c));
    }
    let mut set = CausalStateSet {
        partition,
        configs,
        config_state,
        conditionals,
        counts,
        state_distributions: Vec::new(),
        determinism,
    };
    set.state_distributions = average_distributions(&set)?;
    Ok(set)
}

/// Clusters observations into causal states: two configurations share a
/// state iff they are linked by a chain of pairwise matches.
pub fn cluster_causal(obs: &ObservationSet, model: &DensityModel, spec: &MatchSpec) -> Result<CausalStateSet> {
    if obs.is_empty() {
        return Err(Error::InvalidParams("at least one observation is required".into()));
    }
    let configs = ConfigIndex::build(obs);
    let (conditionals, counts) = estimate(obs, &configs, model, spec.needs_counts())?;
    let labels = match spec.metric() {
        Metric::Exact => group_by_key(conditionals.iter().map(Distribution::exact_key)),
        Metric::ChiSquare => {
            let counts = counts.as_ref().ok_or(Error::MissingCounts)?;
            let alpha = spec.threshold();
            connected_components(configs.len(), |i, j| counts_match(&counts[i], &counts[j], alpha))
        }
        _ => connected_components(configs.len(), |i, j| {
            // Same sample set by construction, so this cannot fail.
            matches(&conditionals[i], &conditionals[j], spec, None).unwrap_or(false)
        }),
    };
    assemble(configs, &labels, conditionals, counts, None)
}

/// Representative conditional per state: the mean of the member
/// observations' conditionals, renormalized.
pub fn average_distributions(states: &CausalStateSet) -> Result<Vec<Distribution>> {
    let k = states.num_states();
    let mut entries: Vec<Vec<(u32, f64)>> = vec![Vec::new(); k];
    for c in 0..states.configs.len() {
        let weight = states.configs.count(c) as f64;
        let bucket = &mut entries[states.config_state[c]];
        bucket.extend(states.conditionals[c].entries().map(|(s, w)| (s as u32, weight * w)));
    }
    let samples = states.conditionals[0].samples();
    entries
        .into_iter()
        .map(|e| Distribution::from_sparse(std::sync::Arc::clone(samples), e, true))
        .collect()
}

/// Distinct `(source configuration, symbol, target configuration)`
/// transitions with their multiplicities.
fn config_transitions(obs: &ObservationSet, configs: &ConfigIndex) -> Result<Vec<(usize, Symbol, usize, u64)>> {
    let symbols = obs.symbols().ok_or(Error::MissingSymbols)?;
    let mut agg: BTreeMap<(usize, Symbol, usize), u64> = BTreeMap::new();
    for (i, &a) in symbols.iter().enumerate() {
        *agg.entry((configs.config_of(i), a, configs.config_of(i + 1))).or_default() += 1;
    }
    Ok(agg.into_iter().map(|((c, a, w), n)| (c, a, w, n)).collect())
}

/// Target state receiving more than `theta` of the counts, or all of them.
pub(crate) fn dominant(targets: &BTreeMap<usize, u64>, theta: f64) -> Option<usize> {
    let total: u64 = targets.values().sum();
    targets
        .iter()
        .find(|&(_, &n)| n == total || n as f64 > theta * total as f64)
        .map(|(&t, _)| t)
}

/// Merge step: successors of the same exact configuration under the same
/// symbol are put in one state, unless one target already dominates.
fn merge_step(transitions: &[(usize, Symbol, usize, u64)], label: &mut [usize], theta: f64) -> usize {
    let k = label.iter().max().map_or(0, |m| m + 1);
    let mut uf = UnionFind::new(k);
    let mut merges = 0;
    let mut start = 0;
    while start < transitions.len() {
        let (c, a) = (transitions[start].0, transitions[start].1);
        let end = start + transitions[start..].iter().take_while(|t| t.0 == c && t.1 == a).count();
        let mut targets: BTreeMap<usize, u64> = BTreeMap::new();
        for t in &transitions[start..end] {
            *targets.entry(label[t.2]).or_default() += t.3;
        }
        if targets.len() > 1 && dominant(&targets, theta).is_none() {
            let mut it = targets.keys();
            let first = *it.next().unwrap();
            for &other in it {
                if uf.union(first, other) {
                    merges += 1;
                }
            }
        }
        start = end;
    }
    if merges > 0 {
        let roots: Vec<usize> = label.iter().map(|&l| uf.find(l)).collect();
        label.copy_from_slice(&relabel_by_first_appearance(&roots));
    }
    merges
}

/// Split step: a state whose transitions on some symbol have no dominant
/// target is split by each member's own target.
fn split_step(
    transitions: &[(usize, Symbol, usize, u64)],
    configs: &ConfigIndex,
    label: &mut [usize],
    theta: f64,
) -> usize {
    let k = label.iter().max().map_or(0, |m| m + 1);
    // (state, symbol) -> target state -> count
    let mut by_state: BTreeMap<(usize, Symbol), BTreeMap<usize, u64>> = BTreeMap::new();
    // (config, symbol) -> target state -> count
    let mut by_config: BTreeMap<(usize, Symbol), BTreeMap<usize, u64>> = BTreeMap::new();
    for &(c, a, w, n) in transitions {
        *by_state.entry((label[c], a)).or_default().entry(label[w]).or_default() += n;
        *by_config.entry((c, a)).or_default().entry(label[w]).or_default() += n;
    }
    let mut offending: Vec<Option<Symbol>> = vec![None; k];
    for (&(s, a), targets) in &by_state {
        if offending[s].is_none() && dominant(targets, theta).is_none() {
            offending[s] = Some(a);
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (c, &l) in label.iter().enumerate() {
        members[l].push(c);
    }
    let mut next_label = k;
    let mut splits = 0;
    for s in 0..k {
        let Some(a) = offending[s] else { continue };
        let target_of = |c: usize| {
            by_config.get(&(c, a)).map(|t| {
                // Majority target; ties go to the smaller state id.
                t.iter().max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0))).map(|(&t, _)| t).unwrap()
            })
        };
        let mut parts: BTreeMap<usize, (usize, Vec<usize>)> = BTreeMap::new();
        let mut homeless = Vec::new();
        for &c in &members[s] {
            match target_of(c) {
                Some(t) => {
                    let part = parts.entry(t).or_default();
                    part.0 += configs.count(c);
                    part.1.push(c);
                }
                None => homeless.push(c),
            }
        }
        if parts.len() < 2 {
            continue;
        }
        let largest = *parts
            .iter()
            .max_by(|x, y| x.1 .0.cmp(&y.1 .0).then(y.0.cmp(x.0)))
            .map(|(t, _)| t)
            .unwrap();
        parts.get_mut(&largest).unwrap().1.extend(homeless);
        // The largest part keeps the old label.
        for (t, (_, cs)) in parts {
            if t == largest {
                continue;
            }
            for c in cs {
                label[c] = next_label;
            }
            next_label += 1;
            splits += 1;
        }
    }
    if splits > 0 {
        let relabelled = relabel_by_first_appearance(label);
        label.copy_from_slice(&relabelled);
    }
    splits
}

/// Restores symbol determinism of the causal states.
///
/// Successors of identical configurations under the same symbol are merged
/// first; then split and merge steps alternate until a fixpoint or
/// `max_iter` passes. A `(state, symbol)` pair is deterministic when one
/// target state receives more than `theta` of its transitions; the remaining
/// transitions are treated as spurious and left alone.
pub fn enforce_determinism(
    states: &CausalStateSet,
    obs: &ObservationSet,
    theta: f64,
    max_iter: usize,
) -> Result<CausalStateSet> {
    if !(theta > 0.5 && theta <= 1.0) {
        return Err(Error::InvalidParams(format!("theta must lie in (0.5, 1], got {theta}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParams("max_iter must be at least 1".into()));
    }
    if obs.len() != states.partition.len() {
        return Err(Error::IndexSetMismatch);
    }
    let transitions = config_transitions(obs, &states.configs)?;
    // Config labels, dense.
    let mut label = relabel_by_first_appearance(&states.config_state);
    let mut report = DeterminismReport {
        iterations: 0,
        converged: false,
        splits: 0,
        merges: merge_step(&transitions, &mut label, theta),
    };
    while report.iterations < max_iter {
        report.iterations += 1;
        let splits = split_step(&transitions, &states.configs, &mut label, theta);
        let merges = merge_step(&transitions, &mut label, theta);
        report.splits += splits;
        report.merges += merges;
        if splits == 0 && merges == 0 {
            report.converged = true;
            break;
        }
    }
    assemble(
        states.configs.clone(),
        &label,
        states.conditionals.clone(),
        states.counts.clone(),
        Some(report),
    )
}
