//! Domain types shared by every stage of the reconstruction.
//!
//! Discrete data (symbols, cell states, grey levels) is embedded as
//! integer-valued real coordinates, so a single [`Point`] type serves the
//! symbolic, cellular-automaton and image pipelines. Equality of points is
//! exact coordinate equality.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a symbol in a finite alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub u32);

/// A fixed-length vector of finite real coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Point::new(vec![value])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn key(&self) -> PointKey {
        PointKey::of(&self.0)
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Hashable exact-equality key for a coordinate slice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointKey(Box<[u64]>);

impl PointKey {
    pub fn of(coords: &[f64]) -> Self {
        // -0.0 and 0.0 compare equal, so they must hash equal.
        PointKey(
            coords
                .iter()
                .map(|&c| if c == 0.0 { 0u64 } else { c.to_bits() })
                .collect(),
        )
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ordered pairs `(x_i, z_i)` with optional transition symbols.
///
/// When symbols are present, `symbols[i]` is the symbol emitted on the
/// transition `x_i -> x_{i+1}`, and index order is time order.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    x_dim: usize,
    z_dim: usize,
    xs: Vec<f64>,
    zs: Vec<f64>,
    symbols: Option<Vec<Symbol>>,
    alphabet_size: usize,
    sequential: bool,
}

impl ObservationSet {
    pub fn new(x_dim: usize, z_dim: usize) -> Result<Self> {
        if x_dim == 0 || z_dim == 0 {
            return Err(Error::InvalidParams(
                "observation dimensions must be positive".into(),
            ));
        }
        Ok(ObservationSet {
            x_dim,
            z_dim,
            xs: Vec::new(),
            zs: Vec::new(),
            symbols: None,
            alphabet_size: 0,
            sequential: false,
        })
    }

    pub fn with_capacity(x_dim: usize, z_dim: usize, n: usize) -> Result<Self> {
        let mut obs = ObservationSet::new(x_dim, z_dim)?;
        obs.xs.reserve(n * x_dim);
        obs.zs.reserve(n * z_dim);
        Ok(obs)
    }

    /// Builds a set from explicit pairs.
    pub fn from_pairs<X: AsRef<[f64]>, Z: AsRef<[f64]>>(pairs: &[(X, Z)]) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::InvalidParams("at least one observation is required".into()))?;
        let mut obs = ObservationSet::with_capacity(
            first.0.as_ref().len(),
            first.1.as_ref().len(),
            pairs.len(),
        )?;
        for (x, z) in pairs {
            obs.push(x.as_ref(), z.as_ref())?;
        }
        Ok(obs)
    }

    pub fn push(&mut self, x: &[f64], z: &[f64]) -> Result<()> {
        check_dim(self.x_dim, x.len())?;
        check_dim(self.z_dim, z.len())?;
        if x.iter().chain(z).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.xs.extend_from_slice(x);
        self.zs.extend_from_slice(z);
        Ok(())
    }

    /// Marks the set as time-ordered without transition symbols.
    pub fn set_sequential(&mut self, sequential: bool) {
        self.sequential = sequential;
        if !sequential {
            self.symbols = None;
        }
    }

    /// Attaches transition symbols; implies sequential order.
    pub fn set_symbols(&mut self, symbols: Vec<Symbol>, alphabet_size: usize) -> Result<()> {
        if symbols.len() + 1 != self.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} transition symbols, got {}",
                self.len().saturating_sub(1),
                symbols.len()
            )));
        }
        if let Some(bad) = symbols.iter().find(|s| s.0 as usize >= alphabet_size) {
            return Err(Error::InvalidParams(format!(
                "symbol {} outside alphabet of size {alphabet_size}",
                bad.0
            )));
        }
        self.symbols = Some(symbols);
        self.alphabet_size = alphabet_size;
        self.sequential = true;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.xs.len() / self.x_dim
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.x_dim..(i + 1) * self.x_dim]
    }

    pub fn z(&self, i: usize) -> &[f64] {
        &self.zs[i * self.z_dim..(i + 1) * self.z_dim]
    }

    pub fn symbols(&self) -> Option<&[Symbol]> {
        self.symbols.as_deref()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn is_sequential(&self) -> bool {
        self.sequential
    }

    /// Distinct observed outcomes, in order of first appearance.
    pub fn distinct_outcomes(&self) -> SampleSet {
        let mut set = SampleSet::empty(self.z_dim);
        for i in 0..self.len() {
            set.insert(self.z(i));
        }
        set
    }
}

/// Ordered, duplicate-free set of sample points in Z.
#[derive(Debug, Clone)]
pub struct SampleSet {
    dim: usize,
    coords: Vec<f64>,
    index: HashMap<PointKey, usize>,
}

impl PartialEq for SampleSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

impl SampleSet {
    fn empty(dim: usize) -> Self {
        SampleSet {
            dim,
            coords: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a sample set; duplicates are rejected.
    pub fn new<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("sample dimension must be positive".into()));
        }
        let mut set = SampleSet::empty(dim);
        for p in points {
            let p = p.as_ref();
            check_dim(dim, p.len())?;
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite);
            }
            if !set.insert(p) {
                return Err(Error::InvalidParams("sample points must be distinct".into()));
            }
        }
        if set.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        Ok(set)
    }

    /// One-dimensional samples `0, 1, ..., n-1`.
    pub fn integer_range(n: usize) -> Result<Self> {
        let pts: Vec<[f64; 1]> = (0..n).map(|v| [v as f64]).collect();
        SampleSet::new(1, &pts)
    }

    /// Uniform one-dimensional grid of `n >= 2` points over `[lo, hi]`.
    pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidParams("grid needs n >= 2 and hi > lo".into()));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let pts: Vec<[f64; 1]> = (0..n)
            .map(|k| [if k + 1 == n { hi } else { lo + step * k as f64 }])
            .collect();
        SampleSet::new(1, &pts)
    }

    fn insert(&mut self, p: &[f64]) -> bool {
        let key = PointKey::of(p);
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.len());
        self.coords.extend_from_slice(p);
        true
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, p: &[f64]) -> Option<usize> {
        self.index.get(&PointKey::of(p)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }
}

/// Probability weights over an ordered sample set.
///
/// Stored sparsely: only samples with positive weight are kept, sorted by
/// sample index.
#[derive(Debug, Clone)]
pub struct Distribution {
    samples: Arc<SampleSet>,
    support: Vec<u32>,
    weights: Vec<f64>,
    normalized: bool,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.same_samples(other)
            && self.support == other.support
            && self.weights == other.weights
            && self.normalized == other.normalized
    }
}

impl Distribution {
    /// Builds a distribution from one weight per sample.
    pub fn from_dense(samples: Arc<SampleSet>, weights: &[f64], normalize: bool) -> Result<Self> {
        if weights.len() != samples.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                got: weights.len(),
            });
        }
        let entries = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (i as u32, w))
            .collect::<Vec<_>>();
        Distribution::from_sparse(samples, entries, normalize)
    }

    /// Builds a distribution from `(sample index, weight)` entries.
    /// Entries for the same index are summed.
    pub fn from_sparse(
        samples: Arc<SampleSet>,
        mut entries: Vec<(u32, f64)>,
        normalize: bool,
    ) -> Result<Self> {
        if entries
            .iter()
            .any(|&(_, w)| !(w.is_finite() && w >= 0.0))
        {
            return Err(Error::InvalidParams(
                "weights must be finite and non-negative".into(),
            ));
        }
        if let Some(&(i, _)) = entries.iter().find(|&&(i, _)| i as usize >= samples.len()) {
            return Err(Error::IndexOutOfRange {
                index: i as usize,
                len: samples.len(),
            });
        }
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => merged.push((i, w)),
            }
        }
        let (support, weights): (Vec<u32>, Vec<f64>) =
            merged.into_iter().filter(|&(_, w)| w > 0.0).unzip();
        let mut dist = Distribution {
            samples,
            support,
            weights,
            normalized: false,
        };
        if normalize {
            dist.normalize()?;
        }
        Ok(dist)
    }

    fn normalize(&mut self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        for w in &mut self.weights {
            *w /= total;
        }
        self.normalized = true;
        Ok(())
    }

    /// Returns a normalized copy.
    pub fn normalized(&self) -> Result<Self> {
        let mut d = self.clone();
        d.normalize()?;
        Ok(d)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn samples(&self) -> &Arc<SampleSet> {
        &self.samples
    }

    pub fn same_samples(&self, other: &Distribution) -> bool {
        Arc::ptr_eq(&self.samples, &other.samples) || *self.samples == *other.samples
    }

    /// `(sample index, weight)` pairs with positive weight, by sample index.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(&i, &w)| (i as usize, w))
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn weight(&self, sample: usize) -> f64 {
        match self.support.binary_search(&(sample as u32)) {
            Ok(k) => self.weights[k],
            Err(_) => 0.0,
        }
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.samples.len()];
        for (i, w) in self.entries() {
            out[i] = w;
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Scales every weight; used to check scale invariance of normalization.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParams("scale factor must be positive".into()));
        }
        Ok(Distribution {
            samples: Arc::clone(&self.samples),
            support: self.support.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
            normalized: false,
        })
    }

    /// Exact-equality hash key over support and weight bits.
    pub fn exact_key(&self) -> Vec<u64> {
        let mut key = Vec::with_capacity(self.support.len() * 2);
        for (i, w) in self.entries() {
            key.push(i as u64);
            key.push(w.to_bits());
        }
        key
    }
}

/// Which equivalence relation a partition was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionKind {
    Causal,
    IsoUtility,
    IsoPrediction,
    Decisional,
}

impl PartitionKind {
    pub fn name(self) -> &'static str {
        match self {
            PartitionKind::Causal => "causal",
            PartitionKind::IsoUtility => "iso-utility",
            PartitionKind::IsoPrediction => "iso-prediction",
            PartitionKind::Decisional => "decisional",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateInfo {
    pub count: usize,
    /// Empirical probability mass, `count / N`.
    pub mass: f64,
}

/// Total assignment of observation indices to dense state ids.
///
/// State ids are ordered by first appearance in observation order.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePartition {
    kind: PartitionKind,
    assignment: Vec<usize>,
    states: Vec<StateInfo>,
}

impl StatePartition {
    /// Builds a partition from arbitrary labels, relabelling them densely in
    /// order of first appearance.
    pub fn from_labels<L: Eq + std::hash::Hash + Clone>(kind: PartitionKind, labels: &[L]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParams("partition needs at least one observation".into()));
        }
        let mut ids: HashMap<L, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(labels.len());
        let mut counts: Vec<usize> = Vec::new();
        for l in labels {
            let next = ids.len();
            let id = *ids.entry(l.clone()).or_insert(next);
            if id == counts.len() {
                counts.push(0);
            }
            counts[id] += 1;
            assignment.push(id);
        }
        let n = labels.len() as f64;
        let states = counts
            .into_iter()
            .map(|count| StateInfo {
                count,
                mass: count as f64 / n,
            })
            .collect();
        Ok(StatePartition {
            kind,
            assignment,
            states,
        })
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn states(&self) -> &[StateInfo] {
        &self.states
    }

    pub fn mass(&self, state: usize) -> f64 {
        self.states[state].mass
    }

    /// Member indices per state.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for (i, &s) in self.assignment.iter().enumerate() {
            out[s].push(i);
        }
        out
    }

    /// True when every state of `self` lies inside one state of `coarser`.
    pub fn refines(&self, coarser: &StatePartition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.num_states()];
        for (i, &s) in self.assignment.iter().enumerate() {
            let c = coarser.assignment[i];
            if image[s] == usize::MAX {
                image[s] = c;
            } else if image[s] != c {
                return false;
            }
        }
        true
    }

    /// Partition as a canonical family of sorted index sets, for comparing
    /// partitions irrespective of state ids.
    pub fn as_set_family(&self) -> Vec<Vec<usize>> {
        let mut family = self.members();
        family.sort();
        family
    }
}
