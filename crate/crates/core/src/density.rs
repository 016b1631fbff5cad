//! Conditional distribution estimators `p(Z|x)`.
//!
//! Two estimators are provided. The discrete one counts `(x, z)` pairs. The
//! kernel one sums a joint-space kernel `K(a, b) = exp(-||a - b||^2 / h)`
//! (so `K(a, a) = 1`) over all observations and normalizes over the sample
//! set. Kernel contributions below `cutoff` are dropped through a grid index,
//! so the only approximation is the stated cutoff.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{check_dim, squared_distance, Distribution, ObservationSet, PointKey, SampleSet};

/// Default kernel value below which contributions are dropped.
pub const DEFAULT_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    Discrete,
    Kernel,
}

#[derive(Debug, Clone)]
pub struct DensityModel {
    x_dim: usize,
    samples: Arc<SampleSet>,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Discrete(HashMap<PointKey, Vec<(u32, u64)>>),
    Kernel(KernelModel),
}

#[derive(Debug, Clone)]
struct KernelModel {
    bandwidth: f64,
    cutoff: f64,
    /// Squared joint-space radius beyond which the kernel is below cutoff.
    radius2: f64,
    joint: JointPoints,
    shape: KernelShape,
}

#[derive(Debug, Clone)]
enum KernelShape {
    /// Delta kernel: exact joint-point equality only.
    ExactMatch(HashMap<PointKey, Vec<(u32, u64)>>),
    Gaussian {
        index: GridIndex,
        /// Per distinct outcome: `(sample, squared distance, kernel)` within radius.
        outcome_rows: Vec<Vec<(u32, f64, f64)>>,
        outcome_of: Vec<u32>,
    },
}

/// Distinct joint points with multiplicities, in order of first appearance.
#[derive(Debug, Clone)]
struct JointPoints {
    x_dim: usize,
    z_dim: usize,
    xs: Vec<f64>,
    zs: Vec<f64>,
    counts: Vec<u64>,
}

impl JointPoints {
    fn from_observations(obs: &ObservationSet) -> Self {
        let mut seen: HashMap<PointKey, usize> = HashMap::new();
        let mut jp = JointPoints {
            x_dim: obs.x_dim(),
            z_dim: obs.z_dim(),
            xs: Vec::new(),
            zs: Vec::new(),
            counts: Vec::new(),
        };
        let mut joint = Vec::with_capacity(obs.x_dim() + obs.z_dim());
        for i in 0..obs.len() {
            joint.clear();
            joint.extend_from_slice(obs.x(i));
            joint.extend_from_slice(obs.z(i));
            let next = jp.counts.len();
            let id = *seen.entry(PointKey::of(&joint)).or_insert(next);
            if id == next {
                jp.xs.extend_from_slice(obs.x(i));
                jp.zs.extend_from_slice(obs.z(i));
                jp.counts.push(0);
            }
            jp.counts[id] += 1;
        }
        jp
    }

    fn len(&self) -> usize {
        self.counts.len()
    }

    fn x(&self, j: usize) -> &[f64] {
        &self.xs[j * self.x_dim..(j + 1) * self.x_dim]
    }

    fn z(&self, j: usize) -> &[f64] {
        &self.zs[j * self.z_dim..(j + 1) * self.z_dim]
    }
}

/// Uniform grid over (a projection of) configuration space.
///
/// Only the leading few coordinates with the widest spread are gridded, so the
/// number of neighbor cells stays bounded in high dimension; candidates are
/// then checked against the exact radius, so the query is exact.
#[derive(Debug, Clone)]
struct GridIndex {
    dims: Vec<usize>,
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<u32>>,
    all: Vec<u32>,
}

const MAX_GRID_DIMS: usize = 3;

impl GridIndex {
    fn build(points: &JointPoints, radius: f64) -> Self {
        let n = points.len();
        let all: Vec<u32> = (0..n as u32).collect();
        if !radius.is_finite() || radius <= 0.0 {
            return GridIndex {
                dims: Vec::new(),
                cell: f64::INFINITY,
                cells: HashMap::new(),
                all,
            };
        }
        let mut spreads: Vec<(usize, f64)> = (0..points.x_dim)
            .map(|d| {
                let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
                    let v = points.x(j)[d];
                    (lo.min(v), hi.max(v))
                });
                (d, hi - lo)
            })
            .filter(|&(_, s)| s > radius)
            .collect();
        spreads.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let dims: Vec<usize> = spreads.into_iter().take(MAX_GRID_DIMS).map(|(d, _)| d).collect();
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        if !dims.is_empty() {
            for j in 0..n {
                let key = dims.iter().map(|&d| (points.x(j)[d] / radius).floor() as i64).collect();
                cells.entry(key).or_default().push(j as u32);
            }
        }
        GridIndex {
            dims,
            cell: radius,
            cells,
            all,
        }
    }

    /// Candidate point ids, sorted ascending.
    fn candidates(&self, x: &[f64]) -> std::borrow::Cow<'_, [u32]> {
        if self.dims.is_empty() {
            return std::borrow::Cow::Borrowed(&self.all);
        }
        let base: Vec<i64> = self.dims.iter().map(|&d| (x[d] / self.cell).floor() as i64).collect();
        let k = self.dims.len();
        let mut out = Vec::new();
        let mut key = vec![0i64; k];
        for code in 0..3usize.pow(k as u32) {
            let mut c = code;
            for (slot, b) in key.iter_mut().zip(&base) {
                *slot = b + (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(ids) = self.cells.get(&key) {
                out.extend_from_slice(ids);
            }
        }
        out.sort_unstable();
        std::borrow::Cow::Owned(out)
    }
}

fn count_table(obs: &ObservationSet, samples: &SampleSet) -> Result<HashMap<PointKey, Vec<(u32, u64)>>> {
    let mut table: HashMap<PointKey, Vec<(u32, u64)>> = HashMap::new();
    for i in 0..obs.len() {
        let s = samples.position(obs.z(i)).ok_or_else(|| {
            Error::InvalidParams("sample set does not contain every observed outcome".into())
        })? as u32;
        let row = table.entry(PointKey::of(obs.x(i))).or_default();
        match row.binary_search_by_key(&s, |&(k, _)| k) {
            Ok(pos) => row[pos].1 += 1,
            Err(pos) => row.insert(pos, (s, 1)),
        }
    }
    Ok(table)
}

fn resolve_samples(obs: &ObservationSet, samples: Option<SampleSet>) -> Result<Arc<SampleSet>> {
    let samples = samples.unwrap_or_else(|| obs.distinct_outcomes());
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    check_dim(obs.z_dim(), samples.dim())?;
    Ok(Arc::new(samples))
}

/// Counting estimator `p(z|x) = count(x, z) / count(x)`.
///
/// `samples` defaults to the distinct observed outcomes; a user-supplied set
/// must contain all of them.
pub fn build_discrete(obs: &ObservationSet, samples: Option<SampleSet>) -> Result<DensityModel> {
    if obs.is_empty() {
        return Err(Error::InvalidParams("at least one observation is required".into()));
    }
    let samples = resolve_samples(obs, samples)?;
    let table = count_table(obs, &samples)?;
    Ok(DensityModel {
        x_dim: obs.x_dim(),
        samples,
        inner: Inner::Discrete(table),
    })
}

/// Kernel estimator with `K(a, b) = exp(-||a - b||^2 / h)` on the joint space.
///
/// Contributions with kernel value below `cutoff` are dropped; `cutoff = 0`
/// keeps every term.
pub fn build_kde(obs: &ObservationSet, h: f64, samples: SampleSet, cutoff: f64) -> Result<DensityModel> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(Error::InvalidParams(format!("cutoff must lie in [0, 1], got {cutoff}")));
    }
    if obs.is_empty() {
        return Err(Error::InvalidParams("at least one observation is required".into()));
    }
    let samples = resolve_samples(obs, Some(samples))?;
    let joint = JointPoints::from_observations(obs);
    let radius2 = if cutoff == 0.0 { f64::INFINITY } else { h * (1.0 / cutoff).ln() };

    let mut outcome_ids: HashMap<PointKey, u32> = HashMap::new();
    let mut outcome_rows = Vec::new();
    let mut outcome_of = Vec::with_capacity(joint.len());
    for j in 0..joint.len() {
        let z = joint.z(j);
        let next = outcome_ids.len() as u32;
        let id = *outcome_ids.entry(PointKey::of(z)).or_insert(next);
        if id == next {
            let row = samples
                .iter()
                .enumerate()
                .filter_map(|(k, s)| {
                    let d2 = squared_distance(z, s);
                    (d2 <= radius2).then(|| (k as u32, d2, (-d2 / h).exp()))
                })
                .collect::<Vec<_>>();
            outcome_rows.push(row);
        }
        outcome_of.push(id);
    }
    let index = GridIndex::build(&joint, radius2.sqrt());
    Ok(DensityModel {
        x_dim: obs.x_dim(),
        samples,
        inner: Inner::Kernel(KernelModel {
            bandwidth: h,
            cutoff,
            radius2,
            joint,
            shape: KernelShape::Gaussian {
                index,
                outcome_rows,
                outcome_of,
            },
        }),
    })
}

/// Kernel estimator in the delta-kernel limit: only exact joint-point
/// matches contribute, each with kernel value 1.
pub fn build_exact_match_kde(obs: &ObservationSet, samples: Option<SampleSet>) -> Result<DensityModel> {
    if obs.is_empty() {
        return Err(Error::InvalidParams("at least one observation is required".into()));
    }
    let samples = resolve_samples(obs, samples)?;
    let joint = JointPoints::from_observations(obs);
    let mut table: HashMap<PointKey, Vec<(u32, u64)>> = HashMap::new();
    for j in 0..joint.len() {
        // Outcomes outside S carry no mass at any sample point.
        if let Some(s) = samples.position(joint.z(j)) {
            table
                .entry(PointKey::of(joint.x(j)))
                .or_default()
                .push((s as u32, joint.counts[j]));
        }
    }
    Ok(DensityModel {
        x_dim: obs.x_dim(),
        samples,
        inner: Inner::Kernel(KernelModel {
            bandwidth: 0.0,
            cutoff: 1.0,
            radius2: 0.0,
            joint,
            shape: KernelShape::ExactMatch(table),
        }),
    })
}

/// Mean Euclidean distance from each joint point `(x_i, z_i)` to its nearest
/// distinct joint point.
pub fn default_bandwidth(obs: &ObservationSet) -> Result<f64> {
    let joint = JointPoints::from_observations(obs);
    if joint.len() < 2 {
        return Err(Error::DegenerateData);
    }
    let nearest: Vec<f64> = (0..joint.len())
        .into_par_iter()
        .map(|a| {
            (0..joint.len())
                .filter(|&b| b != a)
                .map(|b| {
                    (squared_distance(joint.x(a), joint.x(b)) + squared_distance(joint.z(a), joint.z(b))).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    // Sum per observation, in observation order.
    let mut seen: HashMap<PointKey, usize> = HashMap::with_capacity(joint.len());
    let mut joint_key = Vec::with_capacity(obs.x_dim() + obs.z_dim());
    let mut total = 0.0;
    for i in 0..obs.len() {
        joint_key.clear();
        joint_key.extend_from_slice(obs.x(i));
        joint_key.extend_from_slice(obs.z(i));
        let next = seen.len();
        let id = *seen.entry(PointKey::of(&joint_key)).or_insert(next);
        total += nearest[id];
    }
    let h = total / obs.len() as f64;
    if h > 0.0 {
        Ok(h)
    } else {
        Err(Error::DegenerateData)
    }
}

impl DensityModel {
    pub fn mode(&self) -> EstimatorMode {
        match self.inner {
            Inner::Discrete(_) => EstimatorMode::Discrete,
            Inner::Kernel(_) => EstimatorMode::Kernel,
        }
    }

    pub fn samples(&self) -> &Arc<SampleSet> {
        &self.samples
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    /// Kernel width; `None` for the discrete and exact-match estimators.
    pub fn bandwidth(&self) -> Option<f64> {
        match &self.inner {
            Inner::Kernel(k) if matches!(k.shape, KernelShape::Gaussian { .. }) => Some(k.bandwidth),
            _ => None,
        }
    }

    pub fn cutoff(&self) -> Option<f64> {
        match &self.inner {
            Inner::Kernel(k) => Some(k.cutoff),
            Inner::Discrete(_) => None,
        }
    }

    /// Raw `(sample, count)` pairs for `x`, when the estimator is count based.
    pub fn counts(&self, x: &[f64]) -> Option<&[(u32, u64)]> {
        let table = match &self.inner {
            Inner::Discrete(t) => t,
            Inner::Kernel(KernelModel {
                shape: KernelShape::ExactMatch(t),
                ..
            }) => t,
            Inner::Kernel(_) => return None,
        };
        table.get(&PointKey::of(x)).map(Vec::as_slice)
    }

    /// Normalized conditional distribution `p(Z|x)` over the sample set.
    pub fn conditional(&self, x: &[f64]) -> Result<Distribution> {
        check_dim(self.x_dim, x.len())?;
        match &self.inner {
            Inner::Discrete(table) => {
                let row = table.get(&PointKey::of(x)).ok_or(Error::UnseenConfiguration)?;
                self.from_counts(row)
            }
            Inner::Kernel(k) => match &k.shape {
                KernelShape::ExactMatch(table) => {
                    let row = table.get(&PointKey::of(x)).ok_or(Error::ZeroMass)?;
                    self.from_counts(row)
                }
                KernelShape::Gaussian {
                    index,
                    outcome_rows,
                    outcome_of,
                } => {
                    let mut weights = vec![0.0; self.samples.len()];
                    for &j in index.candidates(x).iter() {
                        let j = j as usize;
                        let dx2 = squared_distance(x, k.joint.x(j));
                        if dx2 > k.radius2 {
                            continue;
                        }
                        let wx = k.joint.counts[j] as f64 * (-dx2 / k.bandwidth).exp();
                        for &(s, dz2, kz) in &outcome_rows[outcome_of[j] as usize] {
                            if dx2 + dz2 <= k.radius2 {
                                weights[s as usize] += wx * kz;
                            }
                        }
                    }
                    if weights.iter().all(|&w| w == 0.0) {
                        return Err(Error::ZeroMass);
                    }
                    Distribution::from_dense(Arc::clone(&self.samples), &weights, true)
                }
            },
        }
    }

    /// Conditionals for many configurations, computed in parallel and
    /// returned in input order.
    pub fn conditionals<X: AsRef<[f64]> + Sync>(&self, xs: &[X]) -> Result<Vec<Distribution>> {
        xs.par_iter().map(|x| self.conditional(x.as_ref())).collect()
    }

    fn from_counts(&self, row: &[(u32, u64)]) -> Result<Distribution> {
        let entries = row.iter().map(|&(s, c)| (s, c as f64)).collect();
        Distribution::from_sparse(Arc::clone(&self.samples), entries, true)
    }
}
