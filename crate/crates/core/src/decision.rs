//! Expected utility, optimal prediction sets, and the partitions they induce:
//! iso-prediction, iso-utility and decisional states.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cluster::{connected_components, group_by_key};
use crate::error::{Error, Result};
use crate::states::CausalStateSet;
use crate::types::{Distribution, PartitionKind, Point, PointKey, StatePartition};
use crate::utility::UtilitySpec;

/// Optimal predictions of one causal state.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSummary {
    pub state_id: usize,
    /// Every candidate attaining the maximal expected utility, in candidate
    /// order.
    pub predictions: Vec<Point>,
    pub u_star: f64,
}

/// `sum_s p(s) U(y, s) / sum_s p(s)` over the sample points.
pub fn expected_utility(p: &Distribution, u: &UtilitySpec, y: &[f64]) -> Result<f64> {
    let samples = p.samples();
    if let Some(s) = samples.iter().next() {
        u.check_args(y, s)?;
    }
    if let UtilitySpec::Table { .. } = u {
        for s in samples.iter() {
            u.check_args(y, s)?;
        }
    }
    let total = p.total();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let sum: f64 = p.entries().map(|(i, w)| w * u.eval_unchecked(y, samples.point(i))).sum();
    Ok(sum / total)
}

/// Evaluates `U(y|p)` for many candidates, with closed forms for utilities
/// that decompose over samples or coordinates.
enum Evaluator<'a> {
    /// Delta utility: the expected utility of `y` is `p(y)`.
    Mass(&'a Distribution),
    /// Coordinate-match utility: sum of per-coordinate marginal hits.
    Marginals(Vec<HashMap<u64, f64>>),
    Generic(&'a Distribution, &'a UtilitySpec),
}

impl<'a> Evaluator<'a> {
    fn new(p: &'a Distribution, u: &'a UtilitySpec) -> Self {
        let total = p.total();
        match u {
            UtilitySpec::Delta => Evaluator::Mass(p),
            UtilitySpec::ConeMatchCount => {
                let dim = p.samples().dim();
                let mut marginals = vec![HashMap::new(); dim];
                for (i, w) in p.entries() {
                    for (k, &v) in p.samples().point(i).iter().enumerate() {
                        *marginals[k].entry(coord_bits(v)).or_insert(0.0) += w / total;
                    }
                }
                Evaluator::Marginals(marginals)
            }
            _ => Evaluator::Generic(p, u),
        }
    }

    fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Evaluator::Mass(p) => match p.samples().position(y) {
                Some(i) => p.weight(i) / p.total(),
                None => 0.0,
            },
            Evaluator::Marginals(m) => y
                .iter()
                .zip(m)
                .map(|(&v, mk)| mk.get(&coord_bits(v)).copied().unwrap_or(0.0))
                .sum(),
            Evaluator::Generic(p, u) => {
                let samples = p.samples();
                let sum: f64 = p.entries().map(|(i, w)| w * u.eval_unchecked(y, samples.point(i))).sum();
                sum / p.total()
            }
        }
    }
}

fn coord_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Default argmax tolerance: relative `1e-9`, absolute below magnitude one.
pub fn default_argmax_tol(u_star: f64) -> f64 {
    1e-9 * u_star.abs().max(1.0)
}

/// Exhaustive argmax of the expected utility over `candidates`.
///
/// `tol = None` selects [`default_argmax_tol`].
pub fn optimal_predictions(
    p: &Distribution,
    u: &UtilitySpec,
    candidates: &[Point],
    tol: Option<f64>,
) -> Result<DecisionSummary> {
    let first = candidates.first().ok_or(Error::EmptyCandidates)?;
    if let Some(s) = p.samples().iter().next() {
        u.check_args(first.coords(), s)?;
    }
    if let UtilitySpec::Table { .. } = u {
        for y in candidates {
            for s in p.samples().iter() {
                u.check_args(y.coords(), s)?;
            }
        }
    }
    if !(p.total() > 0.0) {
        return Err(Error::ZeroMass);
    }
    let ev = Evaluator::new(p, u);
    let values: Vec<f64> = if candidates.len() > 256 {
        candidates.par_iter().map(|y| ev.eval(y.coords())).collect()
    } else {
        candidates.iter().map(|y| ev.eval(y.coords())).collect()
    };
    Ok(argmax_set(candidates, &values, tol))
}

fn argmax_set(candidates: &[Point], values: &[f64], tol: Option<f64>) -> DecisionSummary {
    let u_star = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = tol.unwrap_or_else(|| default_argmax_tol(u_star));
    let predictions = candidates
        .iter()
        .zip(values)
        .filter(|(_, &v)| v >= u_star - tol)
        .map(|(y, _)| y.clone())
        .collect();
    DecisionSummary {
        state_id: 0,
        predictions,
        u_star,
    }
}

/// Candidates found by random-restart coordinate search inside the bounding
/// box of the sample set, for continuous outcome spaces where the sample
/// points are too coarse. Returned points can be appended to the exhaustive
/// candidate list.
pub fn local_search_candidates(
    p: &Distribution,
    u: &UtilitySpec,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<Vec<Point>> {
    let samples = p.samples();
    let dim = samples.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for s in samples.iter() {
        for k in 0..dim {
            lo[k] = lo[k].min(s[k]);
            hi[k] = hi[k].max(s[k]);
        }
    }
    let ev = Evaluator::new(p, u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let mut y: Vec<f64> = (0..dim)
            .map(|k| if hi[k] > lo[k] { rng.random_range(lo[k]..=hi[k]) } else { lo[k] })
            .collect();
        let mut best = ev.eval(&y);
        let mut step: Vec<f64> = (0..dim).map(|k| (hi[k] - lo[k]).max(1e-12) / 4.0).collect();
        for _ in 0..iters {
            let mut improved = false;
            for k in 0..dim {
                for dir in [-1.0, 1.0] {
                    let mut trial = y.clone();
                    trial[k] = (trial[k] + dir * step[k]).clamp(lo[k], hi[k]);
                    let v = ev.eval(&trial);
                    if v > best {
                        best = v;
                        y = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step.iter_mut().for_each(|s| *s /= 2.0);
            }
        }
        found.push(Point::new(y)?);
    }
    Ok(found)
}

/// Per-state summaries computed from the averaged state distributions, with
/// the sample set as the exhaustive candidate list.
pub fn summarize_states(states: &CausalStateSet, u: &UtilitySpec, tol: Option<f64>) -> Result<Vec<DecisionSummary>> {
    let dists = states.state_distributions();
    let samples = dists[0].samples();
    let candidates: Vec<Point> = samples.iter().map(|s| Point::new(s.to_vec())).collect::<Result<_>>()?;
    dists
        .par_iter()
        .enumerate()
        .map(|(id, d)| {
            let mut s = optimal_predictions(d, u, &candidates, tol)?;
            s.state_id = id;
            Ok(s)
        })
        .collect()
}

fn lift(causal: &StatePartition, state_labels: &[usize], kind: PartitionKind) -> Result<StatePartition> {
    if state_labels.len() != causal.num_states() {
        return Err(Error::IndexSetMismatch);
    }
    let labels: Vec<usize> = causal.assignment().iter().map(|&s| state_labels[s]).collect();
    StatePartition::from_labels(kind, &labels)
}

fn covered(a: &[Point], b: &[Point], tol: f64) -> bool {
    a.iter().all(|y| {
        b.iter().any(|w| {
            y.dim() == w.dim() && y.coords().iter().zip(w.coords()).all(|(p, q)| (p - q).abs() <= tol)
        })
    })
}

/// Two prediction sets match when each element of either lies within `tol`
/// (per coordinate) of some element of the other.
pub fn prediction_sets_match(a: &[Point], b: &[Point], tol: f64) -> bool {
    covered(a, b, tol) && covered(b, a, tol)
}

/// Groups causal states with matching optimal prediction sets.
pub fn cluster_iso_prediction(
    causal: &StatePartition,
    summaries: &[DecisionSummary],
    y_match_tol: f64,
) -> Result<StatePartition> {
    let labels = if y_match_tol == 0.0 {
        group_by_key(summaries.iter().map(|s| {
            let mut keys: Vec<PointKey> = s.predictions.iter().map(Point::key).collect();
            keys.sort();
            keys.dedup();
            keys
        }))
    } else {
        connected_components(summaries.len(), |i, j| {
            prediction_sets_match(&summaries[i].predictions, &summaries[j].predictions, y_match_tol)
        })
    };
    lift(causal, &labels, PartitionKind::IsoPrediction)
}

/// Default iso-utility threshold: `1e-6` of the spread of maximal utilities.
pub fn default_delta_u(summaries: &[DecisionSummary]) -> f64 {
    let (lo, hi) = summaries
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.u_star), hi.max(s.u_star)));
    if hi > lo {
        1e-6 * (hi - lo)
    } else {
        0.0
    }
}

/// Groups causal states whose maximal utilities are chained by gaps of at
/// most `delta_u`.
pub fn cluster_iso_utility(causal: &StatePartition, summaries: &[DecisionSummary], delta_u: f64) -> Result<StatePartition> {
    if !(delta_u >= 0.0) {
        return Err(Error::InvalidParams(format!("delta_u must be >= 0, got {delta_u}")));
    }
    // Single link on the real line: sort, then cut where gaps exceed delta_u.
    let mut order: Vec<usize> = (0..summaries.len()).collect();
    order.sort_by(|&a, &b| summaries[a].u_star.total_cmp(&summaries[b].u_star).then(a.cmp(&b)));
    let mut group = vec![0usize; summaries.len()];
    let mut current = 0;
    for w in 0..order.len() {
        if w > 0 && summaries[order[w]].u_star - summaries[order[w - 1]].u_star > delta_u {
            current += 1;
        }
        group[order[w]] = current;
    }
    lift(causal, &group, PartitionKind::IsoUtility)
}

/// Decisional states: observations share a state iff they share both an
/// iso-prediction and an iso-utility state.
pub fn intersect_partitions(psi: &StatePartition, upsilon: &StatePartition) -> Result<StatePartition> {
    if psi.len() != upsilon.len() {
        return Err(Error::IndexSetMismatch);
    }
    let labels: Vec<(usize, usize)> = psi
        .assignment()
        .iter()
        .zip(upsilon.assignment())
        .map(|(&a, &b)| (a, b))
        .collect();
    StatePartition::from_labels(PartitionKind::Decisional, &labels)
}
