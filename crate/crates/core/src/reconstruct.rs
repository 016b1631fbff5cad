//! End-to-end reconstruction: conditionals, causal states, decision layers,
//! transition graphs and complexities.

use crate::compare::MatchSpec;
use crate::decision::{
    cluster_iso_prediction, cluster_iso_utility, default_delta_u, intersect_partitions, summarize_states,
    DecisionSummary,
};
use crate::density::{build_discrete, build_exact_match_kde, build_kde, default_bandwidth, DensityModel};
use crate::error::{Error, Result};
use crate::graph::{accurate_mean, build_epsilon_machine, build_transition_graph, global_complexity, local_complexities, TransitionGraph};
use crate::states::{cluster_causal, enforce_determinism, CausalStateSet, DEFAULT_MAX_ITER, DEFAULT_THETA};
use crate::types::{ObservationSet, SampleSet, StatePartition};
use crate::utility::UtilitySpec;

/// Tolerance for the entropy and local-complexity identities.
pub const ENTROPY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Discrete,
    /// Kernel estimator with an exact-match kernel.
    ExactMatchKernel,
    /// Gaussian kernel; `bandwidth = None` uses the nearest-neighbour default.
    Kernel { bandwidth: Option<f64>, cutoff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinism {
    pub theta: f64,
    pub max_iter: usize,
}

impl Default for Determinism {
    fn default() -> Self {
        Determinism {
            theta: DEFAULT_THETA,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructConfig {
    pub estimator: Estimator,
    /// Outcome sample set; defaults to the distinct observed outcomes.
    pub samples: Option<SampleSet>,
    pub matching: MatchSpec,
    /// Applied when the observations carry symbols.
    pub determinism: Option<Determinism>,
    /// Decision layers are skipped without a utility.
    pub utility: Option<UtilitySpec>,
    pub argmax_tol: Option<f64>,
    pub y_match_tol: f64,
    pub delta_u: Option<f64>,
}

impl ReconstructConfig {
    pub fn new(estimator: Estimator, matching: MatchSpec) -> Self {
        ReconstructConfig {
            estimator,
            samples: None,
            matching,
            determinism: Some(Determinism::default()),
            utility: None,
            argmax_tol: None,
            y_match_tol: 0.0,
            delta_u: None,
        }
    }
}

/// Iso-prediction, iso-utility and decisional states.
#[derive(Debug, Clone)]
pub struct DecisionLayers {
    pub summaries: Vec<DecisionSummary>,
    pub iso_prediction: StatePartition,
    pub iso_utility: StatePartition,
    pub decisional: StatePartition,
    pub delta_u: f64,
}

/// Global complexities in bits: C, and D, P, V when a utility is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complexities {
    pub statistical: f64,
    pub decisional: Option<f64>,
    pub iso_prediction: Option<f64>,
    pub iso_utility: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub model: DensityModel,
    pub causal: CausalStateSet,
    pub decision: Option<DecisionLayers>,
    /// Empirical graph of the causal partition, sequential data only.
    pub causal_graph: Option<TransitionGraph>,
    /// Labelled machine with spurious transitions folded, when symbols exist.
    pub machine: Option<TransitionGraph>,
    pub complexities: Complexities,
}

impl Reconstruction {
    pub fn partitions(&self) -> Vec<&StatePartition> {
        let mut out = vec![self.causal.partition()];
        if let Some(d) = &self.decision {
            out.extend([&d.decisional, &d.iso_prediction, &d.iso_utility]);
        }
        out
    }
}

pub fn build_model(obs: &ObservationSet, estimator: &Estimator, samples: Option<SampleSet>) -> Result<DensityModel> {
    match estimator {
        Estimator::Discrete => build_discrete(obs, samples),
        Estimator::ExactMatchKernel => build_exact_match_kde(obs, samples),
        Estimator::Kernel { bandwidth, cutoff } => {
            let h = match bandwidth {
                Some(h) => *h,
                None => default_bandwidth(obs)?,
            };
            let samples = samples.unwrap_or_else(|| obs.distinct_outcomes());
            build_kde(obs, h, samples, *cutoff)
        }
    }
}

/// Runs the full reconstruction and checks the refinement and entropy
/// invariants before returning.
pub fn reconstruct(obs: &ObservationSet, cfg: &ReconstructConfig) -> Result<Reconstruction> {
    let model = build_model(obs, &cfg.estimator, cfg.samples.clone())?;
    let mut causal = cluster_causal(obs, &model, &cfg.matching)?;
    let symbols = obs.symbols().is_some();
    if let (Some(det), true) = (cfg.determinism, symbols) {
        causal = enforce_determinism(&causal, obs, det.theta, det.max_iter)?;
    }

    let decision = match &cfg.utility {
        Some(u) => {
            let summaries = summarize_states(&causal, u, cfg.argmax_tol)?;
            let delta_u = cfg.delta_u.unwrap_or_else(|| default_delta_u(&summaries));
            let iso_prediction = cluster_iso_prediction(causal.partition(), &summaries, cfg.y_match_tol)?;
            let iso_utility = cluster_iso_utility(causal.partition(), &summaries, delta_u)?;
            let decisional = intersect_partitions(&iso_prediction, &iso_utility)?;
            Some(DecisionLayers {
                summaries,
                iso_prediction,
                iso_utility,
                decisional,
                delta_u,
            })
        }
        None => None,
    };

    let causal_graph = if obs.is_sequential() {
        Some(build_transition_graph(causal.partition(), obs)?)
    } else {
        None
    };
    let machine = match (symbols, cfg.determinism) {
        (true, det) => Some(build_epsilon_machine(
            causal.partition(),
            obs,
            det.map_or(1.0, |d| d.theta),
        )?),
        (false, _) => None,
    };

    let complexities = Complexities {
        statistical: global_complexity(causal.partition()),
        decisional: decision.as_ref().map(|d| global_complexity(&d.decisional)),
        iso_prediction: decision.as_ref().map(|d| global_complexity(&d.iso_prediction)),
        iso_utility: decision.as_ref().map(|d| global_complexity(&d.iso_utility)),
    };
    let rec = Reconstruction {
        model,
        causal,
        decision,
        causal_graph,
        machine,
        complexities,
    };
    check_invariants(&rec)?;
    Ok(rec)
}

/// Causal refines decisional, decisional refines iso-prediction and
/// iso-utility; D, P, V do not exceed C; mean local complexity equals the
/// global one.
pub fn check_invariants(rec: &Reconstruction) -> Result<()> {
    let fail = |msg: String| Err(Error::InvariantViolation(msg));
    for p in rec.partitions() {
        let mean = accurate_mean(&local_complexities(p));
        let global = global_complexity(p);
        if (mean - global).abs() > ENTROPY_TOL * global.max(1.0) {
            return fail(format!("{} mean local complexity {mean} != global {global}", p.kind().name()));
        }
    }
    let Some(d) = &rec.decision else { return Ok(()) };
    let causal = rec.causal.partition();
    if !causal.refines(&d.decisional) {
        return fail("causal states do not refine decisional states".into());
    }
    if !d.decisional.refines(&d.iso_prediction) || !d.decisional.refines(&d.iso_utility) {
        return fail("decisional states do not refine iso-prediction and iso-utility states".into());
    }
    let c = rec.complexities.statistical;
    for (name, v) in [
        ("decisional", rec.complexities.decisional),
        ("iso-prediction", rec.complexities.iso_prediction),
        ("iso-utility", rec.complexities.iso_utility),
    ] {
        let v = v.unwrap_or(0.0);
        if v > c + ENTROPY_TOL {
            return fail(format!("{name} complexity {v} exceeds statistical complexity {c}"));
        }
    }
    Ok(())
}
