//! Even process: generation, sliding-window observations and structural
//! assessment of reconstructed machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compare::MatchSpec;
use crate::error::{Error, Result};
use crate::graph::{recurrent_states, TransitionGraph};
use crate::reconstruct::{reconstruct, Determinism, Estimator, ReconstructConfig, Reconstruction};
use crate::types::{ObservationSet, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvenState {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvenSeries {
    pub symbols: Vec<u32>,
    /// Generator state before each emitted symbol.
    pub states: Vec<EvenState>,
}

/// Emits `n` symbols. From A: 0 (stay) or 1 (to B) with probability 1/2
/// each; from B: 1 (to A). The start state is drawn from the stationary
/// distribution (A with probability 2/3).
pub fn gen_even_process(n: usize, seed: u64) -> EvenSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = if rng.random_bool(2.0 / 3.0) { EvenState::A } else { EvenState::B };
    let mut out = EvenSeries {
        symbols: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
    };
    for _ in 0..n {
        out.states.push(state);
        let (symbol, next) = match state {
            EvenState::A if rng.random_bool(0.5) => (1, EvenState::B),
            EvenState::A => (0, EvenState::A),
            EvenState::B => (1, EvenState::A),
        };
        out.symbols.push(symbol);
        state = next;
    }
    out
}

/// Sliding windows: `x_i = s[i..i+L]`, `z_i = s[i+L]`, and the symbol of
/// transition `i -> i+1` is `z_i`.
pub fn series_to_observations(series: &[u32], window: usize) -> Result<ObservationSet> {
    if window == 0 {
        return Err(Error::InvalidParams("window length must be at least 1".into()));
    }
    if series.len() <= window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window,
        });
    }
    let n = series.len() - window;
    let mut obs = ObservationSet::with_capacity(window, 1, n)?;
    let mut x = vec![0.0; window];
    for i in 0..n {
        for (k, v) in x.iter_mut().enumerate() {
            *v = series[i + k] as f64;
        }
        obs.push(&x, &[series[i + window] as f64])?;
    }
    let alphabet = series.iter().max().map_or(1, |&m| m as usize + 1);
    let symbols = series[window..series.len() - 1].iter().map(|&s| Symbol(s)).collect();
    obs.set_symbols(symbols, alphabet)?;
    Ok(obs)
}

/// Transient state seen from the machine: symbol probabilities and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientInfo {
    pub state: usize,
    pub mass: f64,
    pub p0: f64,
    pub p1: f64,
}

/// Comparison of a reconstructed machine with the Even process definition.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenAssessment {
    pub recurrent: Vec<usize>,
    /// Recurrent state matching A, when the structure is correct.
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub p1_given_a: Option<f64>,
    pub p1_given_b: Option<f64>,
    /// Exactly two recurrent states with A -0-> A, A -1-> B, B -1-> A and no
    /// other transitions between them.
    pub structurally_correct: bool,
    pub transients: Vec<TransientInfo>,
}

fn targets(g: &TransitionGraph, from: usize, symbol: u32) -> Vec<usize> {
    g.outgoing(from)
        .filter(|e| e.symbols.iter().any(|(a, p)| a.0 == symbol && *p > 0.0))
        .map(|e| e.to)
        .collect()
}

pub fn assess_even(machine: &TransitionGraph) -> EvenAssessment {
    let recurrent = recurrent_states(machine);
    let transients = (0..machine.num_nodes())
        .filter(|n| recurrent.binary_search(n).is_err())
        .map(|n| TransientInfo {
            state: n,
            mass: machine.mass(n),
            p0: machine.symbol_probability(n, Symbol(0)),
            p1: machine.symbol_probability(n, Symbol(1)),
        })
        .collect();
    let mut out = EvenAssessment {
        recurrent: recurrent.clone(),
        a: None,
        b: None,
        p1_given_a: None,
        p1_given_b: None,
        structurally_correct: false,
        transients,
    };
    if recurrent.len() != 2 {
        return out;
    }
    let is_a = |s: usize| targets(machine, s, 0) == vec![s];
    let (a, b) = match (is_a(recurrent[0]), is_a(recurrent[1])) {
        (true, false) => (recurrent[0], recurrent[1]),
        (false, true) => (recurrent[1], recurrent[0]),
        _ => return out,
    };
    out.a = Some(a);
    out.b = Some(b);
    out.p1_given_a = Some(machine.symbol_probability(a, Symbol(1)));
    out.p1_given_b = Some(machine.symbol_probability(b, Symbol(1)));
    let only_symbols = |s: usize, allowed: &[u32]| {
        machine
            .outgoing(s)
            .flat_map(|e| e.symbols.iter())
            .all(|(sym, _)| allowed.contains(&sym.0))
    };
    out.structurally_correct = targets(machine, a, 1) == vec![b]
        && targets(machine, b, 1) == vec![a]
        && targets(machine, b, 0).is_empty()
        && only_symbols(a, &[0, 1])
        && only_symbols(b, &[1]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvenConfig {
    pub n: usize,
    pub window: usize,
    pub seed: u64,
    pub alpha: f64,
    pub theta: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct EvenRun {
    pub series: EvenSeries,
    pub observations: ObservationSet,
    pub reconstruction: Reconstruction,
    pub assessment: EvenAssessment,
}

/// Discrete estimator, chi-square matching and determinism enforcement on
/// a generated series.
pub fn run_even(cfg: &EvenConfig) -> Result<EvenRun> {
    let series = gen_even_process(cfg.n, cfg.seed);
    let (observations, reconstruction, assessment) = reconstruct_series(
        &series.symbols,
        cfg.window,
        MatchSpec::chi_square(cfg.alpha)?,
        Determinism {
            theta: cfg.theta,
            max_iter: cfg.max_iter,
        },
    )?;
    Ok(EvenRun {
        series,
        observations,
        reconstruction,
        assessment,
    })
}

/// Reconstruction of an arbitrary symbol series with the Even-process setup.
pub fn reconstruct_series(
    series: &[u32],
    window: usize,
    matching: MatchSpec,
    determinism: Determinism,
) -> Result<(ObservationSet, Reconstruction, EvenAssessment)> {
    let obs = series_to_observations(series, window)?;
    let mut cfg = ReconstructConfig::new(Estimator::Discrete, matching);
    cfg.determinism = Some(determinism);
    let rec = reconstruct(&obs, &cfg)?;
    let assessment = assess_even(rec.machine.as_ref().expect("symbols are always attached"));
    Ok((obs, rec, assessment))
}
