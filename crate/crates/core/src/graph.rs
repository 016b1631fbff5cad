//! Transition graphs over state partitions, recurrent-state extraction and
//! entropy-based complexity measures (bits).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::states::dominant;
use crate::types::{ObservationSet, PartitionKind, StatePartition, Symbol};

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// `p(to | from)` over observed transitions.
    pub probability: f64,
    /// `(symbol, p(symbol, to | from))`, causal graphs with symbols only.
    pub symbols: Vec<(Symbol, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionGraph {
    kind: PartitionKind,
    masses: Vec<f64>,
    edges: Vec<Edge>,
}

impl TransitionGraph {
    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.masses.len()
    }

    pub fn mass(&self, node: usize) -> f64 {
        self.masses[node]
    }

    /// Edges sorted by `(from, to)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.from == node)
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    /// Probability of emitting `symbol` from `node`, over all targets.
    pub fn symbol_probability(&self, node: usize, symbol: Symbol) -> f64 {
        self.outgoing(node)
            .flat_map(|e| e.symbols.iter())
            .filter(|(s, _)| *s == symbol)
            .map(|(_, p)| p)
            .sum()
    }

    /// Build a graph from explicit edges, for fixtures.
    pub fn from_edges(kind: PartitionKind, masses: Vec<f64>, mut edges: Vec<Edge>) -> Result<Self> {
        if let Some(e) = edges.iter().find(|e| e.from >= masses.len() || e.to >= masses.len()) {
            return Err(Error::IndexOutOfRange {
                index: e.from.max(e.to),
                len: masses.len(),
            });
        }
        edges.sort_by_key(|e| (e.from, e.to));
        Ok(TransitionGraph { kind, masses, edges })
    }
}

type EdgeCounts = BTreeMap<(usize, usize), (u64, BTreeMap<Symbol, u64>)>;

fn count_transitions(partition: &StatePartition, obs: &ObservationSet) -> Result<(EdgeCounts, bool)> {
    if !obs.is_sequential() {
        return Err(Error::NonSequentialData);
    }
    if obs.len() != partition.len() {
        return Err(Error::IndexSetMismatch);
    }
    let labelled = partition.kind() == PartitionKind::Causal && obs.symbols().is_some();
    let mut counts: EdgeCounts = BTreeMap::new();
    for i in 0..obs.len().saturating_sub(1) {
        let entry = counts
            .entry((partition.state_of(i), partition.state_of(i + 1)))
            .or_default();
        entry.0 += 1;
        if labelled {
            let a = obs.symbols().unwrap()[i];
            *entry.1.entry(a).or_default() += 1;
        }
    }
    Ok((counts, labelled))
}

fn finish(partition: &StatePartition, counts: EdgeCounts) -> TransitionGraph {
    let mut totals = vec![0u64; partition.num_states()];
    for (&(from, _), (n, _)) in &counts {
        totals[from] += n;
    }
    let edges = counts
        .into_iter()
        .map(|((from, to), (n, syms))| {
            let t = totals[from] as f64;
            Edge {
                from,
                to,
                probability: n as f64 / t,
                symbols: syms.into_iter().map(|(a, c)| (a, c as f64 / t)).collect(),
            }
        })
        .collect();
    TransitionGraph {
        kind: partition.kind(),
        masses: partition.states().iter().map(|s| s.mass).collect(),
        edges,
    }
}

/// Empirical transition graph of a partition over a time-ordered
/// observation set. Causal partitions with symbols get per-symbol labels.
pub fn build_transition_graph(partition: &StatePartition, obs: &ObservationSet) -> Result<TransitionGraph> {
    let (counts, _) = count_transitions(partition, obs)?;
    Ok(finish(partition, counts))
}

/// Labelled machine of a causal partition where, for each `(state, symbol)`
/// with one target receiving more than `theta` of its transitions (or all of
/// them), the
/// minority transitions are treated as spurious and folded into that target.
/// Symbol emission probabilities are unchanged.
pub fn build_epsilon_machine(partition: &StatePartition, obs: &ObservationSet, theta: f64) -> Result<TransitionGraph> {
    if partition.kind() != PartitionKind::Causal {
        return Err(Error::InvalidParams("epsilon machines are built from causal partitions".into()));
    }
    let (counts, labelled) = count_transitions(partition, obs)?;
    if !labelled {
        return Err(Error::MissingSymbols);
    }
    // (from, symbol) -> to -> count
    let mut by_symbol: BTreeMap<(usize, Symbol), BTreeMap<usize, u64>> = BTreeMap::new();
    for (&(from, to), (_, syms)) in &counts {
        for (&a, &n) in syms {
            *by_symbol.entry((from, a)).or_default().entry(to).or_default() += n;
        }
    }
    let mut folded: EdgeCounts = BTreeMap::new();
    for ((from, a), targets) in by_symbol {
        let total: u64 = targets.values().sum();
        let dominant = dominant(&targets, theta);
        let mut add = |to: usize, n: u64| {
            let e = folded.entry((from, to)).or_default();
            e.0 += n;
            *e.1.entry(a).or_default() += n;
        };
        match dominant {
            Some(t) => add(t, total),
            None => targets.into_iter().for_each(|(t, n)| add(t, n)),
        }
    }
    Ok(finish(partition, folded))
}

/// States in closed strongly connected components (no edge leaves the
/// component), sorted ascending.
pub fn recurrent_states(g: &TransitionGraph) -> Vec<usize> {
    let mut dg: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..g.num_nodes()).map(|_| dg.add_node(())).collect();
    for e in &g.edges {
        dg.add_edge(nodes[e.from], nodes[e.to], ());
    }
    let mut component = vec![0usize; g.num_nodes()];
    let sccs = tarjan_scc(&dg);
    for (c, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = c;
        }
    }
    let mut closed = vec![true; sccs.len()];
    for e in &g.edges {
        if component[e.from] != component[e.to] {
            closed[component[e.from]] = false;
        }
    }
    (0..g.num_nodes()).filter(|&n| closed[component[n]]).collect()
}

/// Shannon entropy of the state masses, in bits.
pub fn global_complexity(partition: &StatePartition) -> f64 {
    partition
        .states()
        .iter()
        .map(|s| s.mass)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Pointwise information `-log2 p(state(i))`, in bits.
pub fn local_complexity(partition: &StatePartition, i: usize) -> Result<f64> {
    if i >= partition.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: partition.len(),
        });
    }
    Ok(-partition.mass(partition.state_of(i)).log2())
}

/// Local complexity of every observation.
pub fn local_complexities(partition: &StatePartition) -> Vec<f64> {
    let per_state: Vec<f64> = partition.states().iter().map(|s| -s.mass.log2()).collect();
    partition.assignment().iter().map(|&s| per_state[s]).collect()
}

/// Mean with compensated (Neumaier) summation.
pub fn accurate_mean(values: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    (sum + comp) / values.len() as f64
}

/// Graphviz text. Recurrent nodes are double circles; causal edges are
/// labelled `symbol:probability`, other kinds by probability only.
pub fn export_dot(g: &TransitionGraph) -> String {
    let recurrent = recurrent_states(g);
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", g.kind.name());
    for n in 0..g.num_nodes() {
        let shape = if recurrent.binary_search(&n).is_ok() {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(out, "  {n} [shape={shape}, label=\"{n} (p={:.6})\"];", g.masses[n]);
    }
    for e in &g.edges {
        let label = if g.kind == PartitionKind::Causal && !e.symbols.is_empty() {
            e.symbols
                .iter()
                .map(|(a, p)| format!("{}:{p:.6}", a.0))
                .collect::<Vec<_>>()
                .join("\\n")
        } else {
            format!("{:.6}", e.probability)
        };
        let _ = writeln!(out, "  {} -> {} [label=\"{label}\"];", e.from, e.to);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq_obs(n: usize, symbols: Option<Vec<u32>>) -> ObservationSet {
        let pairs: Vec<([f64; 1], [f64; 1])> = (0..n).map(|i| ([i as f64], [0.0])).collect();
        let mut obs = ObservationSet::from_pairs(&pairs).unwrap();
        match symbols {
            Some(s) => obs.set_symbols(s.into_iter().map(Symbol).collect(), 2).unwrap(),
            None => obs.set_sequential(true),
        }
        obs
    }

    fn edge(from: usize, to: usize) -> Edge {
        Edge {
            from,
            to,
            probability: 1.0,
            symbols: Vec::new(),
        }
    }

    #[test]
    fn single_state_self_loop() {
        let obs = seq_obs(5, None);
        let p = StatePartition::from_labels(PartitionKind::Decisional, &[0; 5]).unwrap();
        let g = build_transition_graph(&p, &obs).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].probability, 1.0);
        assert_eq!(recurrent_states(&g), vec![0]);
        let dot = export_dot(&g);
        assert!(dot.contains("0 -> 0 [label=\"1.000000\"]"));
        assert!(!dot.contains(':'));
    }

    #[test]
    fn alternating_states() {
        let obs = seq_obs(6, Some(vec![0, 1, 0, 1, 0]));
        let p = StatePartition::from_labels(PartitionKind::Causal, &[0, 1, 0, 1, 0, 1]).unwrap();
        let g = build_transition_graph(&p, &obs).unwrap();
        assert_eq!(g.edges().len(), 2);
        assert!(g.edges().iter().all(|e| e.probability == 1.0));
        assert_eq!(g.edge(0, 1).unwrap().symbols, vec![(Symbol(0), 1.0)]);
    }

    #[test]
    fn non_sequential_is_rejected() {
        let pairs = [([0.0], [0.0]), ([1.0], [0.0])];
        let obs = ObservationSet::from_pairs(&pairs).unwrap();
        let p = StatePartition::from_labels(PartitionKind::Causal, &[0, 0]).unwrap();
        assert_eq!(build_transition_graph(&p, &obs).unwrap_err(), Error::NonSequentialData);
    }

    #[test]
    fn transient_chain_into_cycle() {
        let g = TransitionGraph::from_edges(
            PartitionKind::Causal,
            vec![0.1, 0.45, 0.45],
            vec![edge(0, 1), edge(1, 2), edge(2, 1)],
        )
        .unwrap();
        assert_eq!(recurrent_states(&g), vec![1, 2]);
    }

    #[test]
    fn complexity_values() {
        let two = StatePartition::from_labels(PartitionKind::Causal, &[0, 1, 0, 1]).unwrap();
        assert!((global_complexity(&two) - 1.0).abs() < 1e-15);
        assert_eq!(local_complexity(&two, 0).unwrap(), 1.0);
        let one = StatePartition::from_labels(PartitionKind::Causal, &[0, 0, 0]).unwrap();
        assert_eq!(global_complexity(&one), 0.0);
        assert_eq!(local_complexity(&one, 2).unwrap(), 0.0);
        assert!(local_complexity(&one, 3).is_err());
        let even = StatePartition::from_labels(PartitionKind::Causal, &[0, 0, 1]).unwrap();
        let expected = -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0f64 / 3.0) * (1.0f64 / 3.0).log2();
        assert!((global_complexity(&even) - expected).abs() < 1e-15);
        assert!((expected - 0.9182958340544896).abs() < 1e-15);
    }

    #[test]
    fn spurious_minority_is_folded() {
        // State 0 emits symbol 1 into state 1 nineteen times, once into 2.
        let mut labels = Vec::new();
        let mut syms = Vec::new();
        for k in 0..20 {
            labels.push(0);
            labels.push(if k == 7 { 2 } else { 1 });
            syms.push(1);
            syms.push(0);
        }
        labels.push(0);
        let obs = seq_obs(labels.len(), Some(syms));
        let p = StatePartition::from_labels(PartitionKind::Causal, &labels).unwrap();
        let raw = build_transition_graph(&p, &obs).unwrap();
        assert!(raw.edge(0, 2).is_some());
        let m = build_epsilon_machine(&p, &obs, 0.9).unwrap();
        assert!(m.edge(0, 2).is_none());
        assert_eq!(m.edge(0, 1).unwrap().probability, 1.0);
        let strict = build_epsilon_machine(&p, &obs, 0.99).unwrap();
        assert!(strict.edge(0, 2).is_some());
    }

    fn reach(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut r = vec![vec![false; n]; n];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in edges {
            r[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] && r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        r
    }

    proptest! {
        #[test]
        fn recurrent_matches_reachability(n in 1usize..50, raw in proptest::collection::vec((0usize..50, 0usize..50), 0..120)) {
            let edges: Vec<(usize, usize)> = raw.into_iter().filter(|&(a, b)| a < n && b < n).collect();
            let g = TransitionGraph::from_edges(
                PartitionKind::Causal,
                vec![1.0 / n as f64; n],
                edges.iter().map(|&(a, b)| edge(a, b)).collect(),
            ).unwrap();
            let r = reach(n, &edges);
            // Recurrent: every node reachable from v can reach v back.
            let expected: Vec<usize> = (0..n).filter(|&v| (0..n).all(|w| !r[v][w] || r[w][v])).collect();
            prop_assert_eq!(recurrent_states(&g), expected);
        }

        #[test]
        fn mean_local_equals_global(labels in proptest::collection::vec(0usize..6, 1..200)) {
            let p = StatePartition::from_labels(PartitionKind::Causal, &labels).unwrap();
            let mean = accurate_mean(&local_complexities(&p));
            prop_assert!((mean - global_complexity(&p)).abs() < 1e-12);
        }

        #[test]
        fn coarsening_never_increases_entropy(labels in proptest::collection::vec(0usize..8, 1..200), fold in 1usize..8) {
            let fine = StatePartition::from_labels(PartitionKind::Causal, &labels).unwrap();
            let coarse_labels: Vec<usize> = labels.iter().map(|l| l % fold).collect();
            let coarse = StatePartition::from_labels(PartitionKind::Decisional, &coarse_labels).unwrap();
            prop_assert!(fine.refines(&coarse));
            prop_assert!(global_complexity(&coarse) <= global_complexity(&fine) + 1e-12);
        }

        #[test]
        fn outgoing_probabilities_sum_to_one(labels in proptest::collection::vec(0usize..5, 2..100)) {
            let obs = seq_obs(labels.len(), None);
            let p = StatePartition::from_labels(PartitionKind::IsoUtility, &labels).unwrap();
            let g = build_transition_graph(&p, &obs).unwrap();
            for n in 0..g.num_nodes() {
                let out: Vec<&Edge> = g.outgoing(n).collect();
                if !out.is_empty() {
                    let s: f64 = out.iter().map(|e| e.probability).sum();
                    prop_assert!((s - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
