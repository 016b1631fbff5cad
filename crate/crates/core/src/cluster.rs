//! Connected-components (single-link) clustering under a match predicate.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when two distinct sets were joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    /// Dense labels ordered by first appearance of each set.
    pub fn labels(&mut self) -> Vec<usize> {
        let mut ids = HashMap::new();
        (0..self.parent.len())
            .map(|x| {
                let r = self.find(x);
                let next = ids.len();
                *ids.entry(r).or_insert(next)
            })
            .collect()
    }
}

/// Labels items `0..n` by the connected components of the graph whose edges
/// are the pairs accepted by `linked`.
///
/// Each new item is tested against every existing cluster; a cluster stops
/// being scanned at its first matching member, so already-joined pairs are
/// never re-tested. Cluster tests run in parallel but merges are applied in
/// cluster order, so the result does not depend on the worker count.
pub fn connected_components<F>(n: usize, linked: F) -> Vec<usize>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let hits: Vec<usize> = clusters
            .par_iter()
            .enumerate()
            .filter(|(_, members)| !members.is_empty() && members.iter().any(|&j| linked(i, j)))
            .map(|(c, _)| c)
            .collect();
        match hits.split_first() {
            None => clusters.push(vec![i]),
            Some((&keep, rest)) => {
                for &c in rest {
                    let moved = std::mem::take(&mut clusters[c]);
                    clusters[keep].extend(moved);
                }
                clusters[keep].push(i);
            }
        }
    }
    let mut labels = vec![0; n];
    for (c, members) in clusters.iter().filter(|m| !m.is_empty()).enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    relabel_by_first_appearance(&labels)
}

/// Groups items with equal keys: connected components of an equivalence
/// relation.
pub fn group_by_key<K: Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Vec<usize> {
    let mut ids = HashMap::new();
    keys.into_iter()
        .map(|k| {
            let next = ids.len();
            *ids.entry(k).or_insert(next)
        })
        .collect()
}

pub fn relabel_by_first_appearance(labels: &[usize]) -> Vec<usize> {
    group_by_key(labels.iter().copied())
}
