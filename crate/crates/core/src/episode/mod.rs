//! Episodes: labelled DAG patterns, stored as their transitive closure.
//!
//! Nodes are indexed `0..K` with `K <= 64`; the closure is kept as one
//! successor bitmask per node, so node subsets are plain `u64` masks.

mod canon;
mod format;

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::seq::{EventSequence, Symbol};

pub use canon::CanonicalKey;
pub use format::{format_episodes, parse_episodes, parse_layered, EpisodeJson, EpisodeRecord};

/// Largest supported episode.
pub const MAX_NODES: usize = 64;

/// Default node limit of the exponential coverage search.
pub const COVER_GUARD: usize = 10;

/// Shape of an episode.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EpisodeClass {
    Serial,
    Parallel,
    General,
}

impl fmt::Display for EpisodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpisodeClass::Serial => "serial",
            EpisodeClass::Parallel => "parallel",
            EpisodeClass::General => "general",
        })
    }
}

/// A labelled DAG `G = (V, E, lab)` normalized to its transitive closure.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Episode {
    labels: Vec<Symbol>,
    /// `succ[i]` has bit `j` set iff `i < j` in the partial order.
    succ: Vec<u64>,
}

#[inline]
fn bit(i: usize) -> u64 {
    1u64 << i
}

#[inline]
fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        bit(n) - 1
    }
}

fn ones(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

impl Episode {
    /// Episode with the given node labels and edges `(from, to)`.
    pub fn new(labels: Vec<Symbol>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        if n > MAX_NODES {
            return Err(Error::TooManyNodes(n, MAX_NODES));
        }
        let mut succ = vec![0u64; n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge {a}>{b} refers to a missing node"
                )));
            }
            succ[a] |= bit(b);
        }
        close(&mut succ);
        if (0..n).any(|i| succ[i] & bit(i) != 0) {
            return Err(Error::Cyclic);
        }
        Ok(Self { labels, succ })
    }

    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            succ: Vec::new(),
        }
    }

    /// `l_0 -> l_1 -> ... -> l_{k-1}`.
    pub fn serial(labels: &[Symbol]) -> Self {
        let n = labels.len();
        assert!(n <= MAX_NODES);
        let succ = (0..n).map(|i| full_mask(n) & !full_mask(i + 1)).collect();
        Self {
            labels: labels.to_vec(),
            succ,
        }
    }

    /// Nodes with no edges.
    pub fn parallel(labels: &[Symbol]) -> Self {
        assert!(labels.len() <= MAX_NODES);
        Self {
            labels: labels.to_vec(),
            succ: vec![0; labels.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Symbol] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Symbol {
        self.labels[v]
    }

    /// Mask of all nodes.
    pub fn all(&self) -> u64 {
        full_mask(self.len())
    }

    /// Descendants of `v` in the closure.
    pub fn succ(&self, v: usize) -> u64 {
        self.succ[v]
    }

    /// Ancestors of `v` in the closure.
    pub fn pred(&self, v: usize) -> u64 {
        (0..self.len())
            .filter(|&u| self.succ[u] & bit(v) != 0)
            .fold(0, |m, u| m | bit(u))
    }

    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.succ[u] & bit(v) != 0
    }

    pub fn comparable(&self, u: usize, v: usize) -> bool {
        self.precedes(u, v) || self.precedes(v, u)
    }

    /// Number of ordered pairs in the closure.
    pub fn order_size(&self) -> usize {
        self.succ.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// Covering edges (the transitive reduction), sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            for v in ones(self.succ[u]) {
                let implied = ones(self.succ[u]).any(|w| self.succ[w] & bit(v) != 0);
                if !implied {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Sinks of the sub-episode induced by `mask`.
    pub fn sinks_in(&self, mask: u64) -> u64 {
        ones(mask)
            .filter(|&v| self.succ[v] & mask == 0)
            .fold(0, |m, v| m | bit(v))
    }

    /// Nodes with no outgoing edges.
    pub fn sinks(&self) -> Vec<usize> {
        ones(self.sinks_in(self.all())).collect()
    }

    /// Sub-episode induced by `mask`, nodes renumbered in index order.
    pub fn induced(&self, mask: u64) -> Episode {
        let keep: Vec<usize> = ones(mask).collect();
        let mut pos = [usize::MAX; MAX_NODES];
        for (k, &v) in keep.iter().enumerate() {
            pos[v] = k;
        }
        let labels = keep.iter().map(|&v| self.labels[v]).collect();
        let succ = keep
            .iter()
            .map(|&v| ones(self.succ[v] & mask).fold(0, |m, w| m | bit(pos[w])))
            .collect();
        Episode { labels, succ }
    }

    /// `G - v` for a sink `v`.
    pub fn remove_sink(&self, v: usize) -> Result<Episode> {
        if v >= self.len() || self.succ[v] != 0 {
            return Err(Error::NotASink(v));
        }
        Ok(self.induced(self.all() & !bit(v)))
    }

    /// Whether `mask` is downward closed.
    pub fn is_prefix(&self, mask: u64) -> bool {
        ones(mask).all(|v| self.pred(v) & !mask == 0)
    }

    /// All downward-closed node subsets, ordered by size then mask value.
    /// Fails once more than `cap` subsets have been found.
    pub fn prefix_masks(&self, cap: usize) -> Result<Vec<u64>> {
        let pred: Vec<u64> = (0..self.len()).map(|v| self.pred(v)).collect();
        let mut seen: HashSet<u64> = HashSet::new();
        let mut out = vec![0u64];
        seen.insert(0);
        let mut head = 0;
        while head < out.len() {
            let m = out[head];
            head += 1;
            for v in ones(self.all() & !m) {
                if pred[v] & !m == 0 {
                    let next = m | bit(v);
                    if seen.insert(next) {
                        if out.len() >= cap {
                            return Err(Error::StateCap {
                                episode: format!("{self:?}"),
                                cap,
                            });
                        }
                        out.push(next);
                    }
                }
            }
        }
        out.sort_by_key(|&m| (m.count_ones(), m));
        Ok(out)
    }

    /// The prefix episodes `pre(G)`, including `G` and the empty episode.
    pub fn prefix_episodes(&self) -> Vec<Episode> {
        self.prefix_masks(usize::MAX)
            .expect("uncapped")
            .into_iter()
            .map(|m| self.induced(m))
            .collect()
    }

    /// Equal-labelled nodes are always comparable.
    pub fn is_strict(&self) -> bool {
        let n = self.len();
        (0..n).all(|u| {
            (u + 1..n).all(|v| self.labels[u] != self.labels[v] || self.comparable(u, v))
        })
    }

    pub fn classify(&self) -> EpisodeClass {
        let n = self.len();
        let pairs = self.order_size();
        if pairs == 0 {
            EpisodeClass::Parallel
        } else if pairs == n * (n - 1) / 2 {
            EpisodeClass::Serial
        } else {
            EpisodeClass::General
        }
    }

    /// `G` plus the relation `u < v`, re-closed. `None` if the pair is
    /// already comparable.
    pub fn with_order(&self, u: usize, v: usize) -> Option<Episode> {
        if u == v || self.comparable(u, v) {
            return None;
        }
        let mut succ = self.succ.clone();
        let down = bit(v) | succ[v];
        for w in 0..self.len() {
            if w == u || succ[w] & bit(u) != 0 {
                succ[w] |= down;
            }
        }
        Some(Episode {
            labels: self.labels.clone(),
            succ,
        })
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        canon::canonical_key(self)
    }

    /// Relabels nodes by the permutation `order` (new node `k` is old node
    /// `order[k]`).
    pub fn permuted(&self, order: &[usize]) -> Episode {
        let n = self.len();
        let mut pos = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let labels = order.iter().map(|&v| self.labels[v]).collect();
        let succ = order
            .iter()
            .map(|&v| ones(self.succ[v]).fold(0, |m, w| m | bit(pos[w])))
            .collect();
        Episode { labels, succ }
    }

    /// Whether there is an injective, label- and order-preserving map from
    /// `self` into `other`. Exponential; refuses episodes above `guard`
    /// nodes.
    pub fn embeds_into(&self, other: &Episode, guard: usize) -> Result<bool> {
        if self.len() > guard || other.len() > guard {
            return Err(Error::Guard(format!(
                "embedding test limited to {guard} nodes"
            )));
        }
        if self.len() > other.len() {
            return Ok(false);
        }
        let order = self.topological_order();
        let mut map = vec![usize::MAX; self.len()];
        Ok(embed(self, other, &order, 0, &mut map, 0))
    }

    /// A topological order of the nodes.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&v| self.pred(v).count_ones());
        order
    }

    /// Brute-force coverage: an injective map from nodes to positions of `s`
    /// respecting labels and order.
    pub fn covers_bruteforce(&self, s: &[Symbol], guard: usize) -> Result<bool> {
        if self.len() > guard {
            return Err(Error::Guard(format!(
                "coverage search limited to {guard} nodes, episode has {}",
                self.len()
            )));
        }
        let order = self.topological_order();
        let mut pos = vec![usize::MAX; self.len()];
        let mut used = vec![false; s.len()];
        Ok(cover(self, s, &order, 0, &mut pos, &mut used))
    }

    /// Coverage of a whole event sequence.
    pub fn covered_by(&self, s: &EventSequence) -> Result<bool> {
        self.covers_bruteforce(s.symbols(), COVER_GUARD)
    }
}

fn close(succ: &mut [u64]) {
    loop {
        let mut changed = false;
        for i in 0..succ.len() {
            let mut m = succ[i];
            for j in ones(succ[i]) {
                m |= succ[j];
            }
            if m != succ[i] {
                succ[i] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

fn cover(
    g: &Episode,
    s: &[Symbol],
    order: &[usize],
    k: usize,
    pos: &mut [usize],
    used: &mut [bool],
) -> bool {
    if k == order.len() {
        return true;
    }
    let v = order[k];
    let lo = ones(g.pred(v)).map(|u| pos[u] + 1).max().unwrap_or(0);
    let hi = ones(g.succ(v))
        .filter(|&u| pos[u] != usize::MAX)
        .map(|u| pos[u])
        .min()
        .unwrap_or(s.len());
    for p in lo..hi {
        if !used[p] && s[p] == g.label(v) {
            used[p] = true;
            pos[v] = p;
            if cover(g, s, order, k + 1, pos, used) {
                return true;
            }
            pos[v] = usize::MAX;
            used[p] = false;
        }
    }
    false
}

fn embed(g: &Episode, h: &Episode, order: &[usize], k: usize, map: &mut [usize], used: u64) -> bool {
    if k == order.len() {
        return true;
    }
    let v = order[k];
    for t in 0..h.len() {
        if used & bit(t) != 0 || h.label(t) != g.label(v) {
            continue;
        }
        let ok = (0..k).all(|j| {
            let u = order[j];
            let mu = map[u];
            (!g.precedes(u, v) || h.precedes(mu, t)) && (!g.precedes(v, u) || h.precedes(t, mu))
        });
        if ok {
            map[v] = t;
            if embed(g, h, order, k + 1, map, used | bit(t)) {
                return true;
            }
        }
    }
    map[v] = usize::MAX;
    false
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub fn sym(c: char) -> Symbol {
        Symbol(c as u32 - 'a' as u32)
    }

    pub fn syms(s: &str) -> Vec<Symbol> {
        s.chars().filter(|c| !c.is_whitespace()).map(sym).collect()
    }

    /// a -> {b, c} -> d
    pub fn diamond() -> Episode {
        Episode::new(syms("abcd"), &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    /// {a, b} -> c
    pub fn join_example() -> Episode {
        Episode::new(syms("abc"), &[(0, 2), (1, 2)]).unwrap()
    }

    /// `a -> b` next to an unrelated `a`.
    pub fn toy2() -> Episode {
        Episode::new(syms("aab"), &[(0, 2)]).unwrap()
    }

    #[test]
    fn sinks_examples() {
        assert_eq!(diamond().sinks(), vec![3]);
        assert_eq!(Episode::parallel(&syms("ab")).sinks(), vec![0, 1]);
        assert_eq!(Episode::serial(&syms("abc")).sinks(), vec![2]);
    }

    #[test]
    fn remove_sink_examples() {
        let g2 = diamond().remove_sink(3).unwrap();
        assert_eq!(g2, Episode::new(syms("abc"), &[(0, 1), (0, 2)]).unwrap());
        assert!(Episode::serial(&syms("a")).remove_sink(0).unwrap().is_empty());
        assert_eq!(
            Episode::serial(&syms("abc")).remove_sink(2).unwrap(),
            Episode::serial(&syms("ab"))
        );
        assert!(matches!(diamond().remove_sink(0), Err(Error::NotASink(0))));
    }

    #[test]
    fn prefix_counts() {
        assert_eq!(diamond().prefix_episodes().len(), 6);
        assert_eq!(Episode::serial(&syms("a")).prefix_episodes().len(), 2);
        assert_eq!(Episode::parallel(&syms("abcde")).prefix_episodes().len(), 32);
        assert!(diamond().prefix_masks(5).is_err());
    }

    #[test]
    fn coverage_examples() {
        assert!(diamond().covers_bruteforce(&syms("acbadbc"), 8).unwrap());
        assert!(Episode::empty().covers_bruteforce(&syms("abc"), 8).unwrap());
        assert!(!Episode::serial(&syms("ab")).covers_bruteforce(&syms("ba"), 8).unwrap());
        assert!(Episode::parallel(&syms("aa")).covers_bruteforce(&syms("aba"), 8).unwrap());
        assert!(!Episode::parallel(&syms("aa")).covers_bruteforce(&syms("ab"), 8).unwrap());
        assert!(Episode::serial(&syms("a")).covers_bruteforce(&syms("a"), 0).is_err());
    }

    #[test]
    fn strictness_and_class() {
        assert!(!toy2().is_strict());
        assert!(diamond().is_strict());
        assert!(Episode::serial(&syms("aa")).is_strict());
        assert_eq!(Episode::serial(&syms("abc")).classify(), EpisodeClass::Serial);
        assert_eq!(Episode::parallel(&syms("abc")).classify(), EpisodeClass::Parallel);
        assert_eq!(diamond().classify(), EpisodeClass::General);
        assert_eq!(Episode::serial(&syms("a")).classify(), EpisodeClass::Parallel);
    }

    #[test]
    fn closure_and_reduction() {
        let g = Episode::new(syms("abc"), &[(0, 1), (1, 2)]).unwrap();
        assert!(g.precedes(0, 2));
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(g, Episode::serial(&syms("abc")));
        assert!(matches!(
            Episode::new(syms("ab"), &[(0, 1), (1, 0)]),
            Err(Error::Cyclic)
        ));
    }

    #[test]
    fn with_order_closes() {
        let g = Episode::parallel(&syms("abc"));
        let g = g.with_order(0, 1).unwrap().with_order(1, 2).unwrap();
        assert_eq!(g, Episode::serial(&syms("abc")));
        assert!(g.with_order(0, 2).is_none());
    }

    #[test]
    fn embedding() {
        let par = Episode::parallel(&syms("ab"));
        let ser = Episode::serial(&syms("ab"));
        assert!(par.embeds_into(&ser, 8).unwrap());
        assert!(!ser.embeds_into(&par, 8).unwrap());
        assert!(ser.embeds_into(&diamond(), 8).unwrap());
        assert!(!Episode::serial(&syms("ba")).embeds_into(&diamond(), 8).unwrap());
    }

    pub fn arb_episode(max_nodes: usize, alphabet: u32) -> impl Strategy<Value = Episode> {
        (1..=max_nodes)
            .prop_flat_map(move |n| {
                (
                    prop::collection::vec(0..alphabet, n),
                    prop::collection::vec(any::<bool>(), n * n),
                )
            })
            .prop_map(|(labels, bits)| {
                let n = labels.len();
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        if bits[i * n + j] {
                            edges.push((i, j));
                        }
                    }
                }
                Episode::new(labels.into_iter().map(Symbol).collect(), &edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn prefixes_are_downward_closed(g in arb_episode(6, 3)) {
            let masks = g.prefix_masks(usize::MAX).unwrap();
            let brute = (0..=g.all()).filter(|&m| g.is_prefix(m)).count();
            prop_assert_eq!(masks.len(), brute);
            for m in masks {
                prop_assert!(g.is_prefix(m));
            }
        }

        #[test]
        fn coverage_monotone_on_prefixes(
            g in arb_episode(4, 3),
            s in prop::collection::vec(0u32..3, 0..10),
        ) {
            let s: Vec<Symbol> = s.into_iter().map(Symbol).collect();
            if g.covers_bruteforce(&s, 8).unwrap() {
                for h in g.prefix_episodes() {
                    prop_assert!(h.covers_bruteforce(&s, 8).unwrap());
                }
            }
        }

        #[test]
        fn reduction_round_trip(g in arb_episode(7, 3)) {
            let h = Episode::new(g.labels().to_vec(), &g.edges()).unwrap();
            prop_assert_eq!(h, g);
        }
    }
}
