//! Level-wise discovery of frequent strict episodes.
//!
//! Support is the number of disjoint minimal windows of length at most
//! `max_window`. Mining runs in two phases: Apriori over label multisets
//! (parallel episodes), then breadth-first order refinement of every
//! frequent multiset. A closedness filter drops candidates that have an
//! explored super-episode with the same support.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode::{CanonicalKey, Episode, EpisodeClass};
use crate::error::{Error, Result};
use crate::fsm::{build_minimal_window_machine, DEFAULT_STATE_CAP};
use crate::scan::{disjoint_support, minimal_windows_indexed, PositionIndex};
use crate::seq::{EventSequence, Symbol};

/// Largest episode the super-episode test will handle.
pub const CLOSEDNESS_GUARD: usize = 8;

/// Which episode classes the miner reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    pub serial: bool,
    pub parallel: bool,
    pub general: bool,
}

impl ClassSet {
    pub fn all() -> Self {
        Self { serial: true, parallel: true, general: true }
    }

    pub fn contains(&self, c: EpisodeClass) -> bool {
        match c {
            EpisodeClass::Serial => self.serial,
            EpisodeClass::Parallel => self.parallel,
            EpisodeClass::General => self.general,
        }
    }
}

impl Default for ClassSet {
    fn default() -> Self {
        Self::all()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinerConfig {
    /// Minimum number of disjoint minimal windows.
    pub min_support: usize,
    /// Longest window that counts towards support.
    pub max_window: usize,
    pub max_nodes: usize,
    pub classes: ClassSet,
    /// State cap for each window machine; larger candidates are skipped.
    pub state_cap: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            min_support: 5,
            max_window: 15,
            max_nodes: 5,
            classes: ClassSet::all(),
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.min_support < 1 {
            return bad("min_support must be at least 1");
        }
        if self.max_window < 2 {
            return bad("max_window must be at least 2");
        }
        if self.max_nodes < 1 || self.max_nodes > 64 {
            return bad("max_nodes must lie in 1..=64");
        }
        Ok(())
    }
}

/// A frequent episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Mined {
    pub episode: Episode,
    pub support: usize,
}

/// Mining output.
#[derive(Clone, Debug, Default)]
pub struct MineResult {
    /// Sorted by support (descending), then canonical key.
    pub episodes: Vec<Mined>,
    /// Candidates dropped because their machine hit the state cap.
    pub skipped: usize,
}

/// Support counting against one sequence.
pub struct Miner<'a> {
    s: &'a EventSequence,
    index: PositionIndex,
    cfg: &'a MinerConfig,
}

enum Support {
    Count(usize),
    TooLarge,
}

impl<'a> Miner<'a> {
    pub fn new(s: &'a EventSequence, cfg: &'a MinerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { s, index: PositionIndex::new(s), cfg })
    }

    /// Disjoint minimal windows of `g` no longer than `max_window`.
    pub fn support(&self, g: &Episode) -> Result<usize> {
        match self.try_support(g)? {
            Support::Count(n) => Ok(n),
            Support::TooLarge => Err(Error::StateCap {
                episode: format!("{:?}", g.labels()),
                cap: self.cfg.state_cap,
            }),
        }
    }

    fn try_support(&self, g: &Episode) -> Result<Support> {
        if g.len() == 1 {
            return Ok(Support::Count(self.index.of(g.label(0)).len()));
        }
        let mw = match build_minimal_window_machine(g, self.cfg.state_cap) {
            Ok(m) => m,
            Err(Error::StateCap { .. }) => return Ok(Support::TooLarge),
            Err(e) => return Err(e),
        };
        let r = minimal_windows_indexed(self.s, &self.index, &mw, Some(self.cfg.max_window));
        Ok(Support::Count(disjoint_support(&r.windows)))
    }

    /// Frequent label multisets as parallel episodes, with supports.
    pub fn mine_parallel(&self) -> Result<(Vec<Mined>, usize)> {
        let cfg = self.cfg;
        let t = cfg.min_support;
        let mut out = Vec::new();
        let mut skipped = 0;
        let mut level: Vec<Vec<Symbol>> = (0..self.s.alphabet_size())
            .map(|a| Symbol(a as u32))
            .filter(|&a| self.index.of(a).len() >= t)
            .map(|a| vec![a])
            .collect();
        for sets in &level {
            out.push(Mined {
                episode: Episode::parallel(sets),
                support: self.index.of(sets[0]).len(),
            });
        }
        let mut k = 1;
        while k < cfg.max_nodes && !level.is_empty() {
            let candidates = if k == 1 {
                self.pair_candidates(&level)
            } else {
                next_candidates(&level)
            };
            let counted: Vec<(Vec<Symbol>, Support)> = candidates
                .into_par_iter()
                .map(|c| {
                    let sup = self.try_support(&Episode::parallel(&c))?;
                    Ok((c, sup))
                })
                .collect::<Result<_>>()?;
            level = Vec::new();
            for (c, sup) in counted {
                match sup {
                    Support::Count(n) if n >= t => {
                        out.push(Mined { episode: Episode::parallel(&c), support: n });
                        level.push(c);
                    }
                    Support::Count(_) => {}
                    Support::TooLarge => skipped += 1,
                }
            }
            k += 1;
        }
        Ok((out, skipped))
    }

    /// Pairs of frequent symbols that co-occur at least `min_support` times
    /// within `max_window`.
    fn pair_candidates(&self, singles: &[Vec<Symbol>]) -> Vec<Vec<Symbol>> {
        let frequent: HashSet<Symbol> = singles.iter().map(|v| v[0]).collect();
        let s = self.s.symbols();
        let mut counts: HashMap<(Symbol, Symbol), usize> = HashMap::new();
        for i in 0..s.len() {
            if !frequent.contains(&s[i]) {
                continue;
            }
            let end = (i + self.cfg.max_window).min(s.len());
            for &b in &s[i + 1..end] {
                if frequent.contains(&b) {
                    let key = if s[i] <= b { (s[i], b) } else { (b, s[i]) };
                    *counts.entry(key).or_default() += 1;
                }
            }
        }
        let mut out: Vec<Vec<Symbol>> = counts
            .into_iter()
            .filter(|&(_, n)| n >= self.cfg.min_support)
            .map(|((a, b), _)| vec![a, b])
            .collect();
        out.sort_unstable();
        out
    }

    /// Breadth-first order refinement of a frequent parallel episode. Returns
    /// the frequent strict refinements (including the episode itself if it
    /// is strict), deduplicated by canonical key.
    pub fn refine_orders(&self, parallel: &Episode, support: usize) -> Result<(Vec<Mined>, usize)> {
        let mut seen: HashSet<CanonicalKey> = HashSet::new();
        seen.insert(parallel.canonical_key());
        let mut out = Vec::new();
        let mut skipped = 0;
        if parallel.is_strict() {
            out.push(Mined { episode: parallel.clone(), support });
        }
        let mut frontier = vec![(parallel.clone(), support)];
        while !frontier.is_empty() {
            let mut children = Vec::new();
            for (g, sup) in &frontier {
                for u in 0..g.len() {
                    for v in 0..g.len() {
                        if let Some(c) = g.with_order(u, v) {
                            if seen.insert(c.canonical_key()) {
                                children.push((c, *sup));
                            }
                        }
                    }
                }
            }
            let counted: Vec<(Episode, usize, Support)> = children
                .into_par_iter()
                .map(|(c, parent)| {
                    let sup = self.try_support(&c)?;
                    Ok((c, parent, sup))
                })
                .collect::<Result<_>>()?;
            frontier = Vec::new();
            for (c, parent, sup) in counted {
                match sup {
                    Support::Count(n) if n >= self.cfg.min_support => {
                        debug_assert!(n <= parent, "support grew under refinement");
                        if c.is_strict() {
                            out.push(Mined { episode: c.clone(), support: n });
                        }
                        frontier.push((c, n));
                    }
                    Support::Count(_) => {}
                    Support::TooLarge => skipped += 1,
                }
            }
        }
        Ok((out, skipped))
    }

    /// Both phases, class filter, closedness filter and sorting.
    pub fn mine(&self) -> Result<MineResult> {
        let (parallel, mut skipped) = self.mine_parallel()?;
        let mut all = Vec::new();
        let mut seen = HashSet::new();
        for m in &parallel {
            let (refined, sk) = self.refine_orders(&m.episode, m.support)?;
            skipped += sk;
            for r in refined {
                if self.cfg.classes.contains(r.episode.classify()) && seen.insert(r.episode.canonical_key()) {
                    all.push(r);
                }
            }
        }
        Ok(MineResult { episodes: closedness_filter(all), skipped })
    }
}

/// Multisets of size `k + 1` all of whose `k`-sub-multisets are in `level`
/// (each sorted).
fn next_candidates(level: &[Vec<Symbol>]) -> Vec<Vec<Symbol>> {
    let known: HashSet<&[Symbol]> = level.iter().map(Vec::as_slice).collect();
    let mut sorted: Vec<&Vec<Symbol>> = level.iter().collect();
    sorted.sort_unstable();
    let mut out = BTreeSet::new();
    let k = sorted.first().map_or(0, |v| v.len());
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j][..k - 1] == sorted[i][..k - 1] {
            j += 1;
        }
        for x in i..j {
            for y in x..j {
                let mut c = sorted[x].clone();
                c.push(sorted[y][k - 1]);
                let all_frequent = (0..c.len()).all(|d| {
                    let mut sub = c.clone();
                    sub.remove(d);
                    known.contains(sub.as_slice())
                });
                if all_frequent {
                    out.insert(c);
                }
            }
        }
        i = j;
    }
    out.into_iter().collect()
}

/// Full mining run over `s`.
pub fn mine(s: &EventSequence, cfg: &MinerConfig) -> Result<MineResult> {
    Miner::new(s, cfg)?.mine()
}

/// Frequent parallel episodes of `s`.
pub fn mine_parallel(s: &EventSequence, cfg: &MinerConfig) -> Result<Vec<Mined>> {
    Ok(Miner::new(s, cfg)?.mine_parallel()?.0)
}

/// Frequent strict refinements of a parallel episode.
pub fn refine_orders(parallel: &Episode, s: &EventSequence, cfg: &MinerConfig) -> Result<Vec<Mined>> {
    let miner = Miner::new(s, cfg)?;
    let sup = miner.support(parallel)?;
    if sup < cfg.min_support {
        return Ok(Vec::new());
    }
    Ok(miner.refine_orders(parallel, sup)?.0)
}

/// Drops every candidate that has a proper super-episode with the same
/// support in the list, then sorts by support (descending) and canonical key.
pub fn closedness_filter(candidates: Vec<Mined>) -> Vec<Mined> {
    let mut by_support: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, c) in candidates.iter().enumerate() {
        by_support.entry(c.support).or_default().push(i);
    }
    let size = |g: &Episode| (g.len(), g.order_size());
    let dominated: HashSet<usize> = by_support
        .values()
        .flat_map(|group| {
            group.iter().copied().filter(|&i| {
                let a = &candidates[i].episode;
                group.iter().any(|&j| {
                    let b = &candidates[j].episode;
                    i != j
                        && size(b) > size(a)
                        && a.embeds_into(b, CLOSEDNESS_GUARD).unwrap_or(false)
                })
            })
        })
        .collect();
    let mut out: Vec<(CanonicalKey, Mined)> = candidates
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !dominated.contains(i))
        .map(|(_, m)| (m.episode.canonical_key(), m))
        .collect();
    out.sort_by(|x, y| y.1.support.cmp(&x.1.support).then_with(|| x.0.cmp(&y.0)));
    out.into_iter().map(|(_, m)| m).collect()
}
