//! Reverse-deterministic DAG automata over prefix episodes.
//!
//! An edge `(y, x)` labelled `a` is stored on the child `x` as the pair
//! `(a, y)`: greedy descent reads a sequence right to left and moves from `x`
//! to `y` on `a`. A state may also carry a wildcard parent, taken on every
//! symbol that has no explicit edge into the state.

mod build;
mod join;
mod mw;

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::seq::{Symbol, SymbolTable};

pub use build::{build_episode_machine, simplify};
pub use join::{join, join_with};
pub use mw::{build_minimal_window_machine, CrossMachine, MachineSizes, MinimalWindowMachine};

/// Default limit on the number of states of any constructed machine.
pub const DEFAULT_STATE_CAP: usize = 1 << 16;

pub type StateId = usize;

/// Provenance of a state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StateTag {
    /// Prefix episode given by its node subset.
    Prefix(u64),
    /// Group of prefix episodes of a simplified machine.
    Group(Vec<u64>),
    /// Pair of states of two joined machines.
    Pair(StateId, StateId),
    /// State added by a construction, such as an extra source or sink.
    Extra(&'static str),
    /// The collapsed source `ψ`.
    Collapsed,
}

fn write_mask(f: &mut String, m: u64) {
    f.push('{');
    let mut first = true;
    for i in 0..64 {
        if m & (1 << i) != 0 {
            if !first {
                f.push(',');
            }
            let _ = write!(f, "{i}");
            first = false;
        }
    }
    f.push('}');
}

impl fmt::Display for StateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        match self {
            StateTag::Prefix(m) => write_mask(&mut s, *m),
            StateTag::Group(ms) => {
                for (k, m) in ms.iter().enumerate() {
                    if k > 0 {
                        s.push('/');
                    }
                    write_mask(&mut s, *m);
                }
            }
            StateTag::Pair(a, b) => {
                let _ = write!(s, "({a},{b})");
            }
            StateTag::Extra(name) => s.push_str(name),
            StateTag::Collapsed => s.push_str("psi"),
        }
        f.write_str(&s)
    }
}

/// Incoming edges of one state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Incoming {
    /// `(label, parent)`, sorted by label.
    pub explicit: Vec<(Symbol, StateId)>,
    /// Parent taken on every label without an explicit edge.
    pub wildcard: Option<StateId>,
}

impl Incoming {
    pub fn is_empty(&self) -> bool {
        self.explicit.is_empty() && self.wildcard.is_none()
    }

    /// Drops explicit edges that lead where the wildcard would.
    pub(crate) fn normalize(&mut self) {
        self.explicit.sort_by_key(|e| e.0);
        if let Some(w) = self.wildcard {
            self.explicit.retain(|e| e.1 != w);
        }
    }
}

/// A single-source DAG automaton.
#[derive(Clone, Debug)]
pub struct Machine {
    tags: Vec<StateTag>,
    inc: Vec<Incoming>,
    order: Vec<StateId>,
    source: StateId,
    sinks: Vec<StateId>,
}

impl Machine {
    /// Assembles a machine, checking acyclicity and computing a
    /// parents-first state order.
    pub fn from_parts(tags: Vec<StateTag>, mut inc: Vec<Incoming>) -> Result<Machine> {
        let n = tags.len();
        assert_eq!(n, inc.len());
        if n == 0 {
            return Err(Error::EmptyInput("machine"));
        }
        for i in &mut inc {
            i.explicit.sort_by_key(|e| e.0);
        }
        let mut has_child = vec![false; n];
        for i in &inc {
            for &(_, y) in &i.explicit {
                has_child[y] = true;
            }
            if let Some(w) = i.wildcard {
                has_child[w] = true;
            }
        }
        let order = parents_first(&inc)?;
        let sources: Vec<StateId> = (0..n).filter(|&x| inc[x].is_empty()).collect();
        let source = match sources.as_slice() {
            [s] => *s,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "machine must have exactly one source, found {}",
                    sources.len()
                )))
            }
        };
        let sinks = (0..n).filter(|&x| !has_child[x]).collect();
        Ok(Machine {
            tags,
            inc,
            order,
            source,
            sinks,
        })
    }

    pub fn num_states(&self) -> usize {
        self.tags.len()
    }

    pub fn num_edges(&self) -> usize {
        self.inc
            .iter()
            .map(|i| i.explicit.len() + usize::from(i.wildcard.is_some()))
            .sum()
    }

    pub fn tag(&self, x: StateId) -> &StateTag {
        &self.tags[x]
    }

    pub fn tags(&self) -> &[StateTag] {
        &self.tags
    }

    pub fn incoming(&self, x: StateId) -> &Incoming {
        &self.inc[x]
    }

    /// States ordered so that every parent precedes its children.
    pub fn order(&self) -> &[StateId] {
        &self.order
    }

    pub fn source(&self) -> StateId {
        self.source
    }

    pub fn sinks(&self) -> &[StateId] {
        &self.sinks
    }

    /// State with the given tag.
    pub fn find(&self, tag: &StateTag) -> Option<StateId> {
        self.tags.iter().position(|t| t == tag)
    }

    /// No state has two incoming edges with the same effective label.
    pub fn is_simple(&self) -> bool {
        self.inc
            .iter()
            .all(|i| i.explicit.windows(2).all(|w| w[0].0 != w[1].0))
    }

    /// One greedy step: the parent reached on `a`, or `x` itself.
    #[inline]
    pub fn step(&self, x: StateId, a: Symbol) -> StateId {
        let inc = &self.inc[x];
        match inc.explicit.binary_search_by_key(&a, |e| e.0) {
            Ok(k) => inc.explicit[k].1,
            Err(_) => inc.wildcard.unwrap_or(x),
        }
    }

    /// Parent reached on a symbol without an explicit edge into `x`.
    #[inline]
    pub fn step_other(&self, x: StateId) -> StateId {
        self.inc[x].wildcard.unwrap_or(x)
    }

    /// Folds [`Machine::step`] over `s` from its last symbol to its first.
    pub fn greedy(&self, x: StateId, s: &[Symbol]) -> StateId {
        s.iter().rev().fold(x, |y, &a| self.step(y, a))
    }

    /// GraphViz rendering; wildcard edges are labelled `*`.
    pub fn to_dot(&self, table: Option<&SymbolTable>) -> String {
        let mut out = String::from("digraph M {\n");
        for (x, t) in self.tags.iter().enumerate() {
            let _ = writeln!(out, "  n{x} [label=\"{t}\"];");
        }
        for x in 0..self.num_states() {
            let inc = &self.inc[x];
            for &(a, y) in &inc.explicit {
                let name = match table {
                    Some(t) if a.index() < t.len() => t.token(a).replace('"', "\\\""),
                    _ => a.to_string(),
                };
                let _ = writeln!(out, "  n{y} -> n{x} [label=\"{name}\"];");
            }
            if let Some(w) = inc.wildcard {
                let _ = writeln!(out, "  n{w} -> n{x} [label=\"*\"];");
            }
        }
        out.push_str("}\n");
        out
    }

    /// Replaces every state outside `keep` by a single collapsed state,
    /// redirecting edges into it. Returns the new machine, the old-to-new
    /// id map (`None` for merged states) and the id of the collapsed state.
    pub(crate) fn collapse(&self, keep: &[bool]) -> Result<(Machine, Vec<Option<StateId>>, StateId)> {
        let n = self.num_states();
        let existing = self.tags.iter().position(|t| *t == StateTag::Collapsed);
        let mut map = vec![None; n];
        let mut tags = Vec::new();
        for x in 0..n {
            if keep[x] && Some(x) != existing {
                map[x] = Some(tags.len());
                tags.push(self.tags[x].clone());
            }
        }
        let psi = tags.len();
        tags.push(StateTag::Collapsed);
        let to = |y: StateId| map[y].unwrap_or(psi);
        let mut inc = vec![Incoming::default(); tags.len()];
        for x in 0..n {
            if let Some(nx) = map[x] {
                let old = &self.inc[x];
                let mut i = Incoming {
                    explicit: old.explicit.iter().map(|&(a, y)| (a, to(y))).collect(),
                    wildcard: old.wildcard.map(to),
                };
                i.normalize();
                inc[nx] = i;
            }
        }
        let m = Machine::from_parts(tags, inc)?;
        Ok((m, map, psi))
    }
}

fn parents_first(inc: &[Incoming]) -> Result<Vec<StateId>> {
    let n = inc.len();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(StateId, usize)> = Vec::new();
    let parent = |x: StateId, k: usize| -> Option<StateId> {
        let i = &inc[x];
        if k < i.explicit.len() {
            Some(i.explicit[k].1)
        } else if k == i.explicit.len() {
            i.wildcard
        } else {
            None
        }
    };
    for root in 0..n {
        if mark[root] != 0 {
            continue;
        }
        stack.push((root, 0));
        mark[root] = 1;
        while let Some(top) = stack.last_mut() {
            let (x, k) = *top;
            if k > inc[x].explicit.len() {
                mark[x] = 2;
                order.push(x);
                stack.pop();
                continue;
            }
            top.1 += 1;
            let p = parent(x, k);
            if let Some(y) = p {
                match mark[y] {
                    0 => {
                        mark[y] = 1;
                        stack.push((y, 0));
                    }
                    1 => return Err(Error::Cyclic),
                    _ => {}
                }
            }
        }
    }
    Ok(order)
}

/// Interning helper used by the subset and pair constructions.
pub(crate) struct Interner<K> {
    ids: HashMap<K, StateId>,
    keys: Vec<K>,
    cap: usize,
}

impl<K: Clone + Eq + std::hash::Hash> Interner<K> {
    pub(crate) fn new(cap: usize) -> Self {
        Self {
            ids: HashMap::new(),
            keys: Vec::new(),
            cap,
        }
    }

    /// Id of `k` and whether it is new.
    pub(crate) fn get(&mut self, k: K, what: impl FnOnce() -> String) -> Result<(StateId, bool)> {
        if let Some(&id) = self.ids.get(&k) {
            return Ok((id, false));
        }
        if self.keys.len() >= self.cap {
            return Err(Error::StateCap {
                episode: what(),
                cap: self.cap,
            });
        }
        let id = self.keys.len();
        self.ids.insert(k.clone(), id);
        self.keys.push(k);
        Ok((id, true))
    }

    pub(crate) fn key(&self, id: StateId) -> &K {
        &self.keys[id]
    }

    pub(crate) fn len(&self) -> usize {
        self.keys.len()
    }

    pub(crate) fn into_keys(self) -> Vec<K> {
        self.keys
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Machine {
        let tags = vec![StateTag::Prefix(0), StateTag::Prefix(1)];
        let inc = vec![
            Incoming::default(),
            Incoming {
                explicit: vec![(Symbol(0), 0)],
                wildcard: None,
            },
        ];
        Machine::from_parts(tags, inc).unwrap()
    }

    #[test]
    fn two_state_dot() {
        let m = chain();
        let dot = m.to_dot(None);
        assert_eq!(dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), 2);
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 1);
        assert_eq!(dot, m.to_dot(None));
    }

    #[test]
    fn step_and_greedy() {
        let m = chain();
        assert_eq!(m.step(1, Symbol(0)), 0);
        assert_eq!(m.step(1, Symbol(1)), 1);
        assert_eq!(m.step(0, Symbol(0)), 0);
        assert_eq!(m.greedy(1, &[]), 1);
        assert_eq!(m.greedy(1, &[Symbol(0), Symbol(1)]), 0);
        assert_eq!(m.source(), 0);
        assert_eq!(m.sinks(), &[1]);
        assert_eq!(m.order(), &[0, 1]);
    }

    #[test]
    fn cycles_rejected() {
        let tags = vec![StateTag::Prefix(0), StateTag::Prefix(1), StateTag::Prefix(2)];
        let inc = vec![
            Incoming::default(),
            Incoming {
                explicit: vec![(Symbol(0), 2)],
                wildcard: None,
            },
            Incoming {
                explicit: vec![(Symbol(0), 1)],
                wildcard: None,
            },
        ];
        assert!(matches!(Machine::from_parts(tags, inc), Err(Error::Cyclic)));
    }
}
