use std::collections::HashMap;

use super::{Incoming, Interner, Machine, StateId, StateTag};
use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::seq::Symbol;

/// `M_G`: one state per prefix episode, and an edge `(G - v, G)` labelled
/// `lab(v)` for every sink `v` of every prefix `G`.
pub fn build_episode_machine(g: &Episode, cap: usize) -> Result<Machine> {
    if g.is_empty() {
        return Err(Error::EmptyInput("episode"));
    }
    let masks = g.prefix_masks(cap).map_err(|e| match e {
        Error::StateCap { cap, .. } => Error::StateCap {
            episode: format!("{:?}", g.labels()),
            cap,
        },
        other => other,
    })?;
    let index: HashMap<u64, StateId> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut inc = vec![Incoming::default(); masks.len()];
    for (x, &f) in masks.iter().enumerate() {
        let mut sinks = g.sinks_in(f);
        while sinks != 0 {
            let v = sinks.trailing_zeros() as usize;
            sinks &= sinks - 1;
            inc[x].explicit.push((g.label(v), index[&(f & !(1u64 << v))]));
        }
    }
    let tags = masks.into_iter().map(StateTag::Prefix).collect();
    Machine::from_parts(tags, inc)
}

/// Merges states so that no state has two incoming edges with the same label.
///
/// States of the result are sets of states of `m`, grown from the sink: the
/// parent of a set `X` on `a` collects the `a`-parents of its members plus
/// the members without an incoming `a`, or is the source alone if the source
/// is among the `a`-parents.
pub fn simplify(m: &Machine, cap: usize) -> Result<Machine> {
    if m.sinks().len() != 1 {
        return Err(Error::InvalidParameter(
            "simplify expects a machine with a single sink".into(),
        ));
    }
    if m.incoming(m.sinks()[0]).wildcard.is_some() || (0..m.num_states()).any(|x| m.incoming(x).wildcard.is_some()) {
        return Err(Error::InvalidParameter(
            "simplify expects a machine without wildcard edges".into(),
        ));
    }
    let src = m.source();
    let what = || "simplified machine".to_string();
    let mut sets: Interner<Vec<StateId>> = Interner::new(cap);
    let mut edges: Vec<Vec<(Symbol, StateId)>> = Vec::new();
    sets.get(vec![m.sinks()[0]], what)?;
    let mut head = 0;
    while head < sets.len() {
        let x = sets.key(head).clone();
        let mut labels: Vec<Symbol> = x
            .iter()
            .flat_map(|&s| m.incoming(s).explicit.iter().map(|e| e.0))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        let mut out = Vec::with_capacity(labels.len());
        for a in labels {
            let mut sub: Vec<StateId> = Vec::new();
            let mut stay: Vec<StateId> = Vec::new();
            for &s in &x {
                let i = m.incoming(s);
                let mut hit = false;
                for &(b, y) in &i.explicit {
                    if b == a {
                        sub.push(y);
                        hit = true;
                    }
                }
                if !hit {
                    stay.push(s);
                }
            }
            let mut parent = if sub.contains(&src) {
                vec![src]
            } else {
                sub.extend(stay);
                sub
            };
            parent.sort_unstable();
            parent.dedup();
            let (id, _) = sets.get(parent, what)?;
            out.push((a, id));
        }
        edges.push(out);
        head += 1;
    }
    let groups = sets.into_keys();
    let tags = groups
        .iter()
        .map(|g| {
            let masks = g
                .iter()
                .map(|&s| match m.tag(s) {
                    StateTag::Prefix(mask) => *mask,
                    _ => s as u64,
                })
                .collect();
            StateTag::Group(masks)
        })
        .collect();
    let inc = edges
        .into_iter()
        .map(|explicit| Incoming {
            explicit,
            wildcard: None,
        })
        .collect();
    Machine::from_parts(tags, inc)
}
