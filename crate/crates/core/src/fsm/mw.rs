use super::{build_episode_machine, join_with, simplify, Incoming, Machine, StateId, StateTag};
use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::seq::Symbol;

/// Automaton recognising minimal windows: greedy descent from `alpha` over a
/// window lands in `omega` iff the window is a minimal window of the episode.
#[derive(Clone, Debug)]
pub struct MinimalWindowMachine {
    machine: Machine,
    alpha: StateId,
    omega: Vec<StateId>,
    theta: Vec<StateId>,
    psi: StateId,
    is_omega: Vec<bool>,
    labels: Vec<Symbol>,
    sizes: MachineSizes,
    simple: Machine,
}

/// State and edge counts of the intermediate constructions.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct MachineSizes {
    pub episode_states: usize,
    pub episode_edges: usize,
    pub simple_states: usize,
    pub simple_edges: usize,
    pub window_states: usize,
    pub window_edges: usize,
}

/// Builds the minimal-window machine of `g`.
///
/// The simple machine `M` of `g` is extended once with a new source `J` above
/// its source `I`, and once with a new sink `T` below its sink `S`, both via
/// wildcard edges. The join of the two from `(S, T)` is taken with every
/// `(J, ·)` and `(Y, Y)` pair collapsed into `ψ`; then states that cannot
/// reach `Ω = {(I, Y) : Y ≠ I}` are merged into `ψ` as well.
pub fn build_minimal_window_machine(g: &Episode, cap: usize) -> Result<MinimalWindowMachine> {
    let mg = build_episode_machine(g, cap)?;
    let m = simplify(&mg, cap)?;
    let n = m.num_states();
    let (i, s) = (m.source(), m.sinks()[0]);
    let j = n;
    let t = n;

    let mut tags1 = m.tags().to_vec();
    tags1.push(StateTag::Extra("J"));
    let mut inc1: Vec<Incoming> = (0..n).map(|x| m.incoming(x).clone()).collect();
    inc1[i].wildcard = Some(j);
    inc1.push(Incoming::default());
    let m1 = Machine::from_parts(tags1, inc1)?;

    let mut tags2 = m.tags().to_vec();
    tags2.push(StateTag::Extra("T"));
    let mut inc2: Vec<Incoming> = (0..n).map(|x| m.incoming(x).clone()).collect();
    inc2.push(Incoming {
        explicit: Vec::new(),
        wildcard: Some(s),
    });
    let m2 = Machine::from_parts(tags2, inc2)?;

    let joined = join_with(&m1, &m2, &[(s, t)], |z1, z2| z1 == j || z1 == z2, cap)?;
    let is_omega_raw: Vec<bool> = joined
        .tags()
        .iter()
        .map(|tag| matches!(tag, StateTag::Pair(a, b) if *a == i && *b != i))
        .collect();
    let keep = reaches(&joined, &is_omega_raw, &[]);
    let (machine, map, psi) = joined.collapse(&keep)?;
    let alpha = map[joined.find(&StateTag::Pair(s, t)).expect("seed")].expect("alpha reaches omega");
    let mut is_omega = vec![false; machine.num_states()];
    for (old, new) in map.iter().enumerate() {
        if let Some(x) = new {
            is_omega[*x] = is_omega_raw[old];
        }
    }
    let omega: Vec<StateId> = (0..machine.num_states()).filter(|&x| is_omega[x]).collect();
    let below = descendants_of(&machine, alpha);
    let can = reaches(&machine, &is_omega, &[]);
    let theta: Vec<StateId> = (0..machine.num_states())
        .filter(|&x| below[x] && can[x] && x != alpha && x != psi && !is_omega[x])
        .collect();

    for x in 0..machine.num_states() {
        if machine.incoming(x).wildcard.is_some() && x != alpha && !is_omega[x] {
            return Err(Error::InvalidParameter(format!(
                "wildcard edge into intermediate state {x}"
            )));
        }
    }
    for &w in &omega {
        let inc = machine.incoming(w);
        debug_assert!(inc.explicit.is_empty() && inc.wildcard == Some(psi));
    }

    let mut labels: Vec<Symbol> = g.labels().to_vec();
    labels.sort_unstable();
    labels.dedup();
    let sizes = MachineSizes {
        episode_states: mg.num_states(),
        episode_edges: mg.num_edges(),
        simple_states: m.num_states(),
        simple_edges: m.num_edges(),
        window_states: machine.num_states(),
        window_edges: machine.num_edges(),
    };
    Ok(MinimalWindowMachine {
        machine,
        alpha,
        omega,
        theta,
        psi,
        is_omega,
        labels,
        sizes,
        simple: m,
    })
}

/// States from which some marked state (or a protected state) is reachable
/// by parent steps, plus the protected ones.
fn reaches(m: &Machine, marked: &[bool], protect: &[StateId]) -> Vec<bool> {
    let mut ok = marked.to_vec();
    for &x in m.order() {
        if ok[x] {
            continue;
        }
        let inc = m.incoming(x);
        ok[x] = inc.explicit.iter().any(|&(_, y)| ok[y]) || inc.wildcard.is_some_and(|w| ok[w]);
    }
    for &p in protect {
        ok[p] = true;
    }
    ok
}

/// States reachable from `x` by parent steps, including `x`.
fn descendants_of(m: &Machine, x: StateId) -> Vec<bool> {
    let mut seen = vec![false; m.num_states()];
    let mut stack = vec![x];
    while let Some(z) = stack.pop() {
        if std::mem::replace(&mut seen[z], true) {
            continue;
        }
        let inc = m.incoming(z);
        stack.extend(inc.explicit.iter().map(|e| e.1));
        stack.extend(inc.wildcard);
    }
    seen
}

impl MinimalWindowMachine {
    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    /// The start state `(S, T)`.
    pub fn alpha(&self) -> StateId {
        self.alpha
    }

    /// Accepting states.
    pub fn omega(&self) -> &[StateId] {
        &self.omega
    }

    pub fn is_omega(&self, x: StateId) -> bool {
        self.is_omega[x]
    }

    /// Proper intermediate states between `alpha` and `omega`.
    pub fn theta(&self) -> &[StateId] {
        &self.theta
    }

    /// The collapsed, absorbing source.
    pub fn psi(&self) -> StateId {
        self.psi
    }

    /// Distinct labels of the episode, sorted.
    pub fn labels(&self) -> &[Symbol] {
        &self.labels
    }

    pub fn sizes(&self) -> MachineSizes {
        self.sizes
    }

    /// The simple machine whose states make up the pairs. Pair components
    /// equal to its state count stand for the added source or sink.
    pub fn simple(&self) -> &Machine {
        &self.simple
    }

    /// State tagged by the pair of simple-machine states whose groups are
    /// `first` and `second`; `None` names the added source or sink.
    pub fn find_pair(&self, first: Option<&[u64]>, second: Option<&[u64]>) -> Option<StateId> {
        let n = self.simple.num_states();
        let id = |g: Option<&[u64]>| match g {
            None => Some(n),
            Some(g) => self.simple.find(&StateTag::Group(g.to_vec())),
        };
        self.machine.find(&StateTag::Pair(id(first)?, id(second)?))
    }

    /// Whether `window` is a minimal window, by greedy descent.
    pub fn accepts(&self, window: &[Symbol]) -> bool {
        self.is_omega[self.machine.greedy(self.alpha, window)]
    }

    /// The pair machine used for cross-moments: the join of this machine
    /// with itself seeded at `(θ, α)` for every `θ ∈ Θ`, keeping only pairs
    /// that can still reach a target `(ω, θ)` with `ω ∈ Ω`, `θ ∈ Θ`.
    pub fn cross_machine(&self, cap: usize) -> Result<CrossMachine> {
        let m = &self.machine;
        let (alpha, psi) = (self.alpha, self.psi);
        let seeds: Vec<(StateId, StateId)> = self.theta.iter().map(|&t| (t, alpha)).collect();
        if seeds.is_empty() {
            return Ok(CrossMachine {
                machine: None,
                seed_of: vec![None; m.num_states()],
                targets: Vec::new(),
            });
        }
        let is_theta = {
            let mut v = vec![false; m.num_states()];
            for &t in &self.theta {
                v[t] = true;
            }
            v
        };
        let dead = |z1: StateId, z2: StateId| {
            z1 == psi || z2 == psi || self.is_omega[z2] || (self.is_omega[z1] && !is_theta[z2])
        };
        let joined = join_with(m, m, &seeds, dead, cap)?;
        let target_raw: Vec<Option<(StateId, StateId)>> = joined
            .tags()
            .iter()
            .map(|tag| match tag {
                StateTag::Pair(a, b) if self.is_omega[*a] && is_theta[*b] => Some((*a, *b)),
                _ => None,
            })
            .collect();
        let marked: Vec<bool> = target_raw.iter().map(Option::is_some).collect();
        let seed_ids: Vec<StateId> = seeds
            .iter()
            .map(|&(a, b)| joined.find(&StateTag::Pair(a, b)).expect("seed present"))
            .collect();
        let keep = reaches(&joined, &marked, &seed_ids);
        let (machine, map, _) = joined.collapse(&keep)?;
        let mut seed_of = vec![None; m.num_states()];
        for (&(t, _), &id) in seeds.iter().zip(&seed_ids) {
            seed_of[t] = map[id];
        }
        let mut targets = Vec::new();
        for (old, t) in target_raw.iter().enumerate() {
            if let (Some(&(_, theta)), Some(new)) = (t.as_ref(), map[old]) {
                targets.push((new, theta));
            }
        }
        Ok(CrossMachine {
            machine: Some(machine),
            seed_of,
            targets,
        })
    }
}

/// Pair machine of the cross-moment computation.
#[derive(Clone, Debug)]
pub struct CrossMachine {
    /// `None` when there are no intermediate states.
    pub machine: Option<Machine>,
    /// For each `θ ∈ Θ` of the window machine, the state `(θ, α)`.
    pub seed_of: Vec<Option<StateId>>,
    /// Target states `(ω, θ)` with their `θ` component.
    pub targets: Vec<(StateId, StateId)>,
}
