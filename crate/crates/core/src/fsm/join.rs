use super::{Incoming, Interner, Machine, StateId, StateTag};
use crate::error::Result;
use crate::seq::Symbol;

/// Product machine tracking the greedy states of `m1` and `m2` in lockstep,
/// grown downward from `seeds`.
pub fn join(m1: &Machine, m2: &Machine, seeds: &[(StateId, StateId)], cap: usize) -> Result<Machine> {
    join_with(m1, m2, seeds, |_, _| false, cap)
}

/// [`join`], except that every pair for which `dead` holds is replaced by a
/// single collapsed state with no incoming edges. This is exact whenever the
/// dead pairs are closed under stepping.
pub fn join_with<F>(
    m1: &Machine,
    m2: &Machine,
    seeds: &[(StateId, StateId)],
    dead: F,
    cap: usize,
) -> Result<Machine>
where
    F: Fn(StateId, StateId) -> bool,
{
    const PSI: (StateId, StateId) = (usize::MAX, usize::MAX);
    let what = || format!("join of machines with {} and {} states", m1.num_states(), m2.num_states());
    let mut pairs: Interner<(StateId, StateId)> = Interner::new(cap);
    let mut inc: Vec<Incoming> = Vec::new();
    for &s in seeds {
        pairs.get(s, what)?;
    }
    let mut labels: Vec<Symbol> = Vec::new();
    let mut head = 0;
    while head < pairs.len() {
        let (z1, z2) = *pairs.key(head);
        head += 1;
        let mut here = Incoming::default();
        if (z1, z2) != PSI {
            let i1 = m1.incoming(z1);
            let i2 = m2.incoming(z2);
            labels.clear();
            labels.extend(i1.explicit.iter().map(|e| e.0));
            labels.extend(i2.explicit.iter().map(|e| e.0));
            labels.sort_unstable();
            labels.dedup();
            let mut target = |y: (StateId, StateId)| -> Result<StateId> {
                let y = if dead(y.0, y.1) { PSI } else { y };
                Ok(pairs.get(y, what)?.0)
            };
            for &a in &labels {
                let y = (m1.step(z1, a), m2.step(z2, a));
                here.explicit.push((a, target(y)?));
            }
            if i1.wildcard.is_some() || i2.wildcard.is_some() {
                let y = (m1.step_other(z1), m2.step_other(z2));
                here.wildcard = Some(target(y)?);
            }
            here.normalize();
        }
        inc.push(here);
    }
    let tags = pairs
        .into_keys()
        .into_iter()
        .map(|p| {
            if p == PSI {
                StateTag::Collapsed
            } else {
                StateTag::Pair(p.0, p.1)
            }
        })
        .collect();
    Machine::from_parts(tags, inc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episode::tests::arb_episode;
    use crate::fsm::{build_episode_machine, simplify};
    use proptest::prelude::*;

    fn simple(g: &crate::episode::Episode) -> Machine {
        simplify(&build_episode_machine(g, 1 << 16).unwrap(), 1 << 16).unwrap()
    }

    proptest! {
        #[test]
        fn greedy_on_join_is_pair_of_greedies(
            g1 in arb_episode(3, 3),
            g2 in arb_episode(3, 3),
            s in prop::collection::vec(0u32..3, 0..10),
            pick in any::<(usize, usize)>(),
        ) {
            let m1 = simple(&g1);
            let m2 = simple(&g2);
            let x1 = pick.0 % m1.num_states();
            let x2 = pick.1 % m2.num_states();
            let j = join(&m1, &m2, &[(x1, x2)], 1 << 16).unwrap();
            prop_assert!(j.is_simple());
            let s: Vec<Symbol> = s.into_iter().map(Symbol).collect();
            let root = j.find(&StateTag::Pair(x1, x2)).unwrap();
            let end = j.greedy(root, &s);
            prop_assert_eq!(j.tag(end), &StateTag::Pair(m1.greedy(x1, &s), m2.greedy(x2, &s)));
        }

        #[test]
        fn diagonal_join_mirrors_machine(g in arb_episode(4, 3), pick in any::<usize>()) {
            let m = simple(&g);
            let x = pick % m.num_states();
            let j = join(&m, &m, &[(x, x)], 1 << 16).unwrap();
            let below = (0..m.num_states())
                .filter(|&y| {
                    // y reachable from x by parent steps
                    let mut seen = vec![false; m.num_states()];
                    let mut stack = vec![x];
                    while let Some(z) = stack.pop() {
                        if seen[z] { continue; }
                        seen[z] = true;
                        for &(_, p) in &m.incoming(z).explicit { stack.push(p); }
                    }
                    seen[y]
                })
                .count();
            prop_assert_eq!(j.num_states(), below);
            for t in j.tags() {
                match t {
                    StateTag::Pair(a, b) => prop_assert_eq!(a, b),
                    _ => prop_assert!(false),
                }
            }
        }
    }
}
