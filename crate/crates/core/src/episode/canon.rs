//! Canonical keys for closed episodes.
//!
//! Nodes are first ranked by colour refinement on (label, in-degree,
//! out-degree, neighbour colours). Ties are then broken by trying every
//! permutation inside each colour class and keeping the smallest encoding.
//! If the number of permutations exceeds [`PERMUTATION_CAP`] the refined order
//! is used as is, which can split isomorphic episodes; this only happens for
//! large, highly symmetric episodes.

use super::{bit, ones, Episode};

/// Largest number of tie-breaking permutations tried.
pub const PERMUTATION_CAP: u64 = 3_628_800;

/// Opaque, totally ordered identity of an episode modulo isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(Vec<u64>);

fn refine(g: &Episode) -> Vec<usize> {
    let n = g.len();
    let pred: Vec<u64> = (0..n).map(|v| g.pred(v)).collect();
    let mut color: Vec<usize> = {
        let sig: Vec<(u32, u32, u32)> = (0..n)
            .map(|v| (g.label(v).0, pred[v].count_ones(), g.succ(v).count_ones()))
            .collect();
        rank(&sig)
    };
    let mut classes = distinct(&color);
    loop {
        let sig: Vec<(usize, Vec<usize>, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut up: Vec<usize> = ones(pred[v]).map(|u| color[u]).collect();
                let mut down: Vec<usize> = ones(g.succ(v)).map(|u| color[u]).collect();
                up.sort_unstable();
                down.sort_unstable();
                (color[v], up, down)
            })
            .collect();
        let next = rank(&sig);
        let k = distinct(&next);
        color = next;
        if k == classes {
            return color;
        }
        classes = k;
    }
}

fn rank<T: Ord + Clone>(sig: &[T]) -> Vec<usize> {
    let mut sorted: Vec<T> = sig.to_vec();
    sorted.sort();
    sorted.dedup();
    sig.iter()
        .map(|s| sorted.binary_search(s).expect("present"))
        .collect()
}

fn distinct(c: &[usize]) -> usize {
    let mut v = c.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn encode(g: &Episode, order: &[usize]) -> Vec<u64> {
    let n = order.len();
    let mut pos = [0usize; super::MAX_NODES];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let mut key = Vec::with_capacity(1 + 2 * n);
    key.push(n as u64);
    key.extend(order.iter().map(|&v| g.label(v).0 as u64));
    key.extend(
        order
            .iter()
            .map(|&v| ones(g.succ(v)).fold(0u64, |m, w| m | bit(pos[w]))),
    );
    key
}

pub(super) fn canonical_key(g: &Episode) -> CanonicalKey {
    let n = g.len();
    if n == 0 {
        return CanonicalKey(vec![0]);
    }
    let color = refine(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (color[v], v));
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut perms: u64 = 1;
    for k in 1..=n {
        if k == n || color[order[k]] != color[order[start]] {
            if k - start > 1 {
                bounds.push((start, k));
                for f in 2..=(k - start) as u64 {
                    perms = perms.saturating_mul(f);
                }
            }
            start = k;
        }
    }
    if bounds.is_empty() || perms > PERMUTATION_CAP {
        return CanonicalKey(encode(g, &order));
    }
    let mut best: Option<Vec<u64>> = None;
    search(g, &mut order, &bounds, 0, &mut best);
    CanonicalKey(best.expect("at least one permutation"))
}

fn search(
    g: &Episode,
    order: &mut [usize],
    bounds: &[(usize, usize)],
    class: usize,
    best: &mut Option<Vec<u64>>,
) {
    if class == bounds.len() {
        let key = encode(g, order);
        if best.as_ref().is_none_or(|b| key < *b) {
            *best = Some(key);
        }
        return;
    }
    let (lo, hi) = bounds[class];
    permute(g, order, lo, lo, hi, bounds, class, best);
}

#[allow(clippy::too_many_arguments)]
fn permute(
    g: &Episode,
    order: &mut [usize],
    k: usize,
    lo: usize,
    hi: usize,
    bounds: &[(usize, usize)],
    class: usize,
    best: &mut Option<Vec<u64>>,
) {
    if k == hi {
        search(g, order, bounds, class + 1, best);
        return;
    }
    for i in k..hi {
        order.swap(k, i);
        permute(g, order, k + 1, lo, hi, bounds, class, best);
        order.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{arb_episode, diamond, syms};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn isomorphic_diamonds_share_key() {
        let d = diamond();
        let e = Episode::new(syms("dcba"), &[(3, 1), (3, 2), (1, 0), (2, 0)]).unwrap();
        assert_eq!(d.canonical_key(), e.canonical_key());
        let f = Episode::new(syms("abcd"), &[(0, 1), (1, 3), (2, 3)]).unwrap();
        assert_ne!(d.canonical_key(), f.canonical_key());
    }

    #[test]
    fn symmetric_labels() {
        let a = Episode::new(syms("aab"), &[(0, 2)]).unwrap();
        let b = Episode::new(syms("aab"), &[(1, 2)]).unwrap();
        assert_eq!(a.canonical_key(), b.canonical_key());
        let c = Episode::new(syms("aab"), &[(2, 1)]).unwrap();
        assert_ne!(a.canonical_key(), c.canonical_key());
    }

    proptest! {
        #[test]
        fn key_invariant_under_relabelling(
            g in arb_episode(7, 3),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..g.len()).collect();
            order.shuffle(&mut rng);
            let h = g.permuted(&order);
            prop_assert_eq!(g.canonical_key(), h.canonical_key());
        }

        #[test]
        fn equal_keys_mean_mutual_embedding(
            g in arb_episode(5, 2),
            h in arb_episode(5, 2),
        ) {
            if g.canonical_key() == h.canonical_key() {
                prop_assert!(g.embeds_into(&h, 8).unwrap());
                prop_assert!(h.embeds_into(&g, 8).unwrap());
            }
        }
    }
}
