//! Exact model quantities under the independence model.
//!
//! For a machine state `x`, a target set `Y` and a weight `f`, the moment
//! `m(x) = Σ_{L ≥ 1} f(L) · pgreedy(x, Y, L)` has a closed form whenever
//! `f(L - 1) = c f(L) + h(L)`: processing states parents first,
//!
//! ```text
//! m(x) = (q i(x) - h(x) + Σ_{a ∈ inc(x)} p(a) (m(y_a) + i(y_a))) / (c - q)
//! ```
//!
//! where `y_a` is the `a`-parent, `q` the probability of staying at `x` and
//! `i` the weights of the target states (`f(0)` times their indicator).

mod assemble;
mod cross;

use crate::error::{Error, Result};
use crate::fsm::{Machine, StateId};
use crate::scalar::Scalar;
use crate::seq::ProbabilityModel;

pub use assemble::{
    assemble, episode_moments, episode_statistics, p_value, score, EpisodeMoments,
    EpisodeStatistics, CLAMP_TOLERANCE,
};
pub use cross::{cross_moment_f, cross_moment_stages, CrossStages};

/// Per-state values of a moment recursion.
pub type MomentTable<T> = Vec<T>;

/// One step of the probability recursion: `out[x] = Σ_a p(a) cur[step(x, a)]`.
fn push_back<T: Scalar>(m: &Machine, cur: &[T], model: &ProbabilityModel<T>) -> Vec<T> {
    (0..m.num_states())
        .map(|x| {
            let inc = m.incoming(x);
            if inc.is_empty() {
                return cur[x].clone();
            }
            let mut acc = T::zero();
            let mut used = T::zero();
            for &(a, y) in &inc.explicit {
                let p = model.p(a).clone();
                used = used + p.clone();
                acc = acc + p * cur[y].clone();
            }
            let rest = T::one() - used;
            acc + rest * cur[inc.wildcard.unwrap_or(x)].clone()
        })
        .collect()
}

/// `pgreedy(·, Y, L)` for every state, with `Y` given as weights
/// (`target[y] = 1` for members).
pub fn pgreedy_table<T: Scalar>(m: &Machine, target: &[T], len: usize, model: &ProbabilityModel<T>) -> Vec<T> {
    let mut cur = target.to_vec();
    for _ in 0..len {
        cur = push_back(m, &cur, model);
    }
    cur
}

/// Probability that greedy descent over a random sequence of length `len`
/// ends in `Y`.
pub fn pgreedy<T: Scalar>(
    m: &Machine,
    x: StateId,
    targets: &[StateId],
    len: usize,
    model: &ProbabilityModel<T>,
) -> T {
    pgreedy_table(m, &indicator(m.num_states(), targets), len, model)[x].clone()
}

/// `[x ∈ set]` as scalars.
pub fn indicator<T: Scalar>(n: usize, set: &[StateId]) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    for &x in set {
        v[x] = T::one();
    }
    v
}

/// The moment recursion. `init` holds target weights, `hmap` the
/// inhomogeneous term per state (`None` for zero), `c` the recursion
/// constant. States without incoming edges get 0.
pub fn moments<T: Scalar>(
    m: &Machine,
    init: &[T],
    hmap: Option<&[T]>,
    c: &T,
    model: &ProbabilityModel<T>,
) -> Result<MomentTable<T>> {
    let n = m.num_states();
    let mut out = vec![T::zero(); n];
    let one = T::one();
    for &x in m.order() {
        let inc = m.incoming(x);
        if inc.is_empty() {
            continue;
        }
        let mut acc = T::zero();
        let mut used = T::zero();
        for &(a, y) in &inc.explicit {
            let p = model.p(a).clone();
            used = used + p.clone();
            acc = acc + p * (out[y].clone() + init[y].clone());
        }
        let rest = one.clone() - used.clone();
        let denom = match inc.wildcard {
            Some(w) => {
                acc = acc + rest * (out[w].clone() + init[w].clone());
                c.clone()
            }
            None => {
                acc = acc + rest * init[x].clone();
                c.clone() - one.clone() + used
            }
        };
        if let Some(h) = hmap {
            acc = acc - h[x].clone();
        }
        if denom <= T::zero() {
            return Err(Error::Divergent {
                state: x,
                r: denom.as_f64(),
            });
        }
        out[x] = acc / denom;
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::episode::tests::{join_example, sym};
    use crate::episode::Episode;
    use crate::fsm::{build_minimal_window_machine, MinimalWindowMachine};
    use crate::Rational;
    use proptest::prelude::*;

    pub fn model(p: &[f64]) -> ProbabilityModel<f64> {
        ProbabilityModel::new(p.to_vec()).unwrap()
    }

    pub fn ratio(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    pub fn exact(p: &[(i64, i64)]) -> ProbabilityModel<Rational> {
        ProbabilityModel::new(p.iter().map(|&(n, d)| ratio(n, d)).collect()).unwrap()
    }

    pub fn mw(g: &Episode) -> MinimalWindowMachine {
        build_minimal_window_machine(g, 1 << 16).unwrap()
    }

    /// States of the simple {a,b}->c machine: x1 = {a,b,c}, x2 = {a,b},
    /// x3 = {a}, x4 = {b}, x5 = {}, x0 = added sink.
    pub fn jx(k: usize) -> Option<&'static [u64]> {
        match k {
            0 => None,
            1 => Some(&[0b111]),
            2 => Some(&[0b011]),
            3 => Some(&[0b001]),
            4 => Some(&[0b010]),
            5 => Some(&[0b000]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn join_example_moments() {
        let w = mw(&join_example());
        let m = w.machine();
        let pm = model(&[0.3, 0.2, 0.5]);
        let ones = indicator(m.num_states(), w.omega());
        let t = moments(m, &ones, None, &1.0, &pm).unwrap();
        let at = |a, b| t[w.find_pair(jx(a), jx(b)).unwrap()];
        let cases = [
            ((4, 2), 0.4),
            ((3, 2), 0.6),
            ((4, 1), 4.0 / 7.0),
            ((3, 1), 0.75),
            // 0.3 * 4/7 + 0.2 * 3/4 = 9/28 (about 0.32)
            ((2, 1), 9.0 / 28.0),
            ((1, 0), 9.0 / 56.0),
        ];
        for ((a, b), v) in cases {
            assert!((at(a, b) - v).abs() < 1e-12, "x{a}x{b}: {} vs {v}", at(a, b));
        }
        for &o in w.omega() {
            assert_eq!(t[o], 0.0);
        }
        assert_eq!(t[w.psi()], 0.0);
        assert_eq!(w.find_pair(jx(1), jx(0)), Some(w.alpha()));
    }

    #[test]
    fn join_example_moments_exact() {
        let w = mw(&join_example());
        let m = w.machine();
        let pm = exact(&[(3, 10), (2, 10), (5, 10)]);
        let ones = indicator(m.num_states(), w.omega());
        let t = moments(m, &ones, None, &Rational::from_integer(1.into()), &pm).unwrap();
        assert_eq!(t[w.find_pair(jx(4), jx(1)).unwrap()], ratio(4, 7));
        assert_eq!(t[w.find_pair(jx(2), jx(1)).unwrap()], ratio(9, 28));
        assert_eq!(t[w.alpha()], ratio(9, 56));
    }

    #[test]
    fn pgreedy_geometric_tail() {
        let w = mw(&join_example());
        let pm = model(&[0.3, 0.2, 0.5]);
        let x = w.find_pair(jx(4), jx(2)).unwrap();
        let y = w.find_pair(jx(5), jx(3)).unwrap();
        for len in 1..12 {
            let v = pgreedy(w.machine(), x, &[y], len, &pm);
            assert!((v - 0.2 * 0.5f64.powi(len as i32 - 1)).abs() < 1e-15);
        }
        assert_eq!(pgreedy(w.machine(), x, &[x], 0, &pm), 1.0);
    }

    #[test]
    fn zero_inputs_give_zero() {
        let w = mw(&join_example());
        let pm = model(&[0.3, 0.2, 0.5]);
        let n = w.machine().num_states();
        let t = moments(w.machine(), &vec![0.0; n], Some(&vec![0.0; n]), &2.0, &pm).unwrap();
        assert!(t.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_detected() {
        let w = mw(&Episode::serial(&[sym('a'), sym('b')]));
        // `c` below the probability of staying on a symbol outside the episode
        let pm = model(&[0.25, 0.25, 0.5]);
        let n = w.machine().num_states();
        let ones = indicator(n, w.omega());
        assert!(matches!(
            moments(w.machine(), &ones, None, &0.25, &pm),
            Err(Error::Divergent { .. })
        ));
    }

    fn arb_model() -> impl Strategy<Value = ProbabilityModel<f64>> {
        prop::collection::vec(0.2f64..1.0, 3).prop_map(|v| {
            let s: f64 = v.iter().sum();
            ProbabilityModel::new(v.iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn linear_in_init_and_h(
            g in crate::episode::tests::arb_episode(3, 3),
            pm in arb_model(),
            k1 in -2.0f64..2.0,
            k2 in -2.0f64..2.0,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let w = mw(&g);
            let m = w.machine();
            let n = m.num_states();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (i1, h1, i2, h2) = (draw(), draw(), draw(), draw());
            let c = 1.7;
            let a = moments(m, &i1, Some(&h1), &c, &pm).unwrap();
            let b = moments(m, &i2, Some(&h2), &c, &pm).unwrap();
            let i: Vec<f64> = (0..n).map(|x| k1 * i1[x] + k2 * i2[x]).collect();
            let h: Vec<f64> = (0..n).map(|x| k1 * h1[x] + k2 * h2[x]).collect();
            let mix = moments(m, &i, Some(&h), &c, &pm).unwrap();
            for x in 0..n {
                prop_assert!((mix[x] - (k1 * a[x] + k2 * b[x])).abs() < 1e-9);
            }
        }

        #[test]
        fn moments_match_truncated_sums(
            g in crate::episode::tests::arb_episode(3, 3),
            pm in arb_model(),
            which in 0usize..3,
        ) {
            let w = mw(&g);
            let m = w.machine();
            let n = m.num_states();
            let rho: f64 = 0.5;
            let ones = indicator::<f64>(n, w.omega());
            let (c, weight): (f64, Box<dyn Fn(usize) -> f64>) = match which {
                0 => (1.0, Box::new(|_| 1.0)),
                1 => (1.0 / rho, Box::new(move |l| rho.powi(l as i32))),
                _ => (1.0 / (rho * rho), Box::new(move |l| rho.powi(2 * l as i32))),
            };
            let t = moments(m, &ones, None, &c, &pm).unwrap();
            let mut cur = ones.clone();
            let mut direct = vec![0.0; n];
            for len in 1..=400 {
                cur = push_back(m, &cur, &pm);
                for x in 0..n {
                    direct[x] += weight(len) * cur[x];
                }
            }
            for x in 0..n {
                prop_assert!((t[x] - direct[x]).abs() < 1e-9, "{} vs {}", t[x], direct[x]);
            }
        }

        #[test]
        fn pgreedy_over_all_states_sums_to_one(
            g in crate::episode::tests::arb_episode(3, 3),
            pm in arb_model(),
            len in 0usize..8,
        ) {
            let w = mw(&g);
            let m = w.machine();
            let total: f64 = (0..m.num_states())
                .map(|y| pgreedy(m, w.alpha(), &[y], len, &pm))
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
