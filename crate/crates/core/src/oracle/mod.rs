//! Slow, independent validators.
//!
//! Nothing here calls the production recursions in [`crate::stats`] or the
//! scanner in [`crate::scan`]; the only shared pieces are the machine type and
//! the brute-force coverage test of [`Episode`].

mod montecarlo;

use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::fsm::{CrossMachine, Machine, MinimalWindowMachine, StateId};
use crate::scan::Window;
use crate::seq::{ProbabilityModel, Symbol};

pub use montecarlo::{monte_carlo_statistics, MonteCarloReport, MonteCarloSet};

/// Largest number of sequences [`pgreedy_exhaustive`] will enumerate.
pub const ENUMERATION_GUARD: u64 = 10_000_000;

/// `pgreedy(x, Y, len)` by summing over every sequence of length `len`.
pub fn pgreedy_exhaustive(
    m: &Machine,
    x: StateId,
    targets: &[StateId],
    len: usize,
    model: &ProbabilityModel<f64>,
) -> Result<f64> {
    let k = model.len() as u64;
    let total = (0..len).try_fold(1u64, |acc, _| acc.checked_mul(k).filter(|&v| v <= ENUMERATION_GUARD));
    if total.is_none() {
        return Err(Error::Guard(format!("{k}^{len} sequences to enumerate")));
    }
    let mut digits = vec![0usize; len];
    let mut seq = vec![Symbol(0); len];
    let mut sum = 0.0;
    loop {
        let mut weight = 1.0;
        for (i, &d) in digits.iter().enumerate() {
            seq[i] = Symbol(d as u32);
            weight *= model.p(seq[i]);
        }
        if targets.contains(&m.greedy(x, &seq)) {
            sum += weight;
        }
        let mut i = 0;
        loop {
            if i == len {
                return Ok(sum);
            }
            digits[i] += 1;
            if digits[i] < k as usize {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Minimal windows straight from the definition: `s[i, j]` covers `g` and
/// neither `s[i + 1, j]` nor `s[i, j - 1]` does. Windows are 1-based and
/// sorted by end.
pub fn minimal_windows_definition(s: &[Symbol], g: &Episode, guard: usize) -> Result<Vec<Window>> {
    let covers = |i: usize, j: usize| g.covers_bruteforce(&s[i - 1..j], guard);
    let mut out = Vec::new();
    for j in 1..=s.len() {
        for i in 1..=j {
            if !covers(i, j)? {
                continue;
            }
            if i == j || (!covers(i + 1, j)? && !covers(i, j - 1)?) {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// State distributions after `0..=len` random symbols, propagated forwards.
fn forward_distributions(m: &Machine, x: StateId, len: usize, model: &ProbabilityModel<f64>) -> Vec<Vec<f64>> {
    let n = m.num_states();
    let mut cur = vec![0.0; n];
    cur[x] = 1.0;
    let mut out = vec![cur.clone()];
    for _ in 0..len {
        let mut next = vec![0.0; n];
        for (y, &w) in cur.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (a, &p) in model.probs().iter().enumerate() {
                next[m.step(y, Symbol(a as u32))] += w * p;
            }
        }
        out.push(next.clone());
        cur = next;
    }
    out
}

/// `Σ_{n=1}^{len} ρ^{k n} pgreedy(x, Y, n)`.
fn weighted_sum(dists: &[Vec<f64>], targets: &[StateId], rho: f64, k: u32) -> f64 {
    dists
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, d)| rho.powi((k as usize * n) as i32) * targets.iter().map(|&y| d[y]).sum::<f64>())
        .sum()
}

/// `f(P, Q, R)` as the explicit double sum over intermediate states
/// `β, γ` of products of three truncated series, each series summed to
/// `terms` symbols.
pub fn cross_moment_direct(
    mw: &MinimalWindowMachine,
    cm: &CrossMachine,
    rho: f64,
    (p, q, r): (u32, u32, u32),
    model: &ProbabilityModel<f64>,
    terms: usize,
) -> f64 {
    let Some(star) = cm.machine.as_ref() else {
        return 0.0;
    };
    let m = mw.machine();
    let from_alpha = forward_distributions(m, mw.alpha(), terms, model);
    let mut total = 0.0;
    for &beta in mw.theta() {
        let Some(seed) = cm.seed_of[beta] else {
            continue;
        };
        let t_beta = weighted_sum(&from_alpha, &[beta], rho, r);
        if t_beta == 0.0 {
            continue;
        }
        let from_seed = forward_distributions(star, seed, terms, model);
        for &gamma in mw.theta() {
            let ends: Vec<StateId> = cm
                .targets
                .iter()
                .filter(|t| t.1 == gamma)
                .map(|t| t.0)
                .collect();
            if ends.is_empty() {
                continue;
            }
            let u = weighted_sum(&from_seed, &ends, rho, q);
            let s = weighted_sum(&forward_distributions(m, gamma, terms, model), mw.omega(), rho, p);
            total += t_beta * s * u;
        }
    }
    total
}
