//! Monte Carlo estimates of the window moments.
//!
//! Windows are located with a forward search over embeddable prefixes of the
//! episode, which shares nothing with the machines used in production.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::fsm::build_minimal_window_machine;
use crate::seq::ProbabilityModel;

/// Number of independent shards; fixed so results do not depend on the
/// thread count.
const SHARDS: u64 = 64;

/// One estimated mean.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub estimate: f64,
    /// Sample standard deviation over `√trials`.
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl MonteCarloReport {
    /// `|estimate - value|` in standard errors (infinite if the error is 0
    /// and the values differ).
    pub fn deviation(&self, value: f64) -> f64 {
        let d = (self.estimate - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Estimates of every quantity the variance needs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloSet {
    pub p: MonteCarloReport,
    pub v: MonteCarloReport,
    pub q: MonteCarloReport,
    pub z2: MonteCarloReport,
    pub w: MonteCarloReport,
    pub f000: MonteCarloReport,
    pub f110: MonteCarloReport,
    pub f011: MonteCarloReport,
    pub f121: MonteCarloReport,
    /// Trials in which a needed window did not finish within the horizon.
    pub overflows: u64,
}

const QUANTITIES: usize = 9;

#[derive(Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Welford) -> Welford {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }

    fn report(&self, seed: u64) -> MonteCarloReport {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        MonteCarloReport {
            estimate: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            trials: self.n,
            seed,
        }
    }
}

/// Forward search for the first end of a covering window from a start.
struct Embedder {
    labels: Vec<u32>,
    preds: Vec<u64>,
    full: u64,
}

impl Embedder {
    fn new(g: &Episode) -> Self {
        let n = g.len();
        Self {
            labels: (0..n).map(|v| g.label(v).0).collect(),
            preds: (0..n)
                .map(|v| (0..n).filter(|&u| g.precedes(u, v)).fold(0, |m, u| m | 1u64 << u))
                .collect(),
            full: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
        }
    }

    /// Smallest `j ≥ start` with `s[start..=j]` covering the episode,
    /// drawing symbols as needed; `None` past `horizon`.
    fn first_end(&self, start: usize, s: &mut Lazy<'_>) -> Option<usize> {
        let mut reach = vec![0u64];
        for j in start..s.horizon {
            let a = s.at(j);
            let mut grown = Vec::new();
            for &m in &reach {
                for v in 0..self.labels.len() {
                    if m & (1 << v) == 0 && self.labels[v] == a && self.preds[v] & !m == 0 {
                        grown.push(m | 1 << v);
                    }
                }
            }
            if grown.iter().any(|&m| m == self.full) {
                return Some(j);
            }
            reach.extend(grown);
            reach.sort_unstable();
            reach.dedup();
        }
        None
    }
}

/// A random sequence drawn on demand.
struct Lazy<'a> {
    buf: Vec<u32>,
    horizon: usize,
    rng: &'a mut ChaCha8Rng,
    dist: &'a WeightedIndex<f64>,
}

impl Lazy<'_> {
    fn at(&mut self, i: usize) -> u32 {
        while self.buf.len() <= i {
            self.buf.push(self.dist.sample(self.rng) as u32);
        }
        self.buf[i]
    }
}

/// Samples `[X₁, X₁Y₁, Z₁, Z₁², Y₁Z₁, f000, f110, f011, f121]` for one
/// sequence, or `None` on overflow.
fn trial(e: &Embedder, rho: f64, s: &mut Lazy<'_>) -> Option<[f64; QUANTITIES]> {
    let mut out = [0.0; QUANTITIES];
    // 0-based: the window from `k` is minimal iff it ends before the one
    // from `k + 1`.
    let e1 = e.first_end(0, s)?;
    let mut next = e.first_end(1, s);
    if next.is_some_and(|x| x == e1) {
        return Some(out);
    }
    let y1 = e1 + 1;
    let z1 = rho.powi(y1 as i32);
    out[0] = 1.0;
    out[1] = y1 as f64;
    out[2] = z1;
    out[3] = z1 * z1;
    out[4] = y1 as f64 * z1;
    // k is 1-based as in the sums; the window from k starts at index k - 1
    for k in 2..=y1 {
        let ek = next?;
        next = e.first_end(k, s);
        if next.is_some_and(|x| x == ek) {
            continue;
        }
        let a_k = (y1 - k + 1) as i32;
        let b = (ek + 1 - y1) as i32;
        let pw = |p: i32, q: i32, r: i32| rho.powi(p * (k as i32 - 1) + q * a_k + r * b);
        out[5] += 1.0;
        out[6] += pw(1, 1, 0);
        out[7] += pw(0, 1, 1);
        out[8] += pw(1, 2, 1);
    }
    Some(out)
}

/// Estimates `p, v, q, z2, w` and the four cross sums by sampling `trials`
/// random sequences of length at most `horizon`.
pub fn monte_carlo_statistics(
    g: &Episode,
    model: &ProbabilityModel<f64>,
    rho: f64,
    horizon: usize,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloSet> {
    if g.is_empty() {
        return Err(Error::EmptyInput("episode"));
    }
    if rho.powi(horizon as i32) >= 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} too short: rho^horizon >= 1e-12"
        )));
    }
    let tail = unfinished_mass(g, model, horizon / 2)?;
    if tail >= 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} too short: {tail:e} of windows still open at half the horizon"
        )));
    }
    let embedder = Embedder::new(g);
    let dist = WeightedIndex::new(model.probs().iter().copied())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let per = trials / SHARDS;
    let extra = trials % SHARDS;
    let shards: Vec<([Welford; QUANTITIES], u64)> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut acc = [Welford::default(); QUANTITIES];
            let mut overflows = 0;
            let count = per + u64::from(shard < extra);
            for _ in 0..count {
                let mut s = Lazy { buf: Vec::new(), horizon, rng: &mut rng, dist: &dist };
                let values = trial(&embedder, rho, &mut s).unwrap_or_else(|| {
                    overflows += 1;
                    [0.0; QUANTITIES]
                });
                for (w, x) in acc.iter_mut().zip(values) {
                    w.push(x);
                }
            }
            (acc, overflows)
        })
        .collect();
    let mut total = [Welford::default(); QUANTITIES];
    let mut overflows = 0;
    for (acc, o) in shards {
        for (t, a) in total.iter_mut().zip(acc) {
            *t = t.merge(a);
        }
        overflows += o;
    }
    let r = |i: usize| total[i].report(seed);
    Ok(MonteCarloSet {
        p: r(0),
        v: r(1),
        q: r(2),
        z2: r(3),
        w: r(4),
        f000: r(5),
        f110: r(6),
        f011: r(7),
        f121: r(8),
        overflows,
    })
}

/// Probability that greedy descent from the start of the window machine is
/// still undecided after `len` random symbols.
fn unfinished_mass(g: &Episode, model: &ProbabilityModel<f64>, len: usize) -> Result<f64> {
    let mw = build_minimal_window_machine(g, 1 << 16)?;
    let m = mw.machine();
    let mut cur = vec![0.0; m.num_states()];
    cur[mw.alpha()] = 1.0;
    for _ in 0..len {
        let mut next = vec![0.0; m.num_states()];
        for (y, &w) in cur.iter().enumerate() {
            if w == 0.0 || mw.is_omega(y) || y == mw.psi() {
                continue;
            }
            for (a, &p) in model.probs().iter().enumerate() {
                next[m.step(y, crate::Symbol(a as u32))] += w * p;
            }
        }
        cur = next;
    }
    Ok(cur.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episode::tests::syms;

    fn model(p: &[f64]) -> ProbabilityModel<f64> {
        ProbabilityModel::new(p.to_vec()).unwrap()
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.5).collect();
        let mut one = Welford::default();
        xs.iter().for_each(|&x| one.push(x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..30].iter().for_each(|&x| a.push(x));
        xs[30..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean - one.mean).abs() < 1e-12);
        assert!((m.m2 - one.m2).abs() < 1e-9);
    }

    #[test]
    fn serial_ab_example_one() {
        let g = Episode::serial(&syms("ab"));
        let pm = model(&[0.5, 0.25, 0.25]);
        let mc = monte_carlo_statistics(&g, &pm, 0.5, 200, 200_000, 7).unwrap();
        assert!(mc.p.deviation(1.0 / 6.0) < 3.0, "{:?}", mc.p);
        assert!(mc.q.deviation(1.0 / 28.0) < 3.0, "{:?}", mc.q);
        assert_eq!(mc.overflows, 0);
    }

    #[test]
    fn join_example_cross_sums() {
        let g = crate::episode::tests::join_example();
        let pm = model(&[0.3, 0.2, 0.5]);
        let mw = build_minimal_window_machine(&g, 1 << 16).unwrap();
        let cm = mw.cross_machine(1 << 16).unwrap();
        let mc = monte_carlo_statistics(&g, &pm, 0.5, 200, 300_000, 11).unwrap();
        let pairs = [
            (&mc.f000, (0, 0, 0)),
            (&mc.f110, (1, 1, 0)),
            (&mc.f011, (0, 1, 1)),
            (&mc.f121, (1, 2, 1)),
        ];
        for (r, pqr) in pairs {
            let f = crate::stats::cross_moment_f(&mw, &cm, &0.5, pqr, &pm).unwrap();
            assert!(r.deviation(f) < 4.0, "{pqr:?}: {f} vs {r:?}");
        }
    }

    #[test]
    fn single_node_cross_sums_vanish() {
        let g = Episode::serial(&syms("a"));
        let mc = monte_carlo_statistics(&g, &model(&[0.5, 0.5]), 0.5, 100, 10_000, 1).unwrap();
        for r in [&mc.f000, &mc.f110, &mc.f011, &mc.f121] {
            assert_eq!(r.estimate, 0.0);
        }
        assert!(mc.p.deviation(0.5) < 4.0);
    }

    #[test]
    fn deterministic_in_seed() {
        let g = Episode::serial(&syms("ab"));
        let pm = model(&[0.5, 0.5]);
        let a = monte_carlo_statistics(&g, &pm, 0.5, 100, 5_000, 3).unwrap();
        let b = monte_carlo_statistics(&g, &pm, 0.5, 100, 5_000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn short_horizon_rejected() {
        let g = Episode::serial(&syms("ab"));
        assert!(monte_carlo_statistics(&g, &model(&[0.5, 0.5]), 0.5, 10, 10, 0).is_err());
    }
}
