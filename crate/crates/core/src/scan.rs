//! Minimal windows of an episode in a concrete sequence.
//!
//! Windows are found by running greedy descent of the window machine
//! backwards from every possible end. A window must end on an episode label,
//! and inside the machine only the start and accepting states react to other
//! symbols, so the walk only visits positions holding an episode label.

use std::fmt::Write as _;

use crate::fsm::MinimalWindowMachine;
use crate::seq::{EventSequence, Symbol};

/// A window `s[start, end]`, 1-based and inclusive.
pub type Window = (usize, usize);

/// Positions of every symbol, for repeated scans of one sequence.
#[derive(Clone, Debug)]
pub struct PositionIndex {
    positions: Vec<Vec<u32>>,
}

impl PositionIndex {
    pub fn new(s: &EventSequence) -> Self {
        let mut positions = vec![Vec::new(); s.alphabet_size()];
        for (i, x) in s.symbols().iter().enumerate() {
            positions[x.index()].push(i as u32);
        }
        Self { positions }
    }

    /// 0-based positions of `a`.
    pub fn of(&self, a: Symbol) -> &[u32] {
        self.positions.get(a.index()).map_or(&[], Vec::as_slice)
    }

    /// Sorted 0-based positions holding any of `labels`.
    pub fn merged(&self, labels: &[Symbol]) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::with_capacity(labels.iter().map(|&a| self.of(a).len()).sum());
        for &a in labels {
            out.extend_from_slice(self.of(a));
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Windows found by a scan, sorted by end.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScanResult {
    pub windows: Vec<Window>,
    /// Walks abandoned because they exceeded the length bound.
    pub truncated: usize,
}

/// Minimal windows of length at most `max_len` (unbounded if `None`).
pub fn minimal_windows(s: &EventSequence, mw: &MinimalWindowMachine, max_len: Option<usize>) -> ScanResult {
    let labels = mw.labels();
    let positions: Vec<u32> = s
        .symbols()
        .iter()
        .enumerate()
        .filter(|(_, a)| labels.binary_search(a).is_ok())
        .map(|(i, _)| i as u32)
        .collect();
    scan_positions(s.symbols(), &positions, mw, max_len)
}

/// [`minimal_windows`] using a prebuilt index of `s`.
pub fn minimal_windows_indexed(
    s: &EventSequence,
    index: &PositionIndex,
    mw: &MinimalWindowMachine,
    max_len: Option<usize>,
) -> ScanResult {
    scan_positions(s.symbols(), &index.merged(mw.labels()), mw, max_len)
}

fn scan_positions(s: &[Symbol], positions: &[u32], mw: &MinimalWindowMachine, max_len: Option<usize>) -> ScanResult {
    let m = mw.machine();
    let (alpha, psi) = (mw.alpha(), mw.psi());
    let limit = max_len.unwrap_or(usize::MAX);
    let mut out = ScanResult::default();
    for (k, &e) in positions.iter().enumerate() {
        let e = e as usize;
        let mut x = m.step(alpha, s[e]);
        if x == psi {
            continue;
        }
        if mw.is_omega(x) {
            if limit >= 1 {
                out.windows.push((e + 1, e + 1));
            }
            continue;
        }
        for &j in positions[..k].iter().rev() {
            let j = j as usize;
            if e - j + 1 > limit {
                out.truncated += 1;
                break;
            }
            x = m.step(x, s[j]);
            if x == psi {
                break;
            }
            if mw.is_omega(x) {
                out.windows.push((j + 1, e + 1));
                break;
            }
        }
    }
    out
}

/// Average weight `r = (1/n) Σ ρ^{end - start + 1}` and count `n`; `r` is
/// `None` without windows.
pub fn observed_statistic(windows: &[Window], rho: f64) -> (Option<f64>, usize) {
    let n = windows.len();
    if n == 0 {
        return (None, 0);
    }
    let total: f64 = windows
        .iter()
        .map(|&(a, b)| rho.powi((b - a + 1) as i32))
        .sum();
    (Some(total / n as f64), n)
}

/// Largest number of pairwise disjoint windows (greedy by earliest end).
pub fn disjoint_support(windows: &[Window]) -> usize {
    debug_assert!(windows.windows(2).all(|w| w[0].1 <= w[1].1));
    let mut last = 0;
    let mut count = 0;
    for &(a, b) in windows {
        if a > last {
            count += 1;
            last = b;
        }
    }
    count
}

/// CSV dump with header `start,end`.
pub fn format_windows(windows: &[Window]) -> String {
    let mut out = String::from("start,end\n");
    for &(a, b) in windows {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}
