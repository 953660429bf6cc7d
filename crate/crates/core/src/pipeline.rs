//! End-to-end steps shared by the command line and the acceptance tests:
//! ranking, the normality simulation and machine inspection.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode::{Episode, EpisodeClass};
use crate::error::{Error, Result};
use crate::fsm::{build_episode_machine, build_minimal_window_machine, simplify, MachineSizes, DEFAULT_STATE_CAP};
use crate::miner::{mine, MinerConfig};
use crate::scan::{minimal_windows_indexed, observed_statistic, PositionIndex};
use crate::seq::{generate_independent, EventSequence, ProbabilityModel, SymbolTable};
use crate::stats::{episode_statistics, p_value, score, EpisodeStatistics};

/// Ranking parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    pub rho: f64,
    /// Longest window scanned in the test sequence; `None` is unbounded.
    pub max_len: Option<usize>,
    pub state_cap: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self { rho: 0.5, max_len: None, state_cap: DEFAULT_STATE_CAP }
    }
}

/// Why an episode has no score.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Unscorable {
    /// No minimal window in the test sequence.
    NoWindows,
    /// `σ = 0`.
    ZeroVariance,
    /// Model computations failed.
    Failed(String),
}

/// One row of the ranking.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedRecord {
    /// Position of the episode in the input list.
    pub id: usize,
    pub episode: String,
    pub class: EpisodeClass,
    pub nodes: usize,
    pub support: Option<usize>,
    pub n: usize,
    pub r: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub score: Option<f64>,
    pub p_value: Option<f64>,
    pub unscorable: Option<Unscorable>,
    /// Scan walks cut by `max_len`.
    pub truncated: usize,
    pub clamped: bool,
}

/// Scores every non-singleton episode against `test`. Records come back
/// sorted by score (descending); unscorable ones follow in input order.
pub fn rank_episodes(
    episodes: &[(Episode, Option<usize>)],
    test: &EventSequence,
    model: &ProbabilityModel<f64>,
    table: &SymbolTable,
    cfg: &RankConfig,
) -> Vec<RankedRecord> {
    let index = PositionIndex::new(test);
    let mut out: Vec<RankedRecord> = episodes
        .par_iter()
        .enumerate()
        .filter(|(_, (g, _))| g.len() >= 2)
        .map(|(id, (g, support))| rank_one(id, g, *support, test, &index, model, table, cfg))
        .collect();
    out.sort_by(|a, b| match (a.score, b.score) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.id.cmp(&b.id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.id.cmp(&b.id),
    });
    out
}

#[allow(clippy::too_many_arguments)]
fn rank_one(
    id: usize,
    g: &Episode,
    support: Option<usize>,
    test: &EventSequence,
    index: &PositionIndex,
    model: &ProbabilityModel<f64>,
    table: &SymbolTable,
    cfg: &RankConfig,
) -> RankedRecord {
    let mut rec = RankedRecord {
        id,
        episode: g.render(table),
        class: g.classify(),
        nodes: g.len(),
        support,
        n: 0,
        r: None,
        mu: None,
        sigma: None,
        score: None,
        p_value: None,
        unscorable: None,
        truncated: 0,
        clamped: false,
    };
    let mw = match build_minimal_window_machine(g, cfg.state_cap) {
        Ok(m) => m,
        Err(e) => {
            rec.unscorable = Some(Unscorable::Failed(e.to_string()));
            return rec;
        }
    };
    let scan = minimal_windows_indexed(test, index, &mw, cfg.max_len);
    let (r, n) = observed_statistic(&scan.windows, cfg.rho);
    rec.n = n;
    rec.r = r;
    rec.truncated = scan.truncated;
    let st = match episode_statistics(&mw, &cfg.rho, model, cfg.state_cap) {
        Ok(s) => s,
        Err(e) => {
            rec.unscorable = Some(Unscorable::Failed(e.to_string()));
            return rec;
        }
    };
    rec.mu = Some(st.mu);
    rec.sigma = Some(st.sigma2.sqrt());
    rec.clamped = st.clamped;
    match r.and_then(|r| score(&st, r, n, test.len())) {
        Some(z) => {
            rec.score = Some(z);
            rec.p_value = Some(p_value(z));
        }
        None if n == 0 => rec.unscorable = Some(Unscorable::NoWindows),
        None => rec.unscorable = Some(Unscorable::ZeroVariance),
    }
    rec
}

/// `x` with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn flags(r: &RankedRecord) -> String {
    let mut f = Vec::new();
    match &r.unscorable {
        Some(Unscorable::NoWindows) => f.push("unscorable:no-windows".to_owned()),
        Some(Unscorable::ZeroVariance) => f.push("unscorable:zero-variance".to_owned()),
        Some(Unscorable::Failed(e)) => f.push(format!("unscorable:{e}")),
        None => {}
    }
    if r.truncated > 0 {
        f.push(format!("truncated:{}", r.truncated));
    }
    if r.clamped {
        f.push("clamped".into());
    }
    f.join(";")
}

/// CSV with a header row; empty cells for missing values.
pub fn format_ranked_csv(records: &[RankedRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["rank", "id", "episode", "class", "nodes", "support", "n", "r", "mu", "sigma", "score", "p_value", "flags"];
    let opt = |x: Option<f64>| x.map(sig6).unwrap_or_default();
    let mut rows = vec![header.iter().map(|h| h.to_string()).collect::<Vec<_>>()];
    for (k, r) in records.iter().enumerate() {
        rows.push(vec![
            if r.score.is_some() { (k + 1).to_string() } else { String::new() },
            r.id.to_string(),
            r.episode.clone(),
            r.class.to_string(),
            r.nodes.to_string(),
            r.support.map(|s| s.to_string()).unwrap_or_default(),
            r.n.to_string(),
            opt(r.r),
            opt(r.mu),
            opt(r.sigma),
            opt(r.score),
            opt(r.p_value),
            flags(r),
        ]);
    }
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 fields")
}

/// Structured per-episode dump: every model quantity plus machine sizes.
#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub id: usize,
    pub episode: String,
    pub sizes: MachineSizes,
    pub cross_states: usize,
    pub stats: EpisodeStatistics<f64>,
}

pub fn diagnose(
    id: usize,
    g: &Episode,
    model: &ProbabilityModel<f64>,
    table: &SymbolTable,
    cfg: &RankConfig,
) -> Result<Diagnostics> {
    let mw = build_minimal_window_machine(g, cfg.state_cap)?;
    let cm = mw.cross_machine(cfg.state_cap)?;
    Ok(Diagnostics {
        id,
        episode: g.render(table),
        sizes: mw.sizes(),
        cross_states: cm.machine.as_ref().map_or(0, |m| m.num_states()),
        stats: episode_statistics(&mw, &cfg.rho, model, cfg.state_cap)?,
    })
}

/// Parameters of the normality simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityConfig {
    pub alphabet: usize,
    pub train_len: usize,
    pub test_len: usize,
    pub threshold: usize,
    pub rho: f64,
    pub seed: u64,
    pub max_window: usize,
    pub max_nodes: usize,
}

impl Default for NormalityConfig {
    fn default() -> Self {
        Self {
            alphabet: 100,
            train_len: 10_000,
            test_len: 1_000_000,
            threshold: 12,
            rho: 0.5,
            seed: 0,
            max_window: 15,
            max_nodes: 5,
        }
    }
}

/// P-values of every scorable mined episode, sorted, and their
/// Kolmogorov-Smirnov distance to the uniform distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalityResult {
    pub p_values: Vec<f64>,
    pub ks: f64,
    pub mined: usize,
}

/// Mines an independent training sequence, ranks the candidates on an
/// independent test sequence under the true (uniform) model and collects
/// the p-values.
pub fn simulate_normality(cfg: &NormalityConfig) -> Result<NormalityResult> {
    let all = generate_independent(cfg.alphabet, cfg.train_len + cfg.test_len, cfg.seed)?;
    let (train, test) = all.symbols().split_at(cfg.train_len);
    let train = EventSequence::new(train.to_vec(), cfg.alphabet)?;
    let test = EventSequence::new(test.to_vec(), cfg.alphabet)?;
    let mcfg = MinerConfig {
        min_support: cfg.threshold,
        max_window: cfg.max_window,
        max_nodes: cfg.max_nodes,
        ..MinerConfig::default()
    };
    let mined = mine(&train, &mcfg)?;
    let episodes: Vec<(Episode, Option<usize>)> = mined
        .episodes
        .into_iter()
        .map(|m| (m.episode, Some(m.support)))
        .collect();
    let model = ProbabilityModel::uniform(cfg.alphabet);
    let table = SymbolTable::synthetic(cfg.alphabet, "e");
    let rcfg = RankConfig { rho: cfg.rho, ..RankConfig::default() };
    let ranked = rank_episodes(&episodes, &test, &model, &table, &rcfg);
    let mut p_values: Vec<f64> = ranked.iter().filter_map(|r| r.p_value).collect();
    p_values.sort_by(f64::total_cmp);
    Ok(NormalityResult { ks: ks_uniform(&p_values), p_values, mined: episodes.len() })
}

/// `sup |F_n(x) - x|` for a sorted sample; 1 for an empty one.
pub fn ks_uniform(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    if sorted.is_empty() {
        return 1.0;
    }
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| ((i + 1) as f64 / n - u).max(u - i as f64 / n))
        .fold(0.0, f64::max)
}

/// `p_value,cumulative` rows of the empirical distribution.
pub fn format_normality_csv(res: &NormalityResult) -> String {
    let mut out = String::from("p_value,cumulative\n");
    let n = res.p_values.len() as f64;
    for (i, p) in res.p_values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", sig6(*p), sig6((i + 1) as f64 / n));
    }
    out
}

/// Machine sizes and DOT renderings of one episode.
#[derive(Clone, Debug, Serialize)]
pub struct InspectReport {
    pub sizes: MachineSizes,
    pub cross_states: usize,
    pub cross_edges: usize,
    #[serde(skip)]
    pub dots: Vec<(&'static str, String)>,
}

pub fn inspect(g: &Episode, table: &SymbolTable, cap: usize) -> Result<InspectReport> {
    if g.is_empty() {
        return Err(Error::EmptyInput("episode"));
    }
    let episode = build_episode_machine(g, cap)?;
    let simple = simplify(&episode, cap)?;
    let mw = build_minimal_window_machine(g, cap)?;
    let cm = mw.cross_machine(cap)?;
    let mut dots = vec![
        ("episode", episode.to_dot(Some(table))),
        ("simple", simple.to_dot(Some(table))),
        ("window", mw.machine().to_dot(Some(table))),
    ];
    let (cross_states, cross_edges) = match &cm.machine {
        Some(m) => {
            dots.push(("cross", m.to_dot(Some(table))));
            (m.num_states(), m.num_edges())
        }
        None => (0, 0),
    };
    Ok(InspectReport { sizes: mw.sizes(), cross_states, cross_edges, dots })
}
