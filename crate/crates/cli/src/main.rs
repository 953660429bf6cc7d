mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minwin::episode::{format_episodes, parse_episodes, parse_layered, EpisodeRecord};
use minwin::fsm::{build_minimal_window_machine, DEFAULT_STATE_CAP};
use minwin::miner::{mine, ClassSet, MinerConfig};
use minwin::pipeline::{
    diagnose, format_normality_csv, format_ranked_csv, inspect, rank_episodes, simulate_normality,
    NormalityConfig, RankConfig,
};
use minwin::scan::{format_windows, minimal_windows};
use minwin::seq::io::{read_tokens, write_tokens};
use minwin::seq::{
    estimate_probabilities, generate_independent, generate_planted, intern, split, PlantConfig,
};
use minwin::{Episode, SymbolTable};

use config::{parse_classes, Config};

#[derive(Parser)]
#[command(name = "minwin", version, about = "Mine episodes and rank them by minimal-window compactness")]
struct Cli {
    /// TOML file with defaults for rho, smoothing, max_len and the miner.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a token file into a training prefix and a test suffix.
    Split {
        #[arg(long)]
        input: PathBuf,
        /// Share of the sequence that goes to training (floor of the length).
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Mine frequent strict episodes from a token file.
    Mine {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        miner: MinerArgs,
    },
    /// Rank episodes on a test sequence under a model fitted to training.
    Rank {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        rank: RankArgs,
        /// Write model quantities and machine sizes as JSON lines.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Write each episode's test windows to `<dir>/<id>.csv`.
        #[arg(long)]
        windows: Option<PathBuf>,
    },
    /// Generate an independent uniform sequence.
    GenInd {
        #[arg(long)]
        alphabet: usize,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a uniform sequence with planted serial patterns.
    GenPlant {
        #[arg(long, default_value_t = 1000)]
        alphabet: usize,
        #[arg(long, default_value_t = 40_000)]
        length: usize,
        #[arg(long, default_value_t = 5)]
        patterns: usize,
        #[arg(long, default_value_t = 5)]
        pattern_len: usize,
        #[arg(long, default_value_t = 100)]
        occurrences: usize,
        #[arg(long, default_value_t = 0.1)]
        gap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        /// Episode file receiving the planted patterns.
        #[arg(long)]
        planted: Option<PathBuf>,
    },
    /// Empirical distribution of p-values on independent data.
    SimulateNormality {
        #[arg(long, default_value_t = 100)]
        alphabet: usize,
        #[arg(long, default_value_t = 10_000)]
        train_len: usize,
        #[arg(long, default_value_t = 1_000_000)]
        test_len: usize,
        #[arg(long, default_value_t = 12)]
        threshold: usize,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        max_window: usize,
        #[arg(long, default_value_t = 5)]
        max_nodes: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Machine sizes and DOT renderings for one episode.
    Inspect {
        /// Episode in layered form, e.g. `a|b>c`.
        #[arg(long, conflicts_with = "episodes")]
        episode: Option<String>,
        /// Episode file; used with --index.
        #[arg(long)]
        episodes: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Directory for `episode.dot`, `simple.dot`, `window.dot`, `cross.dot`.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MinerArgs {
    #[arg(long)]
    min_support: Option<usize>,
    #[arg(long)]
    max_window: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Comma-separated subset of serial,parallel,general.
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
}

#[derive(Args)]
struct RankArgs {
    /// Window weight base, in (0, 1).
    #[arg(long)]
    rho: Option<f64>,
    /// Longest test window considered (default: unbounded).
    #[arg(long)]
    max_len: Option<usize>,
    /// Additive smoothing of the symbol frequencies.
    #[arg(long)]
    smoothing: Option<f64>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<minwin::Error> for Failure {
    fn from(e: minwin::Error) -> Self {
        match e {
            minwin::Error::InvalidParameter(m) => Failure::Usage(m),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = Config::load(cli.config.as_deref()).map_err(Failure::Usage)?;
    if let Some(n) = cli.workers.or(cfg.workers) {
        if n == 0 {
            return Err(Failure::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Split { input, fraction, train, test } => cmd_split(&input, fraction, &train, &test),
        Command::Mine { input, output, miner } => cmd_mine(&input, output.as_deref(), &miner, &cfg),
        Command::Rank { train, test, episodes, output, rank, stats, windows } => cmd_rank(
            &train,
            &test,
            &episodes,
            output.as_deref(),
            &rank,
            stats.as_deref(),
            windows.as_deref(),
            &cfg,
        ),
        Command::GenInd { alphabet, length, seed, output } => {
            let s = generate_independent(alphabet, length, seed)?;
            write_tokens(&output, &SymbolTable::synthetic(alphabet, "e").render(&s))?;
            Ok(())
        }
        Command::GenPlant { alphabet, length, patterns, pattern_len, occurrences, gap, seed, output, planted } => {
            let pc = PlantConfig { alphabet, length, n_patterns: patterns, pattern_len, occurrences, gap_prob: gap };
            let (s, eps) = generate_planted(&pc, seed)?;
            let table = SymbolTable::synthetic(alphabet, "e");
            write_tokens(&output, &table.render(&s))?;
            if let Some(p) = planted {
                let recs: Vec<EpisodeRecord> =
                    eps.into_iter().map(|episode| EpisodeRecord { episode, support: None }).collect();
                std::fs::write(p, format_episodes(&recs, &table))?;
            }
            Ok(())
        }
        Command::SimulateNormality {
            alphabet,
            train_len,
            test_len,
            threshold,
            rho,
            seed,
            max_window,
            max_nodes,
            output,
        } => {
            let nc = NormalityConfig {
                alphabet,
                train_len,
                test_len,
                threshold,
                rho: rho.or(cfg.rho).unwrap_or(0.5),
                seed,
                max_window,
                max_nodes,
            };
            let res = simulate_normality(&nc)?;
            emit(output.as_deref(), &format_normality_csv(&res))?;
            eprintln!("mined {} episodes, {} scored, KS distance {:.4}", res.mined, res.p_values.len(), res.ks);
            Ok(())
        }
        Command::Inspect { episode, episodes, index, dot_dir } => {
            cmd_inspect(episode.as_deref(), episodes.as_deref(), index, dot_dir.as_deref(), &cfg)
        }
    }
}

/// Writes to `path`, or stdout without one.
fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())
        }
    }
}

fn cmd_split(input: &Path, fraction: f64, train: &Path, test: &Path) -> Outcome {
    let tokens = read_tokens(input)?;
    let (table, s) = intern(&tokens)?;
    let (a, b) = split(&s, fraction)?;
    write_tokens(train, &table.render(&a))?;
    write_tokens(test, &table.render(&b))?;
    Ok(())
}

fn miner_config(args: &MinerArgs, cfg: &Config) -> Result<MinerConfig, Failure> {
    let d = MinerConfig::default();
    let classes = match args.classes.as_ref().or(cfg.miner.classes.as_ref()) {
        Some(names) => parse_classes(names).map_err(Failure::Usage)?,
        None => ClassSet::all(),
    };
    let mc = MinerConfig {
        min_support: args.min_support.or(cfg.miner.min_support).unwrap_or(d.min_support),
        max_window: args.max_window.or(cfg.miner.max_window).unwrap_or(d.max_window),
        max_nodes: args.max_nodes.or(cfg.miner.max_nodes).unwrap_or(d.max_nodes),
        classes,
        state_cap: cfg.state_cap.unwrap_or(DEFAULT_STATE_CAP),
    };
    mc.validate()?;
    Ok(mc)
}

fn cmd_mine(input: &Path, output: Option<&Path>, args: &MinerArgs, cfg: &Config) -> Outcome {
    let mc = miner_config(args, cfg)?;
    let tokens = read_tokens(input)?;
    let (table, s) = intern(&tokens)?;
    let res = mine(&s, &mc)?;
    let recs: Vec<EpisodeRecord> = res
        .episodes
        .into_iter()
        .map(|m| EpisodeRecord { episode: m.episode, support: Some(m.support) })
        .collect();
    emit(output, &format_episodes(&recs, &table))?;
    if res.skipped > 0 {
        eprintln!("skipped {} candidates whose machines exceed the state cap", res.skipped);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_rank(
    train: &Path,
    test: &Path,
    episodes: &Path,
    output: Option<&Path>,
    args: &RankArgs,
    stats: Option<&Path>,
    windows: Option<&Path>,
    cfg: &Config,
) -> Outcome {
    let rc = RankConfig {
        rho: args.rho.or(cfg.rho).unwrap_or(0.5),
        max_len: args.max_len.or(cfg.max_len),
        state_cap: cfg.state_cap.unwrap_or(DEFAULT_STATE_CAP),
    };
    if !(rc.rho > 0.0 && rc.rho < 1.0) {
        return Err(Failure::Usage(format!("rho = {} must lie in (0, 1)", rc.rho)));
    }
    let smoothing = args.smoothing.or(cfg.smoothing).unwrap_or(1.0);
    let (mut table, train_seq) = intern(&read_tokens(train)?)?;
    let test_seq = table.intern_tokens(&read_tokens(test)?);
    let text = std::fs::read_to_string(episodes)?;
    let recs = parse_episodes(&text, &mut table)?;
    let model = estimate_probabilities(&train_seq, &table, smoothing)?;
    let eps: Vec<(Episode, Option<usize>)> = recs.into_iter().map(|r| (r.episode, r.support)).collect();
    let ranked = rank_episodes(&eps, &test_seq, &model, &table, &rc);
    emit(output, &format_ranked_csv(&ranked))?;

    if let Some(path) = stats {
        let mut out = String::new();
        for r in &ranked {
            match diagnose(r.id, &eps[r.id].0, &model, &table, &rc) {
                Ok(d) => {
                    let line = serde_json::to_string(&d).map_err(|e| Failure::Data(e.to_string()))?;
                    out.push_str(&line);
                    out.push('\n');
                }
                Err(e) => {
                    let _ = writeln!(out, "{}", serde_json::json!({ "id": r.id, "error": e.to_string() }));
                }
            }
        }
        std::fs::write(path, out)?;
    }
    if let Some(dir) = windows {
        std::fs::create_dir_all(dir)?;
        for r in &ranked {
            if let Ok(mw) = build_minimal_window_machine(&eps[r.id].0, rc.state_cap) {
                let w = minimal_windows(&test_seq, &mw, rc.max_len).windows;
                std::fs::write(dir.join(format!("{}.csv", r.id)), format_windows(&w))?;
            }
        }
    }
    Ok(())
}

fn cmd_inspect(
    episode: Option<&str>,
    episodes: Option<&Path>,
    index: usize,
    dot_dir: Option<&Path>,
    cfg: &Config,
) -> Outcome {
    let mut table = SymbolTable::new();
    let g = match (episode, episodes) {
        (Some(text), _) => parse_layered(text, &mut table)?,
        (None, Some(path)) => {
            let recs = parse_episodes(&std::fs::read_to_string(path)?, &mut table)?;
            let n = recs.len();
            recs.into_iter()
                .nth(index)
                .ok_or_else(|| Failure::Usage(format!("index {index} out of range ({n} episodes)")))?
                .episode
        }
        (None, None) => return Err(Failure::Usage("give --episode or --episodes".into())),
    };
    let rep = inspect(&g, &table, cfg.state_cap.unwrap_or(DEFAULT_STATE_CAP))?;
    let s = &rep.sizes;
    let mut out = String::new();
    let _ = writeln!(out, "episode {}", g.render(&table));
    let _ = writeln!(out, "machine,states,edges");
    let _ = writeln!(out, "episode,{},{}", s.episode_states, s.episode_edges);
    let _ = writeln!(out, "simple,{},{}", s.simple_states, s.simple_edges);
    let _ = writeln!(out, "window,{},{}", s.window_states, s.window_edges);
    let _ = writeln!(out, "cross,{},{}", rep.cross_states, rep.cross_edges);
    print!("{out}");
    if let Some(dir) = dot_dir {
        std::fs::create_dir_all(dir)?;
        for (name, dot) in &rep.dots {
            std::fs::write(dir.join(format!("{name}.dot")), dot)?;
        }
    }
    Ok(())
}
