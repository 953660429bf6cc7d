use std::path::Path;
use std::process::{Command, Output};

fn minwin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minwin"))
        .args(["--workers", "1"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rendered(text: &str) -> Vec<String> {
    let mut table = minwin::SymbolTable::new();
    minwin::episode::parse_episodes(text, &mut table)
        .unwrap()
        .iter()
        .map(|r| r.episode.render(&table))
        .collect()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn planted_patterns_rank_first() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.txt");
    let planted = dir.path().join("planted.txt");
    let train = dir.path().join("train.txt");
    let test = dir.path().join("test.txt");
    let mined = dir.path().join("mined.txt");
    let ranked = dir.path().join("ranked.csv");
    let stats = dir.path().join("stats.jsonl");
    let windows = dir.path().join("windows");

    ok(&minwin(&[
        "gen-plant", "--alphabet", "200", "--length", "8000", "--patterns", "2",
        "--pattern-len", "3", "--occurrences", "60", "--seed", "7",
        "--output", p(&seq), "--planted", p(&planted),
    ]));
    ok(&minwin(&["split", "--input", p(&seq), "--train", p(&train), "--test", p(&test)]));
    let train_len = std::fs::read_to_string(&train).unwrap().split_whitespace().count();
    let test_len = std::fs::read_to_string(&test).unwrap().split_whitespace().count();
    assert_eq!((train_len, test_len), (4000, 4000));

    ok(&minwin(&[
        "mine", "--input", p(&train), "--output", p(&mined), "--min-support", "20",
        "--max-window", "6", "--max-nodes", "3", "--classes", "serial",
    ]));
    ok(&minwin(&[
        "rank", "--train", p(&train), "--test", p(&test), "--episodes", p(&mined),
        "--output", p(&ranked), "--stats", p(&stats), "--windows", p(&windows),
    ]));

    let planted = rendered(&std::fs::read_to_string(&planted).unwrap());
    let csv = std::fs::read_to_string(&ranked).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("rank,id,episode,"));
    let top: Vec<String> = lines.take(2).map(|l| l.split(',').nth(2).unwrap().to_string()).collect();
    for t in &top {
        assert!(planted.contains(t), "{t} not among {planted:?}\n{csv}");
    }

    let stats_text = std::fs::read_to_string(&stats).unwrap();
    let first: serde_json::Value = serde_json::from_str(stats_text.lines().next().unwrap()).unwrap();
    assert!(first.get("sizes").is_some());
    assert!(std::fs::read_dir(&windows).unwrap().count() > 0);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        ok(&minwin(&["gen-ind", "--alphabet", "5", "--length", "300", "--seed", "3", "--output", p(out)]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let m1 = minwin(&["mine", "--input", p(&a), "--min-support", "4", "--max-window", "5"]);
    let m2 = minwin(&["mine", "--input", p(&b), "--min-support", "4", "--max-window", "5"]);
    ok(&m1);
    assert_eq!(m1.stdout, m2.stdout);
    assert!(!m1.stdout.is_empty());
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.txt");
    std::fs::write(&seq, "a b a b a b a b a b a b\n").unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[miner]\nmin_support = 6\nmax_window = 2\nclasses = [\"serial\"]\n").unwrap();
    let out = minwin(&["--config", p(&cfg), "mine", "--input", p(&seq)]);
    ok(&out);
    assert_eq!(rendered(&String::from_utf8(out.stdout).unwrap()), ["a>b"]);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "rhoo = 0.5\n").unwrap();
    assert_eq!(minwin(&["--config", p(&bad), "mine", "--input", p(&seq)]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(minwin(&["--help"]).status.code(), Some(0));
    assert_eq!(minwin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(minwin(&["mine"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(minwin(&["mine", "--input", p(&missing)]).status.code(), Some(2));

    let seq = dir.path().join("seq.txt");
    std::fs::write(&seq, "a b c\n").unwrap();
    assert_eq!(
        minwin(&["mine", "--input", p(&seq), "--min-support", "0"]).status.code(),
        Some(1)
    );
    let eps = dir.path().join("eps.txt");
    std::fs::write(&eps, "a>b>a>\n").unwrap();
    let out = minwin(&["rank", "--train", p(&seq), "--test", p(&seq), "--episodes", p(&eps)]);
    assert_eq!(out.status.code(), Some(2));
    let out = minwin(&["rank", "--train", p(&seq), "--test", p(&seq), "--episodes", p(&seq), "--rho", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn inspect_reports_sizes_and_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = minwin(&["inspect", "--episode", "a>b|c", "--dot-dir", p(dir.path())]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("episode a>b|c\n"), "{text}");
    assert!(text.contains("machine,states,edges"));
    for name in ["episode", "window", "cross"] {
        let dot = std::fs::read_to_string(dir.path().join(format!("{name}.dot"))).unwrap();
        assert!(dot.starts_with("digraph"), "{name}: {dot}");
    }
}
