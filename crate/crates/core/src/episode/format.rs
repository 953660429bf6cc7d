//! Text and JSON forms of episodes.
//!
//! The text format is one block per episode, blocks separated by blank lines:
//!
//! ```text
//! nodes 0:a 1:b 2:c
//! edges 0>2 1>2
//! support 17
//! ```
//!
//! `edges` and `support` are optional; `#` starts a comment line.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Episode;
use crate::error::{Error, Result};
use crate::seq::SymbolTable;

/// An episode with its optional support annotation.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub episode: Episode,
    pub support: Option<usize>,
}

/// Structured export of an episode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeJson {
    pub nodes: Vec<usize>,
    pub labels: Vec<String>,
    pub edges: Vec<[usize; 2]>,
}

impl Episode {
    pub fn to_json(&self, table: &SymbolTable) -> EpisodeJson {
        EpisodeJson {
            nodes: (0..self.len()).collect(),
            labels: self
                .labels()
                .iter()
                .map(|&s| table.token(s).to_owned())
                .collect(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }

    pub fn from_json(j: &EpisodeJson, table: &mut SymbolTable) -> Result<Episode> {
        if j.nodes.len() != j.labels.len() || j.nodes.iter().enumerate().any(|(i, &v)| i != v) {
            return Err(Error::InvalidParameter(
                "nodes must be 0..k and match labels".into(),
            ));
        }
        let labels = j.labels.iter().map(|t| table.insert(t)).collect();
        let edges: Vec<(usize, usize)> = j.edges.iter().map(|e| (e[0], e[1])).collect();
        Episode::new(labels, &edges)
    }

    /// Depth of each node: longest chain of predecessors.
    fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.len()];
        for v in self.topological_order() {
            for w in super::ones(self.succ(v)) {
                depth[w] = depth[w].max(depth[v] + 1);
            }
        }
        depth
    }

    /// Linear rendering: `a>b|c` lists layers separated by `>` and nodes
    /// within a layer by `|`, used whenever every node of a layer precedes
    /// every node of later layers. Other orders are written as their
    /// covering edges, e.g. `a>c,b>c,b>d`, with `#i` suffixes if labels repeat.
    pub fn render(&self, table: &SymbolTable) -> String {
        if self.is_empty() {
            return String::new();
        }
        let depth = self.depths();
        let layered = (0..self.len()).all(|u| {
            (0..self.len()).all(|v| (depth[u] < depth[v]) == self.precedes(u, v))
        });
        let name = |v: usize| table.token(self.label(v)).to_owned();
        if layered {
            let top = depth.iter().copied().max().unwrap_or(0);
            let mut layers: Vec<Vec<String>> = vec![Vec::new(); top + 1];
            let mut nodes: Vec<usize> = (0..self.len()).collect();
            nodes.sort_by(|&a, &b| name(a).cmp(&name(b)).then(a.cmp(&b)));
            for v in nodes {
                layers[depth[v]].push(name(v));
            }
            return layers
                .into_iter()
                .map(|l| l.join("|"))
                .collect::<Vec<_>>()
                .join(">");
        }
        let mut seen = std::collections::HashSet::new();
        let repeats = !self.labels().iter().all(|l| seen.insert(*l));
        let tag = |v: usize| {
            if repeats {
                format!("{}#{v}", name(v))
            } else {
                name(v)
            }
        };
        let edges = self.edges();
        let mut parts: Vec<String> = edges
            .iter()
            .map(|&(a, b)| format!("{}>{}", tag(a), tag(b)))
            .collect();
        for v in 0..self.len() {
            if !edges.iter().any(|&(a, b)| a == v || b == v) {
                parts.push(tag(v));
            }
        }
        parts.join(",")
    }
}

/// Parses the layered form produced by [`Episode::render`] for layered
/// episodes: `a|b>c` puts `a` and `b` before `c`.
pub fn parse_layered(text: &str, table: &mut SymbolTable) -> Result<Episode> {
    let bad = |msg: String| Error::Parse { line: 1, msg };
    let mut labels = Vec::new();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for layer in text.trim().split('>') {
        let mut nodes = Vec::new();
        for token in layer.split('|') {
            let token = token.trim();
            if token.is_empty() || token.contains(char::is_whitespace) {
                return Err(bad(format!("bad label `{token}` in `{text}`")));
            }
            nodes.push(labels.len());
            labels.push(table.insert(token));
        }
        layers.push(nodes);
    }
    let mut edges = Vec::new();
    for w in layers.windows(2) {
        for &a in &w[0] {
            for &b in &w[1] {
                edges.push((a, b));
            }
        }
    }
    Episode::new(labels, &edges)
}

/// Writes records in the block text format.
pub fn format_episodes(records: &[EpisodeRecord], table: &SymbolTable) -> String {
    let mut out = String::new();
    for (k, r) in records.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str("nodes");
        for (i, &l) in r.episode.labels().iter().enumerate() {
            let _ = write!(out, " {i}:{}", table.token(l));
        }
        out.push('\n');
        let edges = r.episode.edges();
        if !edges.is_empty() {
            out.push_str("edges");
            for (a, b) in edges {
                let _ = write!(out, " {a}>{b}");
            }
            out.push('\n');
        }
        if let Some(s) = r.support {
            let _ = writeln!(out, "support {s}");
        }
    }
    out
}

/// Parses the block text format, interning labels into `table`.
pub fn parse_episodes(text: &str, table: &mut SymbolTable) -> Result<Vec<EpisodeRecord>> {
    struct Pending {
        line: usize,
        labels: Vec<String>,
        edges: Vec<(usize, usize)>,
        support: Option<usize>,
    }
    let mut out = Vec::new();
    let mut cur: Option<Pending> = None;
    let finish = |p: Pending, table: &mut SymbolTable, out: &mut Vec<EpisodeRecord>| -> Result<()> {
        let labels = p.labels.iter().map(|t| table.insert(t)).collect();
        let episode = Episode::new(labels, &p.edges).map_err(|e| Error::Parse {
            line: p.line,
            msg: e.to_string(),
        })?;
        out.push(EpisodeRecord {
            episode,
            support: p.support,
        });
        Ok(())
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            if let Some(p) = cur.take() {
                finish(p, table, &mut out)?;
            }
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let head = fields.next().unwrap_or_default();
        let err = |msg: String| Error::Parse { line, msg };
        match head {
            "nodes" => {
                if let Some(p) = cur.take() {
                    finish(p, table, &mut out)?;
                }
                let mut labels = Vec::new();
                for (k, f) in fields.enumerate() {
                    let (i, label) = f
                        .split_once(':')
                        .ok_or_else(|| err(format!("expected index:label, got `{f}`")))?;
                    let i: usize = i.parse().map_err(|_| err(format!("bad node index `{i}`")))?;
                    if i != k {
                        return Err(err(format!("node indices must be 0..k in order, got {i}")));
                    }
                    if label.is_empty() {
                        return Err(err("empty label".into()));
                    }
                    labels.push(label.to_owned());
                }
                if labels.is_empty() {
                    return Err(err("episode without nodes".into()));
                }
                cur = Some(Pending {
                    line,
                    labels,
                    edges: Vec::new(),
                    support: None,
                });
            }
            "edges" => {
                let p = cur
                    .as_mut()
                    .ok_or_else(|| err("`edges` before `nodes`".into()))?;
                for f in fields {
                    let (a, b) = f
                        .split_once('>')
                        .ok_or_else(|| err(format!("expected from>to, got `{f}`")))?;
                    let a: usize = a.parse().map_err(|_| err(format!("bad node `{a}`")))?;
                    let b: usize = b.parse().map_err(|_| err(format!("bad node `{b}`")))?;
                    p.edges.push((a, b));
                }
            }
            "support" => {
                let p = cur
                    .as_mut()
                    .ok_or_else(|| err("`support` before `nodes`".into()))?;
                let v = fields.next().ok_or_else(|| err("missing support".into()))?;
                p.support = Some(v.parse().map_err(|_| err(format!("bad support `{v}`")))?);
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    if let Some(p) = cur.take() {
        finish(p, table, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::Symbol;

    fn table() -> SymbolTable {
        let mut t = SymbolTable::new();
        for c in ["a", "b", "c", "d"] {
            t.insert(c);
        }
        t
    }

    fn ep(labels: &[u32], edges: &[(usize, usize)]) -> Episode {
        Episode::new(labels.iter().map(|&l| Symbol(l)).collect(), edges).unwrap()
    }

    #[test]
    fn layered_round_trip() {
        let mut t = table();
        for text in ["a>b>c", "a|b|c", "a|b>c", "a>b|c>d", "a"] {
            let g = parse_layered(text, &mut t).unwrap();
            assert_eq!(g.render(&t), text);
        }
        let g = parse_layered("a > b|zz", &mut t).unwrap();
        assert_eq!(g.render(&t), "a>b|zz");
        assert!(parse_layered("a>>b", &mut t).is_err());
        assert!(parse_layered("", &mut t).is_err());
    }

    #[test]
    fn render_shapes() {
        let t = table();
        assert_eq!(ep(&[0, 1, 2], &[(0, 1), (1, 2)]).render(&t), "a>b>c");
        assert_eq!(ep(&[2, 0, 1], &[]).render(&t), "a|b|c");
        assert_eq!(ep(&[0, 1, 2], &[(0, 2), (1, 2)]).render(&t), "a|b>c");
        assert_eq!(
            ep(&[0, 1, 2, 3], &[(0, 1), (0, 2), (1, 3), (2, 3)]).render(&t),
            "a>b|c>d"
        );
        assert_eq!(ep(&[0, 1, 2], &[(0, 1)]).render(&t), "a>b,c");
        assert_eq!(ep(&[0, 0, 1], &[(0, 2)]).render(&t), "a#0>b#2,a#1");
    }

    #[test]
    fn text_round_trip() {
        let mut t = table();
        let recs = vec![
            EpisodeRecord {
                episode: ep(&[0, 1, 2], &[(0, 2), (1, 2)]),
                support: Some(17),
            },
            EpisodeRecord {
                episode: ep(&[3], &[]),
                support: None,
            },
        ];
        let text = format_episodes(&recs, &t);
        assert_eq!(text, "nodes 0:a 1:b 2:c\nedges 0>2 1>2\nsupport 17\n\nnodes 0:d\n");
        assert_eq!(parse_episodes(&text, &mut t).unwrap(), recs);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let mut t = table();
        match parse_episodes("nodes 0:a\nedges 0-1\n", &mut t) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_episodes("\n\nnodes 0:a 1:b\nedges 0>1 1>0\n", &mut t) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_episodes("bogus\n", &mut t).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut t = table();
        let g = ep(&[0, 1, 2, 3], &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let j = g.to_json(&t);
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(
            text,
            r#"{"nodes":[0,1,2,3],"labels":["a","b","c","d"],"edges":[[0,1],[0,2],[1,3],[2,3]]}"#
        );
        let back: EpisodeJson = serde_json::from_str(&text).unwrap();
        assert_eq!(Episode::from_json(&back, &mut t).unwrap(), g);
    }
}
