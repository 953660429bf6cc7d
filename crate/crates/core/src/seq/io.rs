//! Sequence and probability files.
//!
//! A sequence file is UTF-8 text whose whitespace-separated fields are the
//! tokens; lines starting with `#` are comments. A probability file is a CSV
//! with header `token,probability`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ProbabilityModel, SymbolTable};
use crate::error::{Error, Result};

/// Tokens of a sequence file's contents.
pub fn parse_tokens(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(str::to_owned)
        .collect()
}

pub fn read_tokens(path: &Path) -> Result<Vec<String>> {
    Ok(parse_tokens(&fs::read_to_string(path)?))
}

/// Tokens joined by single spaces, 20 per line.
pub fn format_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for chunk in tokens.chunks(20) {
        let line: Vec<&str> = chunk.iter().map(AsRef::as_ref).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_tokens<S: AsRef<str>>(path: &Path, tokens: &[S]) -> Result<()> {
    fs::write(path, format_tokens(tokens))?;
    Ok(())
}

pub fn format_probabilities(model: &ProbabilityModel<f64>, table: &SymbolTable) -> String {
    let mut out = String::from("token,probability\n");
    for (k, p) in model.probs().iter().enumerate() {
        let _ = writeln!(out, "{},{:e}", table.tokens()[k], p);
    }
    out
}

/// Parses a probability CSV against `table`, interning unseen tokens.
/// Every token of the table must be listed.
pub fn parse_probabilities(text: &str, table: &mut SymbolTable) -> Result<ProbabilityModel<f64>> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line == "token,probability") {
            continue;
        }
        let (tok, p) = line.rsplit_once(',').ok_or(Error::Parse {
            line: line_no,
            msg: "expected token,probability".into(),
        })?;
        let p: f64 = p.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad probability `{p}`"),
        })?;
        pairs.push((table.insert(tok.trim()), p));
    }
    let mut probs = vec![f64::NAN; table.len()];
    for (s, p) in pairs {
        probs[s.index()] = p;
    }
    if let Some(k) = probs.iter().position(|p| p.is_nan()) {
        return Err(Error::ZeroProbability(table.tokens()[k].clone()));
    }
    ProbabilityModel::new(probs)
}
