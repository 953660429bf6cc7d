//! Event sequences over a finite alphabet, the independence model, and
//! synthetic data.
//!
//! Positions are 1-based wherever they leave this crate (`s[i, j]` in window
//! lists, split points); storage is an ordinary 0-based `Vec`.

mod generate;
pub mod io;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use generate::{generate_independent, generate_planted, PlantConfig};

/// Dense symbol id.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub u32);

impl Symbol {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bijection between tokens and dense symbol ids, in first-appearance order.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    tokens: Vec<String>,
    ids: HashMap<String, Symbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table whose tokens are `prefix0 .. prefix{n-1}`.
    pub fn synthetic(n: usize, prefix: &str) -> Self {
        let mut table = Self::new();
        for i in 0..n {
            table.insert(&format!("{prefix}{i}"));
        }
        table
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, assigning the next free id if it is new.
    pub fn insert(&mut self, token: &str) -> Symbol {
        if let Some(&s) = self.ids.get(token) {
            return s;
        }
        let s = Symbol(self.tokens.len() as u32);
        self.tokens.push(token.to_owned());
        self.ids.insert(token.to_owned(), s);
        s
    }

    pub fn get(&self, token: &str) -> Option<Symbol> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, s: Symbol) -> &str {
        &self.tokens[s.index()]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Interns `tokens` into this table, growing it as needed.
    pub fn intern_tokens<S: AsRef<str>>(&mut self, tokens: &[S]) -> EventSequence {
        let symbols: Vec<Symbol> = tokens.iter().map(|t| self.insert(t.as_ref())).collect();
        EventSequence {
            symbols,
            alphabet: self.len(),
        }
    }

    /// Token rendering of a sequence.
    pub fn render(&self, s: &EventSequence) -> Vec<String> {
        s.symbols.iter().map(|&x| self.token(x).to_owned()).collect()
    }
}

/// Builds a fresh symbol table from a token list.
pub fn intern<S: AsRef<str>>(tokens: &[S]) -> Result<(SymbolTable, EventSequence)> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("token list"));
    }
    let mut table = SymbolTable::new();
    let seq = table.intern_tokens(tokens);
    Ok((table, seq))
}

/// A string of symbols `s_1 .. s_L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventSequence {
    symbols: Vec<Symbol>,
    alphabet: usize,
}

impl EventSequence {
    /// Sequence over an alphabet of `alphabet` symbols.
    pub fn new(symbols: Vec<Symbol>, alphabet: usize) -> Result<Self> {
        if let Some(s) = symbols.iter().find(|s| s.index() >= alphabet) {
            return Err(Error::InvalidParameter(format!(
                "symbol {s} outside alphabet of size {alphabet}"
            )));
        }
        Ok(Self { symbols, alphabet })
    }

    /// Convenience constructor from raw ids; the alphabet is `max + 1`.
    pub fn from_ids(ids: &[u32]) -> Self {
        let alphabet = ids.iter().map(|&i| i as usize + 1).max().unwrap_or(0);
        Self {
            symbols: ids.iter().map(|&i| Symbol(i)).collect(),
            alphabet,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// `s_i`, 1-based.
    pub fn at(&self, i: usize) -> Symbol {
        self.symbols[i - 1]
    }

    /// `s[i, j]`, 1-based and inclusive.
    pub fn window(&self, i: usize, j: usize) -> &[Symbol] {
        &self.symbols[i - 1..j]
    }

    /// Occurrence count of each symbol.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.alphabet];
        for s in &self.symbols {
            c[s.index()] += 1;
        }
        c
    }
}

/// Splits `s` into `s[1, floor(fraction L)]` and the remainder.
pub fn split(s: &EventSequence, fraction: f64) -> Result<(EventSequence, EventSequence)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction {fraction} must lie in (0, 1)"
        )));
    }
    let cut = (fraction * s.len() as f64).floor() as usize;
    let train = EventSequence {
        symbols: s.symbols[..cut].to_vec(),
        alphabet: s.alphabet,
    };
    let test = EventSequence {
        symbols: s.symbols[cut..].to_vec(),
        alphabet: s.alphabet,
    };
    Ok((train, test))
}

/// Per-symbol probabilities of the independence model.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityModel<T> {
    probs: Vec<T>,
    smoothing: Option<f64>,
}

impl<T: Scalar> ProbabilityModel<T> {
    /// Validates strict positivity and normalization (to 1e-9).
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("probability vector"));
        }
        let zero = T::zero();
        if let Some(i) = probs.iter().position(|p| *p <= zero) {
            return Err(Error::ZeroProbability(i.to_string()));
        }
        let total = probs.iter().fold(T::zero(), |acc, p| acc + p.clone());
        if (total.as_f64() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {}",
                total.as_f64()
            )));
        }
        Ok(Self {
            probs,
            smoothing: None,
        })
    }

    pub fn uniform(n: usize) -> Self {
        let p = T::one() / T::from_usize(n).expect("alphabet size fits the scalar");
        Self {
            probs: vec![p; n],
            smoothing: None,
        }
    }

    #[inline]
    pub fn p(&self, s: crate::Symbol) -> &T {
        &self.probs[s.index()]
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn smoothing(&self) -> Option<f64> {
        self.smoothing
    }

    pub fn to_f64(&self) -> ProbabilityModel<f64> {
        ProbabilityModel {
            probs: self.probs.iter().map(|p| p.as_f64()).collect(),
            smoothing: self.smoothing,
        }
    }
}

/// Laplace-smoothed estimate `(count(a) + smoothing) / (L + smoothing |Σ|)`
/// over every symbol of `table`.
pub fn estimate_probabilities(
    s: &EventSequence,
    table: &SymbolTable,
    smoothing: f64,
) -> Result<ProbabilityModel<f64>> {
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "smoothing {smoothing} must be >= 0"
        )));
    }
    let n = table.len().max(s.alphabet_size());
    if n == 0 {
        return Err(Error::EmptyInput("alphabet"));
    }
    let mut counts = vec![0usize; n];
    for x in s.symbols() {
        counts[x.index()] += 1;
    }
    if smoothing == 0.0 {
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            let name = table
                .tokens()
                .get(i)
                .cloned()
                .unwrap_or_else(|| i.to_string());
            return Err(Error::ZeroProbability(name));
        }
    }
    let denom = s.len() as f64 + smoothing * n as f64;
    let probs = counts
        .iter()
        .map(|&c| (c as f64 + smoothing) / denom)
        .collect();
    Ok(ProbabilityModel {
        probs,
        smoothing: Some(smoothing),
    })
}
