use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EventSequence, Symbol};
use crate::episode::Episode;
use crate::error::{Error, Result};

/// I.i.d. uniform symbols over `0..alphabet`.
pub fn generate_independent(alphabet: usize, length: usize, seed: u64) -> Result<EventSequence> {
    if alphabet == 0 {
        return Err(Error::InvalidParameter("alphabet must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..length)
        .map(|_| Symbol(rng.random_range(0..alphabet as u32)))
        .collect();
    EventSequence::new(symbols, alphabet)
}

/// Parameters of the planted-pattern generator.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantConfig {
    pub alphabet: usize,
    pub length: usize,
    pub n_patterns: usize,
    pub pattern_len: usize,
    pub occurrences: usize,
    pub gap_prob: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            alphabet: 1000,
            length: 40_000,
            n_patterns: 5,
            pattern_len: 5,
            occurrences: 100,
            gap_prob: 0.1,
        }
    }
}

const ATTEMPTS: usize = 10_000;

/// Uniform background of `length` symbols with serial patterns written over
/// it at random non-overlapping anchors.
///
/// Pattern labels are drawn without replacement, disjoint across patterns
/// whenever the alphabet is large enough and unique within each pattern.
/// Every occurrence is a block: the pattern's symbols in order, with one
/// uniform gap symbol inserted after each but the last with probability
/// `gap_prob`.
pub fn generate_planted(cfg: &PlantConfig, seed: u64) -> Result<(EventSequence, Vec<Episode>)> {
    let PlantConfig {
        alphabet,
        length,
        n_patterns,
        pattern_len,
        occurrences,
        gap_prob,
    } = *cfg;
    if alphabet == 0 || pattern_len == 0 || pattern_len > alphabet {
        return Err(Error::InvalidParameter(format!(
            "pattern length {pattern_len} needs an alphabet of at least that size, got {alphabet}"
        )));
    }
    if !(0.0..=1.0).contains(&gap_prob) {
        return Err(Error::InvalidParameter(format!(
            "gap probability {gap_prob} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols: Vec<Symbol> = (0..length)
        .map(|_| Symbol(rng.random_range(0..alphabet as u32)))
        .collect();

    let disjoint = n_patterns * pattern_len <= alphabet;
    let mut pool: Vec<u32> = (0..alphabet as u32).collect();
    let mut patterns = Vec::with_capacity(n_patterns);
    for _ in 0..n_patterns {
        if !disjoint || pool.len() < pattern_len {
            pool = (0..alphabet as u32).collect();
        }
        let mut labels = Vec::with_capacity(pattern_len);
        for _ in 0..pattern_len {
            let k = rng.random_range(0..pool.len());
            labels.push(Symbol(pool.swap_remove(k)));
        }
        patterns.push(labels);
    }

    let mut blocks: Vec<Vec<Symbol>> = Vec::with_capacity(n_patterns * occurrences);
    for labels in &patterns {
        for _ in 0..occurrences {
            let mut block = Vec::with_capacity(2 * pattern_len);
            for (k, &l) in labels.iter().enumerate() {
                block.push(l);
                if k + 1 < pattern_len && rng.random_bool(gap_prob) {
                    block.push(Symbol(rng.random_range(0..alphabet as u32)));
                }
            }
            blocks.push(block);
        }
    }
    let total: usize = blocks.iter().map(Vec::len).sum();
    if total > length {
        return Err(Error::NoRoom);
    }

    let mut used = vec![false; length];
    for block in &blocks {
        let span = block.len();
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let start = rng.random_range(0..=length - span);
            if used[start..start + span].iter().all(|u| !u) {
                used[start..start + span].iter_mut().for_each(|u| *u = true);
                symbols[start..start + span].copy_from_slice(block);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::NoRoom);
        }
    }
    let seq = EventSequence::new(symbols, alphabet)?;
    let planted = patterns.iter().map(|l| Episode::serial(l)).collect();
    Ok((seq, planted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_when_alphabet_is_one() {
        let s = generate_independent(1, 50, 3).unwrap();
        assert!(s.symbols().iter().all(|&x| x == Symbol(0)));
        assert!(generate_independent(0, 5, 3).is_err());
    }

    #[test]
    fn reproducible() {
        assert_eq!(
            generate_independent(10, 100, 9).unwrap(),
            generate_independent(10, 100, 9).unwrap()
        );
        assert_ne!(
            generate_independent(10, 100, 9).unwrap(),
            generate_independent(10, 100, 10).unwrap()
        );
    }

    #[test]
    fn chi_square_uniformity() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let s = generate_independent(100, 1_000_000, 11).unwrap();
        let expected = 10_000.0;
        let stat: f64 = s
            .counts()
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let critical = ChiSquared::new(99.0).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "{stat} >= {critical}");
    }

    #[test]
    fn gapless_blocks_are_exact_substrings() {
        let cfg = PlantConfig {
            alphabet: 50,
            length: 2000,
            n_patterns: 3,
            pattern_len: 4,
            occurrences: 20,
            gap_prob: 0.0,
        };
        let (s, planted) = generate_planted(&cfg, 5).unwrap();
        assert_eq!(s.len(), 2000);
        for g in &planted {
            assert!(g.is_strict());
            let labels = g.labels();
            let hits = s.symbols().windows(4).filter(|w| *w == labels).count();
            assert_eq!(hits, 20);
        }
    }

    #[test]
    fn no_room() {
        let cfg = PlantConfig {
            alphabet: 10,
            length: 30,
            n_patterns: 2,
            pattern_len: 5,
            occurrences: 4,
            gap_prob: 0.0,
        };
        assert!(matches!(generate_planted(&cfg, 1), Err(Error::NoRoom)));
    }
}
