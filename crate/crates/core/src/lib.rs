//! Mining and ranking of episode patterns by the compactness of their
//! minimal windows.
//!
//! Episodes are labelled DAGs. For each one we build an automaton that
//! recognises its minimal windows, compute the exact mean and variance of the
//! average window weight `ρ^len` under an independence model, and turn the
//! observed average on a test sequence into a Z-score.
//!
//! The probability computations are generic over [`Scalar`]; the aliases
//! below fix them to `f64` or to exact big rationals.

pub mod episode;
pub mod error;
pub mod fsm;
pub mod miner;
pub mod oracle;
pub mod pipeline;
pub mod scalar;
pub mod scan;
pub mod seq;
pub mod stats;

pub use episode::{CanonicalKey, Episode, EpisodeClass};
pub use error::{Error, Result};
pub use fsm::{Machine, MinimalWindowMachine, StateId};
pub use scalar::Scalar;
pub use seq::{EventSequence, ProbabilityModel, Symbol, SymbolTable};
pub use stats::EpisodeStatistics;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

/// Independence model over `f64`.
pub type Probabilities = ProbabilityModel<f64>;
/// Independence model over exact rationals.
pub type ExactProbabilities = ProbabilityModel<Rational>;
/// Model quantities over `f64`.
pub type Statistics = EpisodeStatistics<f64>;
/// Model quantities over exact rationals.
pub type ExactStatistics = EpisodeStatistics<Rational>;
