//! Scalar abstraction for the moment recursions.
//!
//! Everything that only needs field arithmetic (greedy probabilities, the
//! moment recursion, cross-moments and covariance assembly) is written against
//! [`Scalar`], so the same code runs on `f64` and on exact big rationals.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A number we can run the moment recursions over.
pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync {
    /// Lossy view used for diagnostics, tolerances and error messages.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self^n` by repeated squaring.
    fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            n >>= 1;
        }
        acc
    }

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }
}

impl<T> Scalar for T where
    T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_bigint::BigInt;

    #[test]
    fn powi_matches_float() {
        assert_eq!(Scalar::powi(&0.5f64, 10), 0.5f64.powi(10));
        assert_eq!(Scalar::powi(&3.0f64, 0), 1.0);
    }

    #[test]
    fn rational_roundtrip() {
        let x = Rational::new(BigInt::from(3), BigInt::from(7));
        assert!((x.as_f64() - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(Scalar::powi(&x, 2), Rational::new(BigInt::from(9), BigInt::from(49)));
        assert_eq!(x.recip(), Rational::new(BigInt::from(7), BigInt::from(3)));
    }
}
