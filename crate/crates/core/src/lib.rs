//! Finite-rank, finite-divisibility-depth approximations of rigid
//! torsion-free abelian groups, together with the machinery needed to
//! verify their structure mechanically: exact rational lattice
//! membership, pure closures, almost-disjoint separation families,
//! divisibility-ladder constructions, and endomorphism-ring solvers.
//!
//! Everything here is exact: arithmetic is arbitrary-precision rational,
//! divisibility questions are decided by prime-local lattice tests, and
//! no floating point appears anywhere.
//!
//! The crate is `no_std` (with `alloc`); all IO and serialization live in
//! the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod construction;
pub mod formula;
pub mod lattice;
pub mod matrix;
pub mod presentation;
pub mod report;
pub mod rigidity;
pub mod separation;
pub mod symbol;
pub mod vector;

mod error;

pub use error::Error;

/// Exact arbitrary-precision rational scalar used throughout.
pub type Rational = num_rational::BigRational;
/// Exact arbitrary-precision integer.
pub type Int = num_bigint::BigInt;

use num_traits::{One, Signed, Zero};

/// p-adic valuation of a nonzero rational: `r = p^v * (u/w)` with `p`
/// dividing neither `u` nor `w`.
pub fn valuation(r: &Rational, p: u64) -> Result<i64, Error> {
    if r.is_zero() {
        return Err(Error::ValuationAtZero);
    }
    let p = Int::from(p);
    let mut v: i64 = 0;
    let mut n = r.numer().abs();
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    let mut d = r.denom().clone();
    while (&d % &p).is_zero() {
        d /= &p;
        v -= 1;
    }
    Ok(v)
}

/// Invertibility in the coefficient ring, which is fixed to the integers:
/// only 1 and -1 are units.
pub fn is_invertible(c: &Int) -> bool {
    c.is_one() || (-c).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(Int::from(n), Int::from(d))
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&q(8, 1), 2).unwrap(), 3);
        assert_eq!(valuation(&q(1, 9), 3).unwrap(), -2);
        assert_eq!(valuation(&q(5, 6), 5).unwrap(), 1);
        assert_eq!(valuation(&q(5, 6), 2).unwrap(), -1);
        assert_eq!(valuation(&q(5, 6), 7).unwrap(), 0);
    }

    #[test]
    fn valuation_zero_is_an_error() {
        assert!(matches!(
            valuation(&Rational::zero(), 2),
            Err(Error::ValuationAtZero)
        ));
    }

    #[test]
    fn invertible_only_at_units() {
        assert!(is_invertible(&Int::from_i64(1).unwrap()));
        assert!(is_invertible(&Int::from_i64(-1).unwrap()));
        assert!(!is_invertible(&Int::from_i64(5).unwrap()));
        assert!(!is_invertible(&Int::from_i64(0).unwrap()));
    }
}
