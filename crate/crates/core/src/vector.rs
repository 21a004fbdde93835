//! Sparse exact rational vectors over the symbolic basis.

use crate::symbol::BasisSymbol;
use crate::{Int, Rational};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};
use num_traits::Zero;

/// A finitely supported map from basis symbols to rationals.
///
/// Canonical: explicit zero entries are never stored, so equality is
/// entry-wise map equality.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct RationalVector {
    entries: BTreeMap<BasisSymbol, Rational>,
}

impl RationalVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Unit vector in the given direction.
    pub fn unit(sym: BasisSymbol) -> Self {
        let mut v = Self::zero();
        v.set(sym, Rational::from(Int::from(1)));
        v
    }

    pub fn from_entries<I: IntoIterator<Item = (BasisSymbol, Rational)>>(it: I) -> Self {
        let mut v = Self::zero();
        for (s, c) in it {
            v.add_assign_entry(s, c);
        }
        v
    }

    pub fn set(&mut self, sym: BasisSymbol, value: Rational) {
        if value.is_zero() {
            self.entries.remove(&sym);
        } else {
            self.entries.insert(sym, value);
        }
    }

    pub fn add_assign_entry(&mut self, sym: BasisSymbol, value: Rational) {
        if value.is_zero() {
            return;
        }
        let entry = self.entries.entry(sym).or_insert_with(Rational::zero);
        *entry += value;
        if entry.is_zero() {
            self.entries.remove(&sym);
        }
    }

    pub fn coeff(&self, sym: &BasisSymbol) -> Rational {
        self.entries.get(sym).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisSymbol, &Rational)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &BasisSymbol> {
        self.entries.keys()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            entries: self
                .entries
                .iter()
                .map(|(s, v)| (*s, v * c))
                .collect(),
        }
    }

    /// Least common multiple of the entry denominators (1 for the zero vector).
    pub fn denominator_lcm(&self) -> Int {
        let mut l = Int::from(1);
        for v in self.entries.values() {
            l = num_integer::lcm(l, v.denom().clone());
        }
        l
    }

    /// Restriction to the symbols satisfying the predicate.
    pub fn filter<F: Fn(&BasisSymbol) -> bool>(&self, keep: F) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| keep(s))
                .map(|(s, v)| (*s, v.clone()))
                .collect(),
        }
    }

    /// Dense coordinates with respect to an ordered basis slice. Symbols
    /// outside the slice are reported as the error payload.
    pub fn to_dense(&self, basis: &[BasisSymbol]) -> Result<Vec<Rational>, BasisSymbol> {
        let mut dense = alloc::vec![Rational::zero(); basis.len()];
        for (s, v) in &self.entries {
            match basis.iter().position(|b| b == s) {
                Some(i) => dense[i] = v.clone(),
                None => return Err(*s),
            }
        }
        Ok(dense)
    }

    pub fn from_dense(basis: &[BasisSymbol], coords: &[Rational]) -> Self {
        Self::from_entries(
            basis
                .iter()
                .zip(coords.iter())
                .map(|(s, c)| (*s, c.clone())),
        )
    }
}

impl Add for &RationalVector {
    type Output = RationalVector;
    fn add(self, rhs: &RationalVector) -> RationalVector {
        let mut out = self.clone();
        for (s, v) in rhs.iter() {
            out.add_assign_entry(*s, v.clone());
        }
        out
    }
}

impl Sub for &RationalVector {
    type Output = RationalVector;
    fn sub(self, rhs: &RationalVector) -> RationalVector {
        let mut out = self.clone();
        for (s, v) in rhs.iter() {
            out.add_assign_entry(*s, -v.clone());
        }
        out
    }
}

impl Neg for &RationalVector {
    type Output = RationalVector;
    fn neg(self) -> RationalVector {
        self.scaled(&Rational::from(Int::from(-1)))
    }
}

impl Mul<&Rational> for &RationalVector {
    type Output = RationalVector;
    fn mul(self, c: &Rational) -> RationalVector {
        self.scaled(c)
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{v}*{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(Int::from(n), Int::from(d))
    }

    #[test]
    fn zero_entries_are_never_stored() {
        let x = BasisSymbol::X(0);
        let mut v = RationalVector::unit(x);
        v.add_assign_entry(x, q(-1, 1));
        assert!(v.is_zero());
        assert_eq!(v, RationalVector::zero());
    }

    #[test]
    fn arithmetic_round_trip() {
        let x = BasisSymbol::X(0);
        let y = BasisSymbol::Y(0, 0);
        let v = RationalVector::from_entries([(x, q(1, 2)), (y, q(2, 3))]);
        let w = RationalVector::from_entries([(x, q(1, 2))]);
        let d = &v - &w;
        assert_eq!(d.coeff(&x), q(0, 1));
        assert_eq!(d.coeff(&y), q(2, 3));
        assert_eq!(&d + &w, v);
        assert_eq!(v.denominator_lcm(), Int::from(6));
    }
}
