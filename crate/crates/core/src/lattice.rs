//! Finitely generated lattices of rational vectors and their canonical
//! Hermite bases.
//!
//! A `QLattice` is the integer span of finitely many rational vectors,
//! stored as `(1/scale) · Z-span(hnf rows)` after clearing denominators by
//! the common lcm. Because the integer part is in Hermite normal form and
//! the scale is the reduced common denominator, two lattices are equal iff
//! their stored forms are equal after rescaling to a common denominator.

use crate::matrix::hermite_normal_form;
use crate::symbol::BasisSymbol;
use crate::vector::RationalVector;
use crate::{Int, Rational};
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use num_integer::Integer as _;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QLattice {
    scale: Int,
    rows: Vec<Vec<Int>>,
    pivots: Vec<usize>,
    ncols: usize,
}

impl QLattice {
    /// Builds the lattice generated by the given dense rational rows.
    pub fn from_rational_rows(ncols: usize, rows: &[Vec<Rational>]) -> Self {
        let mut scale = Int::one();
        for r in rows {
            for c in r {
                scale = scale.lcm(c.denom());
            }
        }
        let int_rows: Vec<Vec<Int>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| {
                        let v = c * Rational::from(scale.clone());
                        debug_assert!(v.denom().is_one());
                        v.numer().clone()
                    })
                    .collect()
            })
            .collect();
        let (h, pivots) = hermite_normal_form(int_rows);
        QLattice {
            scale,
            rows: h,
            pivots,
            ncols,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Canonical rational rows `hnf / scale`.
    pub fn rational_rows(&self) -> Vec<Vec<Rational>> {
        let s = Rational::from(self.scale.clone());
        self.rows
            .iter()
            .map(|r| r.iter().map(|v| Rational::from(v.clone()) / &s).collect())
            .collect()
    }

    /// Unique coordinates of `v` with respect to the Hermite rows, or None
    /// when `v` lies outside the rational row span.
    pub fn coordinates(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        debug_assert_eq!(v.len(), self.ncols);
        let s = Rational::from(self.scale.clone());
        let mut w: Vec<Rational> = v.iter().map(|c| c * &s).collect();
        let mut coords = Vec::with_capacity(self.rows.len());
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = &w[p] / Rational::from(row[p].clone());
            if !c.is_zero() {
                for (wi, ri) in w.iter_mut().zip(row.iter()) {
                    *wi -= &c * &Rational::from(ri.clone());
                }
            }
            coords.push(c);
        }
        w.iter().all(Zero::is_zero).then_some(coords)
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.coordinates(v)
            .is_some_and(|cs| cs.iter().all(|c| c.denom().is_one()))
    }

    /// The least positive integer `b` with `b·v` in the lattice, or None
    /// when `v` is outside the rational span.
    pub fn denominator_of(&self, v: &[Rational]) -> Option<Int> {
        let coords = self.coordinates(v)?;
        let mut l = Int::one();
        for c in coords {
            l = l.lcm(c.denom());
        }
        Some(l)
    }

    /// Equality as subgroups of the ambient rational space.
    pub fn same_lattice(&self, other: &QLattice) -> bool {
        if self.ncols != other.ncols || self.rows.len() != other.rows.len() {
            return false;
        }
        // hnf(c·L) = c·hnf(L), so compare after cross-scaling.
        let l = self.scale.lcm(&other.scale);
        let (a, b) = (&l / &self.scale, &l / &other.scale);
        self.pivots == other.pivots
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(r, s)| r.iter().zip(s.iter()).all(|(x, y)| x * &a == y * &b))
    }

    /// Product of the Hermite pivot entries of the scale-cleared rows; the
    /// prime factors of this integer are exactly the primes at which the
    /// lattice differs from the saturated lattice of its span.
    pub fn pivot_product(&self) -> Int {
        let mut p = Int::one();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            p *= &row[c];
        }
        p
    }

    pub fn scale(&self) -> &Int {
        &self.scale
    }
}

/// Ordered union of the supports of the given vectors, the implied dense
/// coordinate order for symbol-level lattice computations.
pub fn support_basis(vectors: &[RationalVector]) -> Vec<BasisSymbol> {
    let set: BTreeSet<BasisSymbol> = vectors
        .iter()
        .flat_map(|v| v.support().copied())
        .collect();
    set.into_iter().collect()
}

/// Hermite-style canonical generating set of the integer span of the
/// inputs. Deterministic for a fixed basis order; the integer span of the
/// output equals the integer span of the input exactly.
pub fn hnf_basis(vectors: &[RationalVector]) -> Vec<RationalVector> {
    hnf_basis_over(&support_basis(vectors), vectors)
}

/// As [`hnf_basis`], with an explicit ambient basis order.
pub fn hnf_basis_over(basis: &[BasisSymbol], vectors: &[RationalVector]) -> Vec<RationalVector> {
    let dense: Vec<Vec<Rational>> = vectors
        .iter()
        .map(|v| v.to_dense(basis).expect("support inside the chosen basis"))
        .collect();
    let lat = QLattice::from_rational_rows(basis.len(), &dense);
    lat.rational_rows()
        .into_iter()
        .map(|row| RationalVector::from_dense(basis, &row))
        .collect()
}

/// Factors `n` into primes by trial division. Desk-scale lattice indices
/// factor over small primes; anything beyond the bound is reported so the
/// caller can fail loudly rather than silently skip a prime.
pub fn factor_small(mut n: Int) -> Result<BTreeSet<u64>, crate::Error> {
    let mut out = BTreeSet::new();
    n = n.abs();
    if n.is_zero() {
        return Ok(out);
    }
    let mut p: u64 = 2;
    while p <= 1_000_000 {
        let pi = Int::from(p);
        if (&n % &pi).is_zero() {
            out.insert(p);
            while (&n % &pi).is_zero() {
                n /= &pi;
            }
        }
        if n.is_one() {
            return Ok(out);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n.is_one() {
        Ok(out)
    } else {
        Err(crate::Error::UnfactoredIndex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(Int::from(n), Int::from(d))
    }
    fn vecq(cs: &[(BasisSymbol, (i64, i64))]) -> RationalVector {
        RationalVector::from_entries(cs.iter().map(|(s, (n, d))| (*s, q(*n, *d))))
    }

    const X0: BasisSymbol = BasisSymbol::X(0);
    const X1: BasisSymbol = BasisSymbol::X(1);

    #[test]
    fn hnf_basis_canonical_examples() {
        // {(2,0),(0,3)} is already canonical.
        let out = hnf_basis(&[vecq(&[(X0, (2, 1))]), vecq(&[(X1, (3, 1))])]);
        assert_eq!(out, alloc::vec![vecq(&[(X0, (2, 1))]), vecq(&[(X1, (3, 1))])]);

        // {(2,0),(3,0)} collapses to the gcd.
        let out = hnf_basis(&[vecq(&[(X0, (2, 1))]), vecq(&[(X0, (3, 1))])]);
        assert_eq!(out, alloc::vec![vecq(&[(X0, (1, 1))])]);

        // {(4,2),(2,4)} in the fixed row convention.
        let out = hnf_basis(&[
            vecq(&[(X0, (4, 1)), (X1, (2, 1))]),
            vecq(&[(X0, (2, 1)), (X1, (4, 1))]),
        ]);
        assert_eq!(
            out,
            alloc::vec![
                vecq(&[(X0, (2, 1)), (X1, (4, 1))]),
                vecq(&[(X1, (6, 1))]),
            ]
        );
    }

    #[test]
    fn empty_input_empty_output() {
        assert!(hnf_basis(&[]).is_empty());
    }

    #[test]
    fn rational_inputs_keep_the_span_recoverable() {
        // Z-span{x/2, x/3} = (1/6)Z·x.
        let out = hnf_basis(&[vecq(&[(X0, (1, 2))]), vecq(&[(X0, (1, 3))])]);
        assert_eq!(out, alloc::vec![vecq(&[(X0, (1, 6))])]);
    }

    #[test]
    fn lattice_membership_and_denominator() {
        let lat = QLattice::from_rational_rows(
            2,
            &[
                alloc::vec![q(1, 2), q(0, 1)],
                alloc::vec![q(0, 1), q(3, 1)],
            ],
        );
        assert!(lat.contains(&[q(1, 1), q(3, 1)]));
        assert!(!lat.contains(&[q(1, 4), q(0, 1)]));
        assert_eq!(lat.denominator_of(&[q(1, 4), q(1, 1)]), Some(Int::from(6)));
        assert_eq!(lat.denominator_of(&[q(1, 2), q(1, 1)]), Some(Int::from(3)));
    }

    #[test]
    fn lattice_equality_across_scales() {
        let a = QLattice::from_rational_rows(1, &[alloc::vec![q(1, 2)], alloc::vec![q(1, 3)]]);
        let b = QLattice::from_rational_rows(1, &[alloc::vec![q(1, 6)]]);
        let c = QLattice::from_rational_rows(1, &[alloc::vec![q(1, 5)]]);
        assert!(a.same_lattice(&b));
        assert!(!a.same_lattice(&c));
    }

    #[test]
    fn factor_small_squares() {
        let f = factor_small(Int::from(360)).unwrap();
        assert_eq!(f, BTreeSet::from([2, 3, 5]));
    }
}
