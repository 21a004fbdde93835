//! Presentations of torsion-free groups inside a rational vector space,
//! and the exact decision procedures over them.
//!
//! A presentation lists localized generators: each generator `g` with
//! inverted prime set `S` contributes every `g/s` for `s` a product of
//! primes of `S`, so the presented group is `M = Σ_j Z[S_j⁻¹]·g_j`. The
//! membership test decomposes prime-locally: `v ∈ M` iff `v` lies in the
//! rational span of the generators and, for every relevant prime `p`, in
//! `Q-span{g_j : p ∈ S_j} + Z_(p)-span{g_j : p ∉ S_j}`. The finite set of
//! relevant primes consists of the inverted primes, the primes of the
//! denominators in play, and the primes of the Hermite pivot product of
//! the denominator-cleared generator matrix; the local-global identity
//! this rests on is cross-checked against the truncation-lattice oracle
//! in the test suites.

use crate::construction::ConstructionMeta;
use crate::lattice::{factor_small, QLattice};
use crate::matrix::RowSpan;
use crate::symbol::BasisSymbol;
use crate::vector::RationalVector;
use crate::{Error, Int, Rational};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::vec::Vec;
use num_traits::{One, Zero};

/// A generator together with the primes inverted on it: contributes
/// `Z[S⁻¹]·vector` to the presented group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalizedGenerator {
    pub vector: RationalVector,
    pub inverted_primes: BTreeSet<u64>,
}

impl LocalizedGenerator {
    pub fn new<I: IntoIterator<Item = u64>>(vector: RationalVector, primes: I) -> Self {
        debug_assert!(!vector.is_zero(), "localized generator must be nonzero");
        LocalizedGenerator {
            vector,
            inverted_primes: primes.into_iter().collect(),
        }
    }

    /// The deepest truncated denominator at the given cap: the product of
    /// the inverted primes, each raised to the cap.
    pub fn max_denominator(&self, depth: u32) -> Int {
        let mut s = Int::one();
        for &p in &self.inverted_primes {
            s *= Int::from(p).pow(depth);
        }
        s
    }
}

/// A finitely presented subgroup of the rational space over `basis`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub basis: Vec<BasisSymbol>,
    pub generators: Vec<LocalizedGenerator>,
    /// Construction parameters when the presentation was built by the
    /// block construction; hand-built presentations carry None.
    pub meta: Option<ConstructionMeta>,
}

impl Presentation {
    pub fn new(basis: Vec<BasisSymbol>, generators: Vec<LocalizedGenerator>) -> Self {
        let set: BTreeSet<_> = basis.iter().copied().collect();
        debug_assert_eq!(set.len(), basis.len(), "repeated basis symbol");
        for g in &generators {
            debug_assert!(
                g.vector.support().all(|s| set.contains(s)),
                "generator support escapes the basis"
            );
        }
        Presentation {
            basis,
            generators,
            meta: None,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dense(&self, v: &RationalVector) -> Result<Vec<Rational>, Error> {
        v.to_dense(&self.basis)
            .map_err(|s| Error::ForeignSymbol(s.to_string()))
    }

    /// All primes inverted somewhere in the presentation.
    pub fn inverted_primes(&self) -> BTreeSet<u64> {
        self.generators
            .iter()
            .flat_map(|g| g.inverted_primes.iter().copied())
            .collect()
    }

    /// The depth-capped truncation lattice `L_D`: the integer span of
    /// `g_j/s` over all `S_j`-smooth `s` with exponents at most `depth`.
    /// A single corner vector per generator spans the same lattice.
    pub fn truncation_lattice(&self, depth: u32) -> QLattice {
        let rows: Vec<Vec<Rational>> = self
            .generators
            .iter()
            .map(|g| {
                let s = Rational::from(g.max_denominator(depth));
                g.vector
                    .to_dense(&self.basis)
                    .expect("validated support")
                    .into_iter()
                    .map(|c| c / &s)
                    .collect()
            })
            .collect();
        QLattice::from_rational_rows(self.basis.len(), &rows)
    }
}

/// Per-prime cached data for the local membership test.
struct LocalData {
    /// Rational span of the generators with this prime inverted.
    inverted_span: RowSpan,
    /// Integer lattice of the remaining generators after reduction modulo
    /// the inverted span and per-vector unit normalization at the prime.
    residual_lattice: QLattice,
}

/// Decision procedures over one presentation, with the prime-local data
/// computed once and shared. All methods are pure; the analyzer can be
/// shared freely across threads.
pub struct Analyzer<'a> {
    pres: &'a Presentation,
    /// Rational span of all generators.
    span: RowSpan,
    /// Base relevant primes (independent of the queried vector).
    base_primes: BTreeSet<u64>,
    locals: BTreeMap<u64, LocalData>,
}

impl<'a> Analyzer<'a> {
    pub fn new(pres: &'a Presentation) -> Result<Self, Error> {
        let n = pres.basis.len();
        let dense: Vec<Vec<Rational>> = pres
            .generators
            .iter()
            .map(|g| pres.dense(&g.vector))
            .collect::<Result<_, _>>()?;
        let span = RowSpan::from_rows(n, dense.iter().cloned());

        let mut base_primes = pres.inverted_primes();
        let full = QLattice::from_rational_rows(n, &dense);
        base_primes.extend(factor_small(full.pivot_product())?);
        base_primes.extend(factor_small(full.scale().clone())?);

        let mut locals = BTreeMap::new();
        for &p in &base_primes {
            locals.insert(p, Self::local_data(pres, &dense, p));
        }
        Ok(Analyzer {
            pres,
            span,
            base_primes,
            locals,
        })
    }

    fn local_data(pres: &Presentation, dense: &[Vec<Rational>], p: u64) -> LocalData {
        let n = pres.basis.len();
        let mut inverted_span = RowSpan::new(n);
        for (g, row) in pres.generators.iter().zip(dense) {
            if g.inverted_primes.contains(&p) {
                inverted_span.insert(row.clone());
            }
        }
        let pi = Int::from(p);
        let mut residual_rows = Vec::new();
        for (g, row) in pres.generators.iter().zip(dense) {
            if g.inverted_primes.contains(&p) {
                continue;
            }
            let mut u = inverted_span.reduce(row.clone());
            if u.iter().all(Zero::is_zero) {
                continue;
            }
            // Scaling by a p-unit preserves the Z_(p)-span: clear the
            // non-p part of the denominators so only p-powers remain.
            let mut l = Int::one();
            for c in &u {
                l = num_integer::lcm(l, c.denom().clone());
            }
            while (&l % &pi).is_zero() {
                l /= &pi;
            }
            let unit = Rational::from(l);
            for c in u.iter_mut() {
                *c *= &unit;
            }
            residual_rows.push(u);
        }
        let residual_lattice = QLattice::from_rational_rows(n, &residual_rows);
        LocalData {
            inverted_span,
            residual_lattice,
        }
    }

    pub fn presentation(&self) -> &Presentation {
        self.pres
    }

    pub fn base_primes(&self) -> &BTreeSet<u64> {
        &self.base_primes
    }

    /// Rational span membership (membership in the divisible hull of the
    /// presented group).
    pub fn in_span(&self, v: &RationalVector) -> Result<bool, Error> {
        Ok(self.span.contains(&self.pres.dense(v)?))
    }

    fn local_member_dense(&self, dense: &[Rational], p: u64) -> bool {
        let data;
        let local = match self.locals.get(&p) {
            Some(l) => l,
            None => {
                let rows: Vec<Vec<Rational>> = self
                    .pres
                    .generators
                    .iter()
                    .map(|g| self.pres.dense(&g.vector).expect("validated support"))
                    .collect();
                data = Self::local_data(self.pres, &rows, p);
                &data
            }
        };
        let w = local.inverted_span.reduce(dense.to_vec());
        if w.iter().all(Zero::is_zero) {
            return true;
        }
        match local.residual_lattice.denominator_of(&w) {
            None => false,
            Some(b) => !(b % Int::from(p)).is_zero(),
        }
    }

    /// The finite set of primes whose local conditions decide membership
    /// of `v`: the presentation's base primes plus the primes of `v`'s
    /// denominators.
    pub fn relevant_primes(&self, v: &RationalVector) -> Result<BTreeSet<u64>, Error> {
        let mut primes = self.base_primes.clone();
        primes.extend(factor_small(v.denominator_lcm())?);
        Ok(primes)
    }

    /// Exact membership in the presented group.
    pub fn member(&self, v: &RationalVector) -> Result<bool, Error> {
        let dense = self.pres.dense(v)?;
        if v.is_zero() {
            return Ok(true);
        }
        if !self.span.contains(&dense) {
            return Ok(false);
        }
        for p in self.relevant_primes(v)? {
            if !self.local_member_dense(&dense, p) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Membership in the pure closure of `A` inside the presented group:
    /// in torsion-free groups the pure closure of `A` is the rational span
    /// of `A` intersected with the group.
    pub fn pc_member(&self, v: &RationalVector, a: &[RationalVector]) -> Result<bool, Error> {
        let n = self.pres.basis.len();
        let mut span_a = RowSpan::new(n);
        for u in a {
            span_a.insert(self.pres.dense(u)?);
        }
        Ok(span_a.contains(&self.pres.dense(v)?) && self.member(v)?)
    }

    /// Whether `xs` is a basis in the pure-closure sense: nonzero, with no
    /// rational dependence, and with every generator inside the pure
    /// closure of their span.
    pub fn is_basis(&self, xs: &[RationalVector]) -> Result<bool, Error> {
        if xs.is_empty() {
            return Ok(false);
        }
        let n = self.pres.basis.len();
        let mut span = RowSpan::new(n);
        for x in xs {
            if x.is_zero() || !span.insert(self.pres.dense(x)?) {
                return Ok(false);
            }
        }
        for g in &self.pres.generators {
            if !self.pc_member(&g.vector, xs)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The least positive integer `b` with `b·v` in the group. Exists iff
    /// `v` lies in the rational span of the generators.
    pub fn group_denominator(&self, v: &RationalVector) -> Result<Int, Error> {
        if v.is_zero() {
            return Ok(Int::one());
        }
        let dense = self.pres.dense(v)?;
        if !self.span.contains(&dense) {
            return Err(Error::OutsideSpan("generator"));
        }
        let mut b = Int::one();
        for p in self.relevant_primes(v)? {
            let pi = Rational::from(Int::from(p));
            let mut scaled = dense.clone();
            let mut e = 0u32;
            while !self.local_member_dense(&scaled, p) {
                for c in scaled.iter_mut() {
                    *c *= &pi;
                }
                e += 1;
                assert!(e <= 256, "denominator exponent runaway at prime {p}");
            }
            b *= Int::from(p).pow(e);
        }
        Ok(b)
    }

    /// Rational span of the generators that invert `p` — the span of the
    /// `p`-divisible part.
    pub fn divisible_span(&self, p: u64) -> RowSpan {
        let n = self.pres.basis.len();
        let mut span = RowSpan::new(n);
        for g in &self.pres.generators {
            if g.inverted_primes.contains(&p) {
                span.insert(self.pres.dense(&g.vector).expect("validated support"));
            }
        }
        span
    }

    /// Membership in the `p`-divisible part of the group, the stabilized
    /// intersection of the chain `p^n·M`. The exact criterion is lying in
    /// the group and in the rational span of the `p`-localized generators;
    /// the chain `v/p^n ∈ M` for `n ≤ depth` guards it, and a vector that
    /// survives the whole guarded chain while failing the exact criterion
    /// is reported as a stabilization failure rather than decided.
    pub fn divisible_member(&self, v: &RationalVector, p: u64, depth: u32) -> Result<bool, Error> {
        if !self.member(v)? {
            return Err(Error::NotAMember);
        }
        if v.is_zero() {
            return Ok(true);
        }
        let exact = self.divisible_span(p).contains(&self.pres.dense(v)?);
        if exact {
            return Ok(true);
        }
        let inv_p = Rational::new(Int::one(), Int::from(p));
        let mut scaled = v.clone();
        for _ in 1..=depth {
            scaled = scaled.scaled(&inv_p);
            if !self.member(&scaled)? {
                return Ok(false);
            }
        }
        Err(Error::DivisibleChainUnstable { prime: p, depth })
    }
}

/// `v/c` for a nonzero integer `c`.
pub fn divided(v: &RationalVector, c: &Int) -> RationalVector {
    debug_assert!(!c.is_zero());
    v.scaled(&Rational::new(Int::one(), c.clone()))
}
