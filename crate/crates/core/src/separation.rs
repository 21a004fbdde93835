//! Separation families realized as branches of the binary tree.
//!
//! Each eventually periodic branch `b` induces a strictly increasing map
//! `g_b(i) = prefix_code(first i+1 bits of b)` into the length-then-lex
//! enumeration of finite bit strings. Distinct branches share exactly the
//! codes of their common prefix, so the ranges form an almost-disjoint
//! family and every member of a finite family owns range values missed by
//! all the others — the separation property the rigidity arguments feed
//! on. The realization is canonical and choice-free, and eventually
//! periodic branches keep every family finitely serializable.

use crate::Error;
use alloc::vec::Vec;
use core::fmt;

/// An eventually periodic infinite bit sequence: `head` followed by
/// `period` repeated forever.
///
/// Stored in canonical form — the period is primitive (not a power of a
/// shorter word) and the head does not end with a full copy of the
/// period — so equality of values is equality of branches.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branch {
    head: Vec<bool>,
    period: Vec<bool>,
}

impl Branch {
    pub fn new<H, P>(head: H, period: P) -> Result<Self, Error>
    where
        H: IntoIterator<Item = bool>,
        P: IntoIterator<Item = bool>,
    {
        let mut head: Vec<bool> = head.into_iter().collect();
        let mut period: Vec<bool> = period.into_iter().collect();
        if period.is_empty() {
            return Err(Error::InvariantViolation(
                "branch period must be nonempty".into(),
            ));
        }
        // Primitive period: shrink to the shortest repeating word.
        'outer: for len in 1..period.len() {
            if !period.len().is_multiple_of(len) {
                continue;
            }
            for i in len..period.len() {
                if period[i] != period[i % len] {
                    continue 'outer;
                }
            }
            period.truncate(len);
            break;
        }
        // Absorb trailing period copies from the head by rotating the phase.
        while !head.is_empty() && head[head.len() - 1] == period[period.len() - 1] {
            head.pop();
            period.rotate_right(1);
        }
        Ok(Branch { head, period })
    }

    /// Parses the serialized form `head|period` over the alphabet {0,1}.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvariantViolation(alloc::format!("malformed branch string: {s}"));
        let (h, p) = s.split_once('|').ok_or_else(bad)?;
        let bits = |t: &str| -> Result<Vec<bool>, Error> {
            t.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(bad()),
                })
                .collect()
        };
        Branch::new(bits(h)?, bits(p)?)
    }

    /// The all-`bit` branch.
    pub fn constant(bit: bool) -> Self {
        Branch::new([], [bit]).expect("nonempty period")
    }

    pub fn bit(&self, n: usize) -> bool {
        if n < self.head.len() {
            self.head[n]
        } else {
            self.period[(n - self.head.len()) % self.period.len()]
        }
    }

    pub fn prefix(&self, len: usize) -> Vec<bool> {
        (0..len).map(|n| self.bit(n)).collect()
    }

    /// First position where the two branches differ; None means equal.
    pub fn first_difference(&self, other: &Branch) -> Option<usize> {
        if self == other {
            return None;
        }
        let bound = self.head.len().max(other.head.len())
            + lcm_usize(self.period.len(), other.period.len());
        (0..bound).find(|&n| self.bit(n) != other.bit(n))
    }
}

fn lcm_usize(a: usize, b: usize) -> usize {
    a / gcd_usize(a, b) * b
}

fn gcd_usize(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let render = |bits: &[bool], f: &mut fmt::Formatter<'_>| -> fmt::Result {
            for &b in bits {
                write!(f, "{}", u8::from(b))?;
            }
            Ok(())
        };
        render(&self.head, f)?;
        write!(f, "|")?;
        render(&self.period, f)
    }
}

/// Index of a finite bit string in the length-then-lexicographic
/// enumeration: "" → 0, "0" → 1, "1" → 2, "00" → 3, "01" → 4, …
///
/// For a string of length `n` with binary value `v` (most significant bit
/// first) the index is `2^n − 1 + v`; the map is injective.
pub fn prefix_code(bits: &[bool]) -> u128 {
    assert!(bits.len() < 120, "prefix too long for exact codes");
    let mut v: u128 = 0;
    for &b in bits {
        v = (v << 1) | u128::from(b);
    }
    (1u128 << bits.len()) - 1 + v
}

/// `g_b(i)`: the prefix code of the first `i+1` bits of the branch.
/// Strictly increasing in `i`, so every range is infinite and unbounded.
pub fn g_value(b: &Branch, i: u32) -> u128 {
    prefix_code(&b.prefix(i as usize + 1))
}

/// Whether `value` occurs in `Rang(g_b)`; decidable because `g_b` is
/// strictly increasing.
pub fn in_range(b: &Branch, value: u128) -> bool {
    let mut i = 0u32;
    loop {
        let g = g_value(b, i);
        if g == value {
            return true;
        }
        if g > value {
            return false;
        }
        i += 1;
    }
}

/// Least `i` with `g_b(i) ≥ bound`; exists by strict monotonicity.
pub fn unbounded_witness(b: &Branch, bound: u128) -> u32 {
    let mut i = 0u32;
    while g_value(b, i) < bound {
        i += 1;
    }
    i
}

/// An ordered family of pairwise distinct branches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchFamily {
    members: Vec<Branch>,
}

impl BranchFamily {
    pub fn new(members: Vec<Branch>) -> Result<Self, Error> {
        for (i, b) in members.iter().enumerate() {
            if members[..i].contains(b) {
                return Err(Error::FamilyNotDistinct);
            }
        }
        Ok(BranchFamily { members })
    }

    pub fn members(&self) -> &[Branch] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, k: usize) -> &Branch {
        &self.members[k]
    }
}

/// A separating value for member `k` of the family: an element of
/// `Rang(g_{F[k]})` missed by every other member's range.
///
/// Concretely `g_{F[k]}(i)` where the prefix of length `i+1` covers the
/// first position at which `F[k]` differs from each other member.
pub fn separating_epsilon(family: &BranchFamily, k: usize) -> Result<u128, Error> {
    let target = family.get(k);
    let mut i = 0usize;
    for (l, other) in family.members().iter().enumerate() {
        if l == k {
            continue;
        }
        let d = target
            .first_difference(other)
            .ok_or(Error::FamilyNotDistinct)?;
        i = i.max(d);
    }
    Ok(g_value(target, i as u32))
}

/// One verified separation witness inside [`FamilyReport`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationWitness {
    /// Indices (into the checked family) of the subfamily.
    pub subset: Vec<usize>,
    /// Position within the subfamily owning the separating value.
    pub k: usize,
    pub epsilon: u128,
}

/// Outcome of [`check_family`]: every witness listed has been verified by
/// direct range enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyReport {
    pub subset_size: usize,
    pub witnesses: Vec<SeparationWitness>,
}

/// Verifies the separation property on every `(n+1)`-element subfamily:
/// for each position `k` the separating value lands in the range of the
/// `k`-th member and in no other, checked by enumerating the ranges.
pub fn check_family(family: &BranchFamily, n: usize) -> Result<FamilyReport, Error> {
    if family.len() < n + 1 {
        return Err(Error::InvariantViolation(alloc::format!(
            "family of size {} cannot cover subfamilies of size {}",
            family.len(),
            n + 1
        )));
    }
    let mut witnesses = Vec::new();
    for subset in subsets(family.len(), n + 1) {
        let sub = BranchFamily::new(subset.iter().map(|&i| family.get(i).clone()).collect())?;
        for k in 0..=n {
            let eps = separating_epsilon(&sub, k)?;
            for (l, b) in sub.members().iter().enumerate() {
                let hit = in_range(b, eps);
                if l == k && !hit {
                    return Err(Error::InvariantViolation(alloc::format!(
                        "separating value {eps} missing from its own range (subset {subset:?}, k={k})"
                    )));
                }
                if l != k && hit {
                    return Err(Error::InvariantViolation(alloc::format!(
                        "separating value {eps} not separating (subset {subset:?}, k={k}, hit by {l})"
                    )));
                }
            }
            witnesses.push(SeparationWitness {
                subset: subset.clone(),
                k,
                epsilon: eps,
            });
        }
    }
    Ok(FamilyReport {
        subset_size: n + 1,
        witnesses,
    })
}

/// All size-`k` subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Parses a comma-separated branch list.
pub fn parse_family(s: &str) -> Result<BranchFamily, Error> {
    let members = s
        .split(',')
        .map(|t| Branch::parse(t.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    BranchFamily::new(members)
}

/// Canonical sample branches used by tests and default builds.
pub fn standard_branches() -> [Branch; 4] {
    [
        Branch::constant(false),
        Branch::constant(true),
        Branch::parse("|01").expect("valid"),
        Branch::parse("|10").expect("valid"),
    ]
}
