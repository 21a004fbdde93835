//! The block construction: presentations whose divisibility structure
//! encodes a separation family, assembled into multi-block instances, and
//! the evaluators for the definable submodules the structure induces.
//!
//! Each block carries two designated parts: the `x` directions, divisible
//! by one block prime, and the `y`/rung directions, divisible by the
//! other. Every pair `(α,i)` is mixed by the first ladder prime, and a
//! ladder of fresh rungs of length `g_α(i)` hangs off it so that the
//! definable ladder depth of `x_α + y_{α,i}` equals the separation value.
//! A dedicated mixing prime ties every `x_α` to the shared `y_star`
//! direction (a ladder of unbounded depth, definably above every level),
//! and a cross prime chains consecutive blocks through their first basis
//! directions.
//!
//! Ladder lengths use the raw separation values; the levels realized at a
//! finite truncation must stay asymmetric between rows, which a cap at
//! the truncation parameter would destroy.

use crate::formula::{Formula, LinearForm, Var};
use crate::presentation::{Analyzer, LocalizedGenerator, Presentation};
use crate::separation::{g_value, BranchFamily};
use crate::symbol::BasisSymbol;
use crate::vector::RationalVector;
use crate::{Error, Int, Rational};
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use num_integer::Integer as _;
use num_traits::{One, Zero};

/// The primes driving one construction: two block primes per block, a
/// ladder prime per rung depth per block, one `y_star` mixing prime per
/// block, and a single cross prime. All pairwise distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeScheme {
    /// Flat list, two per block: `p[2ℓ]` for the x part, `p[2ℓ+1]` for y.
    pub p: Vec<u64>,
    /// Ladder primes per block, indexed by rung depth.
    pub q: Vec<Vec<u64>>,
    /// The `y_star` mixing prime per block.
    pub q_star: Vec<u64>,
    /// The inter-block mixing prime.
    pub cross: u64,
}

impl PrimeScheme {
    pub fn validate(&self) -> Result<(), Error> {
        let mut seen = BTreeSet::new();
        for p in self.all_primes() {
            if !seen.insert(p) {
                return Err(Error::InvariantViolation(alloc::format!(
                    "prime {p} repeated in scheme"
                )));
            }
        }
        Ok(())
    }

    pub fn all_primes(&self) -> Vec<u64> {
        let mut out = self.p.clone();
        for qs in &self.q {
            out.extend(qs.iter().copied());
        }
        out.extend(self.q_star.iter().copied());
        out.push(self.cross);
        out
    }

    pub fn blocks(&self) -> usize {
        self.p.len() / 2
    }

    pub fn p_x(&self, block: u32) -> Result<u64, Error> {
        self.p
            .get(2 * block as usize)
            .copied()
            .ok_or(Error::NoSuchBlock(block))
    }

    pub fn p_y(&self, block: u32) -> Result<u64, Error> {
        self.p
            .get(2 * block as usize + 1)
            .copied()
            .ok_or(Error::NoSuchBlock(block))
    }

    fn q_at(&self, block: u32, idx: usize, what: &str) -> Result<u64, Error> {
        self.q
            .get(block as usize)
            .and_then(|qs| qs.get(idx))
            .copied()
            .ok_or_else(|| {
                Error::InsufficientPrimes(alloc::format!(
                    "block {block} has no ladder prime for {what}"
                ))
            })
    }

    /// The prime of the depth-`m` ladder link (`m = 0` mixes the pair).
    /// Ladder primes interleave along the climb: link 0, rung 1, link 1,
    /// rung 2, link 2, …
    pub fn ladder_link(&self, block: u32, depth: u32) -> Result<u64, Error> {
        self.q_at(block, 2 * depth as usize, "link")
    }

    /// The prime owning the depth-`m` rung direction itself (`m ≥ 1`).
    /// Every chain stage gets its own designated divisible part this way.
    pub fn ladder_rung(&self, block: u32, depth: u32) -> Result<u64, Error> {
        debug_assert!(depth >= 1);
        self.q_at(block, 2 * depth as usize - 1, "rung")
    }

    pub fn star(&self, block: u32) -> Result<u64, Error> {
        self.q_star
            .get(block as usize)
            .copied()
            .ok_or(Error::NoSuchBlock(block))
    }

    /// The multiplier height bound used by the bounded disjunctions: the
    /// product of every scheme prime raised to the depth cap.
    pub fn height_bound(&self, depth: u32) -> Int {
        let mut h = Int::one();
        for p in self.all_primes() {
            h *= Int::from(p).pow(depth);
        }
        h
    }
}

const SCHEME_P: [u64; 4] = [2, 3, 29, 31];
const SCHEME_Q0: [u64; 4] = [5, 7, 11, 13];
const SCHEME_Q1: [u64; 4] = [37, 41, 43, 47];
const SCHEME_QSTAR: [u64; 2] = [17, 53];
const SCHEME_CROSS: u64 = 23;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Extends `used` with the next primes not yet present, in order.
fn fresh_primes(used: &BTreeSet<u64>, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 2u64;
    while out.len() < count {
        if is_prime(c) && !used.contains(&c) && !out.contains(&c) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// The default concrete scheme, extended deterministically with further
/// primes until every block owns `ladder_len` ladder primes.
pub fn default_scheme(blocks: u32, ladder_len: u32) -> PrimeScheme {
    let mut used: BTreeSet<u64> = SCHEME_P.into_iter().collect();
    used.extend(SCHEME_Q0);
    used.extend(SCHEME_Q1);
    used.extend(SCHEME_QSTAR);
    used.insert(SCHEME_CROSS);

    let mut p: Vec<u64> = SCHEME_P.into();
    while p.len() < 2 * blocks as usize {
        let np = fresh_primes(&used, 1)[0];
        used.insert(np);
        p.push(np);
    }
    p.truncate(2 * blocks as usize);

    let mut q: Vec<Vec<u64>> = alloc::vec![SCHEME_Q0.into(), SCHEME_Q1.into()];
    q.truncate(blocks as usize);
    while q.len() < blocks as usize {
        q.push(Vec::new());
    }
    for qs in q.iter_mut() {
        while qs.len() < ladder_len as usize {
            let np = fresh_primes(&used, 1)[0];
            used.insert(np);
            qs.push(np);
        }
    }

    let mut q_star: Vec<u64> = SCHEME_QSTAR.into();
    q_star.truncate(blocks as usize);
    while q_star.len() < blocks as usize {
        let np = fresh_primes(&used, 1)[0];
        used.insert(np);
        q_star.push(np);
    }

    let scheme = PrimeScheme {
        p,
        q,
        q_star,
        cross: SCHEME_CROSS,
    };
    scheme.validate().expect("default scheme is collision-free");
    scheme
}

/// Truncation parameters of one construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionParams {
    /// Indices α, i, ε range over `0..lambda`.
    pub lambda: u32,
    pub blocks: u32,
    /// Depth cap used by oracles and solvers.
    pub depth_cap: u32,
    /// Branch family; every block reads its rows from this family.
    pub family: BranchFamily,
}

impl ConstructionParams {
    pub fn new(
        lambda: u32,
        blocks: u32,
        depth_cap: u32,
        family: BranchFamily,
    ) -> Result<Self, Error> {
        if lambda < 2 || blocks < 1 || depth_cap < 3 {
            return Err(Error::InvariantViolation(alloc::format!(
                "parameters out of range: lambda={lambda}, blocks={blocks}, depth={depth_cap}"
            )));
        }
        if family.len() < lambda as usize {
            return Err(Error::InvariantViolation(alloc::format!(
                "family of {} branches cannot index {} rows",
                family.len(),
                lambda
            )));
        }
        Ok(ConstructionParams {
            lambda,
            blocks,
            depth_cap,
            family,
        })
    }

    /// Ladder length of the pair `(α, i)`: the raw separation value.
    pub fn level(&self, alpha: u32, i: u32) -> Result<u32, Error> {
        let g = g_value(self.family.get(alpha as usize), i);
        u32::try_from(g).map_err(|_| {
            Error::InvariantViolation(alloc::format!("level g_{alpha}({i}) = {g} too deep"))
        })
    }

    /// Largest ladder length any pair of a block realizes.
    pub fn max_level(&self) -> Result<u32, Error> {
        let mut m = 0;
        for alpha in 0..self.lambda {
            for i in 0..self.lambda {
                m = m.max(self.level(alpha, i)?);
            }
        }
        Ok(m)
    }

    /// Number of ladder primes each block needs: interleaved links and
    /// rungs up to the deepest realized level.
    pub fn ladder_primes_needed(&self) -> Result<u32, Error> {
        Ok(2 * self.max_level()? + 1)
    }
}

/// Metadata a built presentation carries: everything needed to interpret
/// its symbols and to evaluate the definable submodules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionMeta {
    pub lambda: u32,
    pub blocks: u32,
    pub depth_cap: u32,
    pub family: BranchFamily,
    pub scheme: PrimeScheme,
    /// Ladder length per block and local pair `(α, i)`.
    pub levels: Vec<BTreeMap<(u32, u32), u32>>,
}

impl ConstructionMeta {
    pub fn level(&self, block: u32, alpha: u32, i: u32) -> Option<u32> {
        self.levels
            .get(block as usize)
            .and_then(|m| m.get(&(alpha, i)))
            .copied()
    }

    /// Global row index of the local row `α` of a block.
    pub fn global_row(&self, block: u32, alpha: u32) -> u32 {
        block * self.lambda + alpha
    }

    pub fn block_of_row(&self, row: u32) -> u32 {
        row / self.lambda
    }

    pub fn x_symbols(&self, block: u32) -> Vec<BasisSymbol> {
        (0..self.lambda)
            .map(|a| BasisSymbol::X(self.global_row(block, a)))
            .collect()
    }

    /// All second-part symbols of a block: the `y`s, `y_star`, and rungs.
    pub fn m2_symbols(&self, block: u32) -> Vec<BasisSymbol> {
        let mut out = Vec::new();
        for a in 0..self.lambda {
            let row = self.global_row(block, a);
            for i in 0..self.lambda {
                out.push(BasisSymbol::Y(row, i));
            }
        }
        out.push(BasisSymbol::YStar(block));
        for (&(a, i), &lvl) in &self.levels[block as usize] {
            let row = self.global_row(block, a);
            for m in 1..=lvl {
                out.push(BasisSymbol::Ladder(row, i, m));
            }
        }
        out
    }

    /// The semantic generating set of `N_ε` for a block: the mixed pairs
    /// of level at least `ε` together with every `x + y_star` mix.
    pub fn n_epsilon_gens(&self, block: u32, epsilon: u64) -> Vec<RationalVector> {
        let mut gens = Vec::new();
        for (&(a, i), &lvl) in &self.levels[block as usize] {
            if u64::from(lvl) >= epsilon {
                let row = self.global_row(block, a);
                gens.push(
                    &RationalVector::unit(BasisSymbol::X(row))
                        + &RationalVector::unit(BasisSymbol::Y(row, i)),
                );
            }
        }
        for a in 0..self.lambda {
            let row = self.global_row(block, a);
            gens.push(
                &RationalVector::unit(BasisSymbol::X(row))
                    + &RationalVector::unit(BasisSymbol::YStar(block)),
            );
        }
        gens
    }
}

/// Rung symbol at depth `m` over a pair, with depth 0 meaning the `y`
/// direction itself.
fn rung_symbol(row: u32, i: u32, m: u32) -> BasisSymbol {
    if m == 0 {
        BasisSymbol::Y(row, i)
    } else {
        BasisSymbol::Ladder(row, i, m)
    }
}

/// Emits one block's basis symbols and generators at the given global row
/// offset, with explicitly supplied ladder lengths.
fn block_parts(
    block: u32,
    lambda: u32,
    row_offset: u32,
    levels: &BTreeMap<(u32, u32), u32>,
    scheme: &PrimeScheme,
) -> Result<(Vec<BasisSymbol>, Vec<LocalizedGenerator>), Error> {
    let p_x = scheme.p_x(block)?;
    let p_y = scheme.p_y(block)?;
    let q_star = scheme.star(block)?;
    let max_level = levels.values().copied().max().unwrap_or(0);
    if max_level > 0 {
        scheme.ladder_link(block, max_level)?;
    }

    let mut basis = Vec::new();
    let mut gens = Vec::new();
    let row = |a: u32| row_offset + a;

    // Basis directions of the first part, each divisible by p_x.
    for a in 0..lambda {
        let x = BasisSymbol::X(row(a));
        basis.push(x);
        gens.push(LocalizedGenerator::new(RationalVector::unit(x), [p_x]));
    }
    // Second part: y directions and the shared y_star, divisible by p_y;
    // each ladder rung is divisible by the ladder prime of its own depth,
    // giving every chain stage its own designated divisible part and
    // pinning chain witnesses to depth-homogeneous spans. (A uniform
    // second-part prime on the rungs would let a foreign top rung ride
    // through consecutive links as a self-canceling oscillation, which is
    // a genuine non-scalar endomorphism of the truncated group.)
    for a in 0..lambda {
        for i in 0..lambda {
            let y = BasisSymbol::Y(row(a), i);
            basis.push(y);
            gens.push(LocalizedGenerator::new(RationalVector::unit(y), [p_y]));
        }
    }
    let y_star = BasisSymbol::YStar(block);
    basis.push(y_star);
    gens.push(LocalizedGenerator::new(RationalVector::unit(y_star), [p_y]));
    for (&(a, i), &lvl) in levels {
        for m in 1..=lvl {
            let w = BasisSymbol::Ladder(row(a), i, m);
            basis.push(w);
            gens.push(LocalizedGenerator::new(
                RationalVector::unit(w),
                [scheme.ladder_rung(block, m)?],
            ));
        }
    }
    // Ladders: the pair mixing at depth 0, then one rung link per depth.
    for &(a, i) in levels.keys() {
        let pair = &RationalVector::unit(BasisSymbol::X(row(a)))
            + &RationalVector::unit(BasisSymbol::Y(row(a), i));
        gens.push(LocalizedGenerator::new(pair, [scheme.ladder_link(block, 0)?]));
    }
    for (&(a, i), &lvl) in levels {
        for m in 1..=lvl {
            let link = &RationalVector::unit(rung_symbol(row(a), i, m - 1))
                + &RationalVector::unit(rung_symbol(row(a), i, m));
            gens.push(LocalizedGenerator::new(link, [scheme.ladder_link(block, m)?]));
        }
    }
    // y_star mixing: every x tied to the shared direction.
    for a in 0..lambda {
        let mix = &RationalVector::unit(BasisSymbol::X(row(a))) + &RationalVector::unit(y_star);
        gens.push(LocalizedGenerator::new(mix, [q_star]));
    }
    Ok((basis, gens))
}

/// Builds the full presentation: every block at its row offset, cross
/// generators chaining consecutive blocks, and the metadata to interpret
/// it. Levels are the family's raw separation values.
pub fn build(params: &ConstructionParams, scheme: &PrimeScheme) -> Result<Presentation, Error> {
    scheme.validate()?;
    if scheme.blocks() < params.blocks as usize {
        return Err(Error::InsufficientPrimes(alloc::format!(
            "scheme covers {} blocks, build needs {}",
            scheme.blocks(),
            params.blocks
        )));
    }
    let mut levels = Vec::new();
    for _block in 0..params.blocks {
        let mut map = BTreeMap::new();
        for a in 0..params.lambda {
            for i in 0..params.lambda {
                map.insert((a, i), params.level(a, i)?);
            }
        }
        levels.push(map);
    }
    build_with_levels(params, scheme, levels)
}

/// As [`build`], with explicit ladder lengths per block (used by tests and
/// degenerate instances).
pub fn build_with_levels(
    params: &ConstructionParams,
    scheme: &PrimeScheme,
    levels: Vec<BTreeMap<(u32, u32), u32>>,
) -> Result<Presentation, Error> {
    let mut basis = Vec::new();
    let mut gens = Vec::new();
    for block in 0..params.blocks {
        let (b, g) = block_parts(
            block,
            params.lambda,
            block * params.lambda,
            &levels[block as usize],
            scheme,
        )?;
        basis.extend(b);
        gens.extend(g);
    }
    // Cross mixing between consecutive blocks through their first x.
    for block in 1..params.blocks {
        let prev = BasisSymbol::X((block - 1) * params.lambda);
        let here = BasisSymbol::X(block * params.lambda);
        let mix = &RationalVector::unit(prev) + &RationalVector::unit(here);
        gens.push(LocalizedGenerator::new(mix, [scheme.cross]));
    }
    basis.sort();
    let mut pres = Presentation::new(basis, gens);
    pres.meta = Some(ConstructionMeta {
        lambda: params.lambda,
        blocks: params.blocks,
        depth_cap: params.depth_cap,
        family: params.family.clone(),
        scheme: scheme.clone(),
        levels,
    });
    Ok(pres)
}

/// Combines separately built single-block presentations into one, adding
/// the cross generators. Blocks must not share primes other than through
/// the scheme's cross prime.
pub fn assemble(blocks: &[Presentation], scheme: &PrimeScheme) -> Result<Presentation, Error> {
    if blocks.is_empty() {
        return Err(Error::InvariantViolation("no blocks to assemble".into()));
    }
    let mut seen: BTreeSet<u64> = BTreeSet::new();
    for b in blocks {
        for p in b.inverted_primes() {
            if p != scheme.cross && !seen.insert(p) {
                return Err(Error::PrimeCollision(p));
            }
        }
    }
    let mut metas = Vec::new();
    for b in blocks {
        metas.push(b.meta.as_ref().ok_or(Error::MissingMeta)?);
    }
    let lambda = metas[0].lambda;
    let mut basis = Vec::new();
    let mut gens = Vec::new();
    let mut levels = Vec::new();
    for (k, b) in blocks.iter().enumerate() {
        if metas[k].lambda != lambda || metas[k].blocks != 1 {
            return Err(Error::InvariantViolation(
                "assemble expects single-block presentations of equal truncation".into(),
            ));
        }
        // Re-index rows and y_star to the assembled position.
        let offset = k as u32 * lambda;
        for s in &b.basis {
            basis.push(reindex(*s, offset, k as u32));
        }
        for g in &b.generators {
            let v = RationalVector::from_entries(
                g.vector
                    .iter()
                    .map(|(s, c)| (reindex(*s, offset, k as u32), c.clone())),
            );
            gens.push(LocalizedGenerator::new(
                v,
                g.inverted_primes.iter().copied(),
            ));
        }
        levels.push(metas[k].levels[0].clone());
    }
    for k in 1..blocks.len() {
        let prev = BasisSymbol::X((k as u32 - 1) * lambda);
        let here = BasisSymbol::X(k as u32 * lambda);
        gens.push(LocalizedGenerator::new(
            &RationalVector::unit(prev) + &RationalVector::unit(here),
            [scheme.cross],
        ));
    }
    basis.sort();
    let mut pres = Presentation::new(basis, gens);
    pres.meta = Some(ConstructionMeta {
        lambda,
        blocks: blocks.len() as u32,
        depth_cap: metas[0].depth_cap,
        family: metas[0].family.clone(),
        scheme: scheme.clone(),
        levels,
    });
    Ok(pres)
}

fn reindex(s: BasisSymbol, row_offset: u32, block: u32) -> BasisSymbol {
    match s {
        BasisSymbol::X(a) => BasisSymbol::X(a + row_offset),
        BasisSymbol::Y(a, i) => BasisSymbol::Y(a + row_offset, i),
        BasisSymbol::YStar(_) => BasisSymbol::YStar(block),
        BasisSymbol::Ladder(a, i, m) => BasisSymbol::Ladder(a + row_offset, i, m),
    }
}

/// The de-mixed negative control: same basis, but only the localized
/// basis-direction generators, so the group decomposes as a direct sum.
pub fn control_presentation(p: &Presentation) -> Presentation {
    let gens = p
        .generators
        .iter()
        .filter(|g| g.vector.support_len() == 1)
        .cloned()
        .collect();
    let mut out = Presentation::new(p.basis.clone(), gens);
    out.meta = p.meta.clone();
    out
}

/// Membership in the divisible part designated by the ψ index: even
/// indices name a block's x part, odd its y part.
pub fn psi_member(
    analyzer: &Analyzer<'_>,
    psi_index: u32,
    v: &RationalVector,
) -> Result<bool, Error> {
    let meta = analyzer
        .presentation()
        .meta
        .as_ref()
        .ok_or(Error::MissingMeta)?;
    let prime = *meta
        .scheme
        .p
        .get(psi_index as usize)
        .ok_or(Error::NoSuchBlock(psi_index / 2))?;
    analyzer.divisible_member(v, prime, meta.depth_cap)
}

/// Membership in the semantic `N_ε` of a block: the pure closure of the
/// level-`ε` pair mixes together with the `y_star` mixes.
pub fn n_epsilon_member(
    analyzer: &Analyzer<'_>,
    block: u32,
    epsilon: u64,
    v: &RationalVector,
) -> Result<bool, Error> {
    let meta = analyzer
        .presentation()
        .meta
        .as_ref()
        .ok_or(Error::MissingMeta)?;
    if block >= meta.blocks {
        return Err(Error::NoSuchBlock(block));
    }
    if !analyzer.member(v)? {
        return Err(Error::NotAMember);
    }
    analyzer.pc_member(v, &meta.n_epsilon_gens(block, epsilon))
}

/// Verdict of the syntactic ladder evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhiVerdict {
    Holds,
    Fails,
    /// The witness search exceeded the multiplier height bound.
    Undecided { needed: Int },
}

impl PhiVerdict {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            PhiVerdict::Holds => Some(true),
            PhiVerdict::Fails => Some(false),
            PhiVerdict::Undecided { .. } => None,
        }
    }
}

/// Evaluates the desk reading of `φ_{block,ε}` at `v ∈ M`: some nonzero
/// multiple of `v` splits into a `y_star`-mixed part and a ladder part
/// whose chain of rung witnesses descends at least `ε` levels.
///
/// The infinite-divisibility conditions pin the decomposition and the
/// chain witnesses to unique candidates (the rung translates of the pair
/// pattern), so the search reduces to: check the linear support
/// conditions, then clear denominators through the multiplier and compare
/// against the height bound.
pub fn phi_eval(
    analyzer: &Analyzer<'_>,
    block: u32,
    epsilon: u64,
    v: &RationalVector,
) -> Result<PhiVerdict, Error> {
    let meta = analyzer
        .presentation()
        .meta
        .as_ref()
        .ok_or(Error::MissingMeta)?;
    if block >= meta.blocks {
        return Err(Error::NoSuchBlock(block));
    }
    if !analyzer.member(v)? {
        return Err(Error::NotAMember);
    }
    if v.is_zero() {
        return Ok(PhiVerdict::Holds);
    }
    let lambda = meta.lambda;
    let row_range = (block * lambda)..((block + 1) * lambda);

    // The split forces v inside this block's coordinates, with no rung
    // components, a balanced y_star coefficient, and the pair pattern
    // supported on levels at least ε.
    let mut pattern: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    let mut x_coeff: BTreeMap<u32, Rational> = BTreeMap::new();
    let mut star_coeff = Rational::zero();
    for (s, c) in v.iter() {
        match *s {
            BasisSymbol::X(a) if row_range.contains(&a) => {
                x_coeff.insert(a - block * lambda, c.clone());
            }
            BasisSymbol::Y(a, i) if row_range.contains(&a) => {
                pattern.insert((a - block * lambda, i), c.clone());
            }
            BasisSymbol::YStar(b) if b == block => star_coeff = c.clone(),
            _ => return Ok(PhiVerdict::Fails),
        }
    }
    for (&(a, i), c) in &pattern {
        if c.is_zero() {
            continue;
        }
        let lvl = meta.level(block, a, i).unwrap_or(0);
        if u64::from(lvl) < epsilon {
            return Ok(PhiVerdict::Fails);
        }
    }
    // Balance: the y_star part absorbs exactly the x coefficients not
    // covered by the pair rowsums.
    let mut star_weights: BTreeMap<u32, Rational> = BTreeMap::new();
    for a in 0..lambda {
        let mut rowsum = Rational::zero();
        for i in 0..lambda {
            if let Some(c) = pattern.get(&(a, i)) {
                rowsum += c;
            }
        }
        let xa = x_coeff.get(&a).cloned().unwrap_or_else(Rational::zero);
        let w = xa - rowsum;
        if !w.is_zero() {
            star_weights.insert(a, w);
        }
    }
    let total: Rational = star_weights.values().cloned().sum();
    if total != star_coeff {
        return Ok(PhiVerdict::Fails);
    }

    // Denominator clearing: every piece of the decomposition and every
    // chain witness must land in the group after scaling by the shared
    // multiplier.
    let row = |a: u32| block * lambda + a;
    let mut pieces: Vec<RationalVector> = Vec::new();
    pieces.push(RationalVector::from_entries(star_weights.iter().flat_map(
        |(&a, w)| {
            [
                (BasisSymbol::X(row(a)), w.clone()),
                (BasisSymbol::YStar(block), w.clone()),
            ]
        },
    )));
    pieces.push(RationalVector::from_entries(
        pattern
            .iter()
            .map(|(&(a, _i), _)| a)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|a| {
                let mut rowsum = Rational::zero();
                for i in 0..lambda {
                    if let Some(c) = pattern.get(&(a, i)) {
                        rowsum += c;
                    }
                }
                (BasisSymbol::X(row(a)), rowsum)
            }),
    ));
    let translate = |depth: u32| -> RationalVector {
        RationalVector::from_entries(
            pattern
                .iter()
                .map(|(&(a, i), c)| (rung_symbol(row(a), i, depth), c.clone())),
        )
    };
    let max_depth = u32::try_from(epsilon).unwrap_or(u32::MAX);
    for k in 0..=max_depth {
        pieces.push(translate(k));
        if k > 0 {
            pieces.push(&translate(k - 1) + &translate(k));
        }
    }
    let mut needed = Int::one();
    for piece in &pieces {
        needed = needed.lcm(&analyzer.group_denominator(piece)?);
    }
    if needed <= meta.scheme.height_bound(meta.depth_cap) {
        Ok(PhiVerdict::Holds)
    } else {
        Ok(PhiVerdict::Undecided { needed })
    }
}

/// The ψ formula of a block part: every power of the part's prime divides
/// the free variable.
pub fn psi_formula(scheme: &PrimeScheme, psi_index: u32) -> Formula {
    Formula::divis_inf(scheme.p[psi_index as usize], LinearForm::var(Var::Free))
}

/// The documented syntactic form of `φ_{block,ε}`: a bounded disjunction
/// over the multiplier of an existential split into a `y_star`-divisible
/// part and a ladder whose links descend `ε` rungs. [`phi_eval`] is its
/// decision procedure; the chain witnesses it solves for are the `x₂`-
/// style bound variables below.
pub fn phi_formula(
    scheme: &PrimeScheme,
    zero_test: u64,
    block: u32,
    epsilon: u32,
    depth_cap: u32,
) -> Result<Formula, Error> {
    // Bound variables: 0 = star part, 1 = x-part, 2 = first y-part, then
    // one chain witness per rung depth.
    let star = Var::Bound(0);
    let x0 = Var::Bound(1);
    let chain = |k: u32| Var::Bound(2 + k);
    let mut parts = alloc::vec![
        Formula::Divis {
            prime: zero_test,
            exponent: None,
            form: LinearForm::scaled_free()
                .plus(-1, star)
                .plus(-1, x0)
                .plus(-1, chain(0)),
        },
        Formula::divis_inf(scheme.star(block)?, LinearForm::var(star)),
        Formula::divis_inf(scheme.p_x(block)?, LinearForm::var(x0)),
        Formula::divis_inf(scheme.p_y(block)?, LinearForm::var(chain(0))),
        Formula::divis_inf(
            scheme.ladder_link(block, 0)?,
            LinearForm::var(x0).plus(1, chain(0)),
        ),
    ];
    for k in 1..=epsilon {
        // Each chain stage lives in its own depth-designated part.
        parts.push(Formula::divis_inf(
            scheme.ladder_rung(block, k)?,
            LinearForm::var(chain(k)),
        ));
        parts.push(Formula::divis_inf(
            scheme.ladder_link(block, k)?,
            LinearForm::var(chain(k - 1)).plus(1, chain(k)),
        ));
    }
    let mut body = Formula::and(parts);
    for k in (0..=(2 + epsilon)).rev() {
        body = Formula::Exists {
            var: k,
            body: Box::new(body),
        };
    }
    Ok(Formula::BoundedOr {
        height: scheme.height_bound(depth_cap),
        body: Box::new(body),
    })
}

/// A pure-closure style designated subgroup: the rational span of
/// `span_gens` intersected with the group, together with the localized
/// generators lying inside it (the data for its depth-capped lattice).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcDescriptor {
    pub label: String,
    pub span_gens: Vec<RationalVector>,
    pub cap_gens: Vec<LocalizedGenerator>,
}

impl PcDescriptor {
    /// Builds the descriptor from a semantic spanning set, harvesting the
    /// presentation generators inside the span. The harvested generators
    /// must span the same space; otherwise the capped lattice would not be
    /// faithful to the subgroup.
    pub fn from_span(
        label: impl Into<String>,
        span_gens: Vec<RationalVector>,
        pres: &Presentation,
    ) -> Result<Self, Error> {
        Self::try_from_span(label, span_gens, pres)?.ok_or_else(|| {
            Error::InvariantViolation("designated span not generated at cap".into())
        })
    }

    /// As [`PcDescriptor::from_span`], returning `None` when the span is
    /// not generated by presentation generators (as happens for the mixed
    /// subgroups of a de-mixed control).
    pub fn try_from_span(
        label: impl Into<String>,
        span_gens: Vec<RationalVector>,
        pres: &Presentation,
    ) -> Result<Option<Self>, Error> {
        let n = pres.basis.len();
        let mut span = crate::matrix::RowSpan::new(n);
        for v in &span_gens {
            span.insert(pres.dense(v)?);
        }
        let mut cap_gens = Vec::new();
        let mut harvested = crate::matrix::RowSpan::new(n);
        for g in &pres.generators {
            let dense = pres.dense(&g.vector)?;
            if span.contains(&dense) {
                harvested.insert(dense);
                cap_gens.push(g.clone());
            }
        }
        if harvested.dim() != span.dim() {
            return Ok(None);
        }
        Ok(Some(PcDescriptor {
            label: label.into(),
            span_gens,
            cap_gens,
        }))
    }

    /// The subgroup's depth-capped lattice.
    pub fn cap_lattice(&self, pres: &Presentation, depth: u32) -> crate::lattice::QLattice {
        let rows: Vec<Vec<Rational>> = self
            .cap_gens
            .iter()
            .map(|g| {
                let s = Rational::from(g.max_denominator(depth));
                pres.dense(&g.vector)
                    .expect("validated support")
                    .into_iter()
                    .map(|c| c / &s)
                    .collect()
            })
            .collect();
        crate::lattice::QLattice::from_rational_rows(pres.basis.len(), &rows)
    }

    /// Exact membership in the designated subgroup.
    pub fn member(&self, analyzer: &Analyzer<'_>, v: &RationalVector) -> Result<bool, Error> {
        analyzer.pc_member(v, &self.span_gens)
    }
}

/// A designated subgroup: semantic (pure-closure generator list) or
/// syntactic (an existential-positive formula).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubgroupDescriptor {
    PureClosure(PcDescriptor),
    Syntactic { label: String, formula: Formula },
}

impl SubgroupDescriptor {
    pub fn label(&self) -> &str {
        match self {
            SubgroupDescriptor::PureClosure(d) => &d.label,
            SubgroupDescriptor::Syntactic { label, .. } => label,
        }
    }
}

/// The standard definable family of a built presentation: both divisible
/// parts of every block, the `N_ε` submodules for `ε ≤ Λ`, and the
/// `y_star` mix part. Subgroups that the presentation does not generate
/// at the cap (the mixed ones, on a de-mixed control) are omitted.
pub fn designated_family(pres: &Presentation) -> Result<Vec<PcDescriptor>, Error> {
    let meta = pres.meta.as_ref().ok_or(Error::MissingMeta)?;
    let mut out = Vec::new();
    let mut push = |d: Option<PcDescriptor>| {
        if let Some(d) = d {
            out.push(d);
        }
    };
    for block in 0..meta.blocks {
        let x_span: Vec<RationalVector> = meta
            .x_symbols(block)
            .into_iter()
            .map(RationalVector::unit)
            .collect();
        push(PcDescriptor::try_from_span(
            alloc::format!("psi.{}", 2 * block),
            x_span,
            pres,
        )?);
        // The second block prime's divisible part: the y directions and
        // y_star (rungs live in the per-depth ladder parts).
        let mut y_span: Vec<RationalVector> = Vec::new();
        for a in 0..meta.lambda {
            for i in 0..meta.lambda {
                y_span.push(RationalVector::unit(BasisSymbol::Y(
                    meta.global_row(block, a),
                    i,
                )));
            }
        }
        y_span.push(RationalVector::unit(BasisSymbol::YStar(block)));
        push(PcDescriptor::try_from_span(
            alloc::format!("psi.{}", 2 * block + 1),
            y_span,
            pres,
        )?);
        for eps in 0..=meta.lambda {
            push(PcDescriptor::try_from_span(
                alloc::format!("n.{block}.{eps}"),
                meta.n_epsilon_gens(block, u64::from(eps)),
                pres,
            )?);
        }
        let star_span: Vec<RationalVector> = (0..meta.lambda)
            .map(|a| {
                &RationalVector::unit(BasisSymbol::X(meta.global_row(block, a)))
                    + &RationalVector::unit(BasisSymbol::YStar(block))
            })
            .collect();
        push(PcDescriptor::try_from_span(
            alloc::format!("nstar.{block}"),
            star_span,
            pres,
        )?);
    }
    Ok(out)
}

/// A strictly decreasing definable filtration with rank-1 quotients and a
/// designated witness per step.
#[derive(Debug, Clone)]
pub struct FiltrationInstance {
    pub presentation: Presentation,
    pub eps_star: u32,
    /// `x_ε` for `ε < eps_star`.
    pub witnesses: Vec<RationalVector>,
    /// Descriptors of `φ_ε` for `ε ≤ eps_star`, semantic and syntactic.
    pub descriptors: Vec<(PcDescriptor, Formula)>,
    pub depth_cap: u32,
}

impl FiltrationInstance {
    /// Spanning set of `φ_ε`.
    pub fn phi_span(&self, eps: u32) -> &[RationalVector] {
        &self.descriptors[eps as usize].0.span_gens
    }
}

/// Builds the chain instance: basis `x_0 … x_{eps_star−1}`, each direction
/// divisible by its own fresh prime, consecutive directions mixed by
/// further fresh primes; `φ_ε` is the pure closure of the tail directions.
/// All structural invariants are verified before the instance is returned.
pub fn build_filtration(
    eps_star: u32,
    scheme: &PrimeScheme,
    depth_cap: u32,
) -> Result<FiltrationInstance, Error> {
    if eps_star < 1 {
        return Err(Error::InvariantViolation(
            "filtration needs at least one step".into(),
        ));
    }
    let used: BTreeSet<u64> = scheme.all_primes().into_iter().collect();
    let fresh = fresh_primes(&used, 2 * eps_star as usize);
    let (r, r_chain) = fresh.split_at(eps_star as usize);

    let basis: Vec<BasisSymbol> = (0..eps_star).map(BasisSymbol::X).collect();
    let mut gens = Vec::new();
    for e in 0..eps_star {
        gens.push(LocalizedGenerator::new(
            RationalVector::unit(BasisSymbol::X(e)),
            [r[e as usize]],
        ));
    }
    for e in 0..eps_star.saturating_sub(1) {
        gens.push(LocalizedGenerator::new(
            &RationalVector::unit(BasisSymbol::X(e)) + &RationalVector::unit(BasisSymbol::X(e + 1)),
            [r_chain[e as usize]],
        ));
    }
    let presentation = Presentation::new(basis, gens);
    let witnesses: Vec<RationalVector> = (0..eps_star)
        .map(|e| RationalVector::unit(BasisSymbol::X(e)))
        .collect();

    let analyzer = Analyzer::new(&presentation)?;
    let zero_p = crate::formula::zero_test_prime(&analyzer);
    let mut descriptors = Vec::new();
    for eps in 0..=eps_star {
        let span_gens: Vec<RationalVector> = (eps..eps_star)
            .map(|z| RationalVector::unit(BasisSymbol::X(z)))
            .collect();
        let pc = PcDescriptor::from_span(alloc::format!("phi.{eps}"), span_gens, &presentation)?;
        let formula = filtration_formula(zero_p, r, eps, eps_star, scheme, depth_cap);
        descriptors.push((pc, formula));
    }

    verify_filtration(&analyzer, eps_star, &witnesses, &descriptors)?;
    drop(analyzer);
    Ok(FiltrationInstance {
        presentation,
        eps_star,
        witnesses,
        descriptors,
        depth_cap,
    })
}

/// The existential-positive formula of `φ_ε` over the chain: some nonzero
/// multiple of the element splits into tail directions, each infinitely
/// divisible by its own prime.
fn filtration_formula(
    zero_p: u64,
    r: &[u64],
    eps: u32,
    eps_star: u32,
    scheme: &PrimeScheme,
    depth_cap: u32,
) -> Formula {
    let tail: Vec<u32> = (eps..eps_star).collect();
    let mut zero_form = LinearForm::scaled_free();
    for (j, _) in tail.iter().enumerate() {
        zero_form = zero_form.plus(-1, Var::Bound(j as u32));
    }
    let mut parts = alloc::vec![Formula::Divis {
        prime: zero_p,
        exponent: None,
        form: zero_form,
    }];
    for (j, z) in tail.iter().enumerate() {
        parts.push(Formula::divis_inf(
            r[*z as usize],
            LinearForm::var(Var::Bound(j as u32)),
        ));
    }
    let mut body = Formula::and(parts);
    for j in (0..tail.len()).rev() {
        body = Formula::Exists {
            var: j as u32,
            body: Box::new(body),
        };
    }
    Formula::BoundedOr {
        height: scheme.height_bound(depth_cap),
        body: Box::new(body),
    }
}

fn verify_filtration(
    analyzer: &Analyzer<'_>,
    eps_star: u32,
    witnesses: &[RationalVector],
    descriptors: &[(PcDescriptor, Formula)],
) -> Result<(), Error> {
    let clause = |c: &str| Error::InvariantViolation(c.into());
    let pres = analyzer.presentation();
    let n = pres.basis.len();
    let span_of = |eps: u32| -> &[RationalVector] { &descriptors[eps as usize].0.span_gens };
    // The chain is strictly decreasing with rank-1 quotients and ends at 0.
    for eps in 0..eps_star {
        let here = span_dim(n, pres, span_of(eps))?;
        let next = span_dim(n, pres, span_of(eps + 1))?;
        if here != next + 1 {
            return Err(clause("phi quotient not of rank 1"));
        }
    }
    if !span_of(eps_star).is_empty() {
        return Err(clause("phi at eps_star not trivial"));
    }
    // Witnesses sit strictly between consecutive stages, and the syntactic
    // formulas agree with the semantic descriptors on them.
    for (eps, w) in witnesses.iter().enumerate() {
        let eps = eps as u32;
        for stage in 0..=eps_star {
            let semantic = analyzer.pc_member(w, span_of(stage))?;
            if semantic != (stage <= eps) {
                return Err(clause("witness misplaced in the chain"));
            }
            let syntactic = descriptors[stage as usize]
                .1
                .eval(w, analyzer)?
                .ok_or_else(|| clause("filtration formula undecided"))?;
            if syntactic != semantic {
                return Err(clause("syntactic/semantic disagreement on witness"));
            }
        }
    }
    Ok(())
}

fn span_dim(
    n: usize,
    pres: &Presentation,
    gens: &[RationalVector],
) -> Result<usize, Error> {
    let mut span = crate::matrix::RowSpan::new(n);
    for g in gens {
        span.insert(pres.dense(g)?);
    }
    Ok(span.dim())
}
