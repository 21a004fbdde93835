//! Verification suites runnable over a presentation file.

use rigid_core::construction::{
    build_filtration, n_epsilon_member, phi_eval, psi_member, PhiVerdict,
};
use rigid_core::presentation::{Analyzer, Presentation};
use rigid_core::report::Report;
use rigid_core::rigidity::{
    aset_step_equal, aset_step_witness, bidirectional_invertible, check_epi_rigid,
    check_semi_rigid, pairwise_noniso, x_scalar, ASetOptions,
};
use rigid_core::separation::{check_family, in_range, standard_branches, BranchFamily};
use rigid_core::symbol::BasisSymbol;
use rigid_core::vector::RationalVector;
use rigid_core::{Error, Int, Rational};

/// Deterministic linear-congruential sampler for the agreement batteries.
pub struct Sampler(u64);

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        // Constants from the classical 64-bit LCG family.
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn small_int(&mut self, bound: i64) -> i64 {
        (self.below((2 * bound + 1) as u64) as i64) - bound
    }
}

/// Random members of the presented group: small integer combinations of
/// generators, occasionally divided by powers of their inverted primes.
pub fn sample_members(pres: &Presentation, count: usize, seed: u64) -> Vec<RationalVector> {
    let mut rng = Sampler::new(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut v = RationalVector::zero();
        let picks = 1 + rng.below(3);
        for _ in 0..picks {
            let g = &pres.generators[rng.below(pres.generators.len() as u64) as usize];
            let c = rng.small_int(3);
            if c == 0 {
                continue;
            }
            let mut coeff = Rational::from(Int::from(c));
            if let Some(&p) = g.inverted_primes.iter().next() {
                let e = rng.below(3) as u32;
                if e > 0 {
                    coeff /= Rational::from(Int::from(p).pow(e));
                }
            }
            v = &v + &g.vector.scaled(&coeff);
        }
        out.push(v);
    }
    out
}

/// Separation, basis, disjointness, A-set, and scalar checks.
pub fn suite_main_claim(pres: &Presentation) -> Result<Report, Error> {
    let analyzer = Analyzer::new(pres)?;
    let meta = pres.meta.as_ref().ok_or(Error::MissingMeta)?;
    let mut report = Report::new("main-claim");

    // (e)(β): the separation family over every subfamily.
    let fam = &meta.family;
    let n = fam.len().min(3) - 1;
    match check_family(fam, n) {
        Ok(fr) => report.record(
            "e-beta-separation",
            !fr.witnesses.is_empty(),
            "no separation witnesses produced",
        ),
        Err(e) => report.record("e-beta-separation", false, e.to_string()),
    }

    // (d)(α)/(d)(β)': the designated parts have the expected bases.
    for block in 0..meta.blocks {
        let xs: Vec<RationalVector> = meta
            .x_symbols(block)
            .into_iter()
            .map(RationalVector::unit)
            .collect();
        let x_part = part_presentation_of_prime(pres, meta.scheme.p_x(block)?);
        let ok = Analyzer::new(&x_part)?.is_basis(&xs)?;
        report.record(
            format!("d-alpha-basis.{block}"),
            ok,
            "x directions fail the basis test of their part",
        );
        let m2: Vec<RationalVector> = meta
            .m2_symbols(block)
            .into_iter()
            .map(RationalVector::unit)
            .collect();
        let second = second_part_presentation(pres, block, meta.lambda);
        let ok = Analyzer::new(&second)?.is_basis(&m2)?;
        report.record(
            format!("d-beta-basis.{block}"),
            ok,
            "second-part directions fail the basis test",
        );
    }

    // (c)(β): the two divisible parts of each block meet only at zero;
    // sampled on generators and pseudorandom members.
    let mut samples = sample_members(pres, 40, 0x5eed);
    samples.extend(pres.generators.iter().map(|g| g.vector.clone()));
    for block in 0..meta.blocks {
        let mut ok = true;
        for v in &samples {
            if v.is_zero() {
                continue;
            }
            if psi_member(&analyzer, 2 * block, v)? && psi_member(&analyzer, 2 * block + 1, v)? {
                ok = false;
                break;
            }
        }
        report.record(
            format!("c-beta-disjoint.{block}"),
            ok,
            "nonzero element in both divisible parts",
        );
    }

    // (*)2.5 battery: step equality away from the realized range.
    let opts = ASetOptions::default();
    for block in 0..meta.blocks {
        for a in 0..meta.lambda {
            let branch = fam.get(a as usize);
            let z = RationalVector::unit(BasisSymbol::X(meta.global_row(block, a)));
            for eps in 0..=u64::from(meta.lambda) {
                if in_range(branch, u128::from(eps)) {
                    continue;
                }
                let ok = aset_step_equal(&analyzer, block, eps, &z, opts)?;
                report.record(
                    format!("(*)2.5.{block}.{a}.{eps}"),
                    ok,
                    "step equality fails off the realized range",
                );
            }
        }
    }

    // (*)2.7 battery: the explicit witness at the separating level.
    for block in 0..meta.blocks {
        for k in 0..2usize {
            for (a0, a1) in [(1i64, 1i64), (1, 2), (2, 1), (2, 2)] {
                let coeffs = vec![(0u32, Int::from(a0)), (1u32, Int::from(a1))];
                let (eps, witness) = aset_step_witness(&analyzer, block, &coeffs, k)?;
                let z = &RationalVector::unit(BasisSymbol::X(meta.global_row(block, 0)))
                    .scaled(&Rational::from(Int::from(a0)))
                    + &RationalVector::unit(BasisSymbol::X(meta.global_row(block, 1)))
                        .scaled(&Rational::from(Int::from(a1)));
                let zw = &z + &witness;
                let in_lower = n_epsilon_member(&analyzer, block, eps, &zw)?;
                let in_upper = n_epsilon_member(&analyzer, block, eps + 1, &zw)?;
                let unequal = !aset_step_equal(&analyzer, block, eps, &z, opts)?;
                report.record(
                    format!("(*)2.7.{block}.{k}.{a0}{a1}"),
                    in_lower && !in_upper && unequal,
                    format!("witness misplaced at eps={eps}"),
                );
            }
        }
    }

    // (*)2.6: scaling preserves the step equalities established above.
    for block in 0..meta.blocks {
        for a in 0..meta.lambda {
            let branch = fam.get(a as usize);
            let z = RationalVector::unit(BasisSymbol::X(meta.global_row(block, a)));
            for eps in 0..=u64::from(meta.lambda) {
                if in_range(branch, u128::from(eps)) {
                    continue;
                }
                for c in [1i64, -1, 2, -2, 6, -6] {
                    let ok = rigid_core::rigidity::scaling_preserves_equality(
                        &analyzer,
                        block,
                        eps,
                        &z,
                        &Int::from(c),
                        opts,
                    )?;
                    report.record(
                        format!("(*)2.6.{block}.{a}.{eps}.{c}"),
                        ok,
                        "scaling broke a step equality",
                    );
                }
            }
        }
    }

    // ⊞2 shadow through the solver.
    let outcome = check_semi_rigid(&analyzer, meta.depth_cap)?;
    report.merge(outcome.report);
    Ok(report)
}

fn part_presentation_of_prime(pres: &Presentation, p: u64) -> Presentation {
    let gens = pres
        .generators
        .iter()
        .filter(|g| g.inverted_primes.contains(&p))
        .cloned()
        .collect();
    Presentation::new(pres.basis.clone(), gens)
}

/// The whole second part of a block: everything supported off the x
/// directions of the block.
fn second_part_presentation(pres: &Presentation, block: u32, lambda: u32) -> Presentation {
    let row_range = (block * lambda)..((block + 1) * lambda);
    let gens = pres
        .generators
        .iter()
        .filter(|g| {
            g.vector.support().all(|s| match s {
                BasisSymbol::X(_) => false,
                BasisSymbol::Y(a, _) | BasisSymbol::Ladder(a, _, _) => row_range.contains(a),
                BasisSymbol::YStar(b) => *b == block,
            })
        })
        .cloned()
        .collect();
    Presentation::new(pres.basis.clone(), gens)
}

/// Uniform-scalar checks (the solver battery).
pub fn suite_a3(pres: &Presentation) -> Result<Report, Error> {
    let analyzer = Analyzer::new(pres)?;
    let meta = pres.meta.as_ref().ok_or(Error::MissingMeta)?;
    let outcome = check_semi_rigid(&analyzer, meta.depth_cap)?;
    let mut report = Report::new("a3");
    report.merge(outcome.report);
    Ok(report)
}

/// Assembly checks: cross-block uniformity, invertibility, moving parts.
pub fn suite_a6(pres: &Presentation) -> Result<Report, Error> {
    let analyzer = Analyzer::new(pres)?;
    let meta = pres.meta.as_ref().ok_or(Error::MissingMeta)?;
    let outcome = check_semi_rigid(&analyzer, meta.depth_cap)?;
    let mut report = Report::new("a6");
    report.merge(outcome.report);
    report.record(
        "c-gamma-pc",
        Analyzer::new(pres)?.is_basis(
            &pres
                .basis
                .iter()
                .map(|s| RationalVector::unit(*s))
                .collect::<Vec<_>>(),
        )?,
        "basis directions fail to purely generate the assembly",
    );
    Ok(report)
}

/// Syntactic/semantic agreement battery.
pub fn suite_agreement(pres: &Presentation, samples: usize, seed: u64) -> Result<Report, Error> {
    let analyzer = Analyzer::new(pres)?;
    let meta = pres.meta.as_ref().ok_or(Error::MissingMeta)?;
    let mut report = Report::new("a11-agreement");
    let mut vectors: Vec<RationalVector> =
        pres.generators.iter().map(|g| g.vector.clone()).collect();
    vectors.extend(sample_members(pres, samples, seed));
    let mut undecided = 0usize;
    let mut disagreements = 0usize;
    let mut checked = 0usize;
    for v in &vectors {
        for block in 0..meta.blocks {
            for eps in 0..=u64::from(meta.lambda) {
                let semantic = n_epsilon_member(&analyzer, block, eps, v)?;
                match phi_eval(&analyzer, block, eps, v)? {
                    PhiVerdict::Holds => {
                        checked += 1;
                        if !semantic {
                            disagreements += 1;
                        }
                    }
                    PhiVerdict::Fails => {
                        checked += 1;
                        if semantic {
                            disagreements += 1;
                        }
                    }
                    PhiVerdict::Undecided { .. } => undecided += 1,
                }
            }
        }
    }
    report.record(
        "phi-n-agreement",
        disagreements == 0 && checked > 0,
        format!("{disagreements} disagreements over {checked} evaluations"),
    );
    report.record(
        "phi-zero-undecided",
        undecided == 0,
        format!("{undecided} undecided evaluations"),
    );
    Ok(report)
}

/// Epi-rigidity battery over filtration instances built from the file's
/// scheme.
pub fn suite_a19(pres: &Presentation) -> Result<Report, Error> {
    let meta = pres.meta.as_ref().ok_or(Error::MissingMeta)?;
    let mut report = Report::new("a19");
    for eps_star in [2u32, 3] {
        let inst = build_filtration(eps_star, &meta.scheme, meta.depth_cap)?;
        let sub = check_epi_rigid(&inst, meta.depth_cap)?;
        for mut check in sub.checks {
            check.clause = format!("{}.eps{eps_star}", check.clause);
            report.push(check);
        }
    }
    Ok(report)
}

/// Pairwise non-isomorphism over the standard two-branch families,
/// built with the file's parameters.
pub fn suite_family(pres: &Presentation) -> Result<Report, Error> {
    let meta = pres.meta.as_ref().ok_or(Error::MissingMeta)?;
    let mut report = Report::new("family");
    let branches = standard_branches();
    // Four distinct two-branch families with pairwise distinct realized
    // level multisets.
    let families = [(0, 1), (0, 2), (1, 3), (2, 3)];
    let mut built = Vec::new();
    for (i, j) in families {
        let family = BranchFamily::new(vec![branches[i].clone(), branches[j].clone()])?;
        let params = rigid_core::construction::ConstructionParams::new(
            2,
            meta.blocks.max(2),
            meta.depth_cap,
            family,
        )?;
        let scheme = rigid_core::construction::default_scheme(
            params.blocks,
            params.ladder_primes_needed()?,
        );
        built.push(rigid_core::construction::build(&params, &scheme)?);
    }
    for a in 0..built.len() {
        for b in (a + 1)..built.len() {
            let ok = pairwise_noniso(&built[a], &built[b], meta.depth_cap)?;
            report.record(
                format!("noniso.{a}.{b}"),
                ok,
                "families compared isomorphic at cap",
            );
        }
    }
    for (idx, p) in built.iter().enumerate() {
        let analyzer = Analyzer::new(p)?;
        let found = bidirectional_invertible(&analyzer, &analyzer, meta.depth_cap)?;
        let ok = match &found {
            Some(f) => {
                let m = p.meta.as_ref().ok_or(Error::MissingMeta)?;
                matches!(x_scalar(f, m), Some(c) if c.denom() == &Int::from(1)
                    && rigid_core::is_invertible(c.numer()))
            }
            None => false,
        };
        report.record(
            format!("self-identity.{idx}"),
            ok,
            "self comparison failed to recover a unit solution",
        );
    }
    Ok(report)
}

/// The check battery for a suite name.
pub fn run_suite(name: &str, pres: &Presentation) -> Result<Report, Error> {
    match name {
        "main-claim" => suite_main_claim(pres),
        "a3" => suite_a3(pres),
        "a6" => suite_a6(pres),
        "a11-agreement" => suite_agreement(pres, 100, 0x5eed42),
        "a19" => suite_a19(pres),
        "family" => suite_family(pres),
        other => Err(Error::InvariantViolation(format!("unknown suite {other}"))),
    }
}

/// One pass/fail line per check, for terminal output.
pub fn print_report(report: &Report) {
    print!("{report}");
}

/// Adds a pass line per check into a single merged status.
pub fn exit_code_for(report: &Report) -> i32 {
    if report.all_passed() {
        0
    } else {
        1
    }
}
