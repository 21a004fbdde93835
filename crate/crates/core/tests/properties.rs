//! Property tests for the lattice algebra: closure of membership, pure
//! closure monotonicity and purity, canonical-form determinism, and
//! solver monotonicity in the depth cap.

use proptest::prelude::*;
use rigid_core::construction::{build, default_scheme, ConstructionParams, PcDescriptor};
use rigid_core::lattice::{hnf_basis, QLattice};
use rigid_core::presentation::{Analyzer, LocalizedGenerator, Presentation};
use rigid_core::rigidity::endo_ring;
use rigid_core::separation::{Branch, BranchFamily};
use rigid_core::symbol::BasisSymbol;
use rigid_core::vector::RationalVector;
use rigid_core::{Int, Rational};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(Int::from(n), Int::from(d))
}

fn rank2_mixed() -> Presentation {
    let x = RationalVector::unit(BasisSymbol::X(0));
    let y = RationalVector::unit(BasisSymbol::X(1));
    let xy = &x + &y;
    Presentation::new(
        vec![BasisSymbol::X(0), BasisSymbol::X(1)],
        vec![
            LocalizedGenerator::new(x, [2]),
            LocalizedGenerator::new(y, [3]),
            LocalizedGenerator::new(xy, [5]),
        ],
    )
}

/// A member of the rank-2 instance by construction: an integer combination
/// of generators divided by allowed prime powers.
fn member_strategy() -> impl Strategy<Value = RationalVector> {
    let coeff = (-6i64..=6, 0u32..=3);
    (coeff.clone(), coeff.clone(), coeff).prop_map(|((a, i), (b, j), (c, k))| {
        let x = RationalVector::unit(BasisSymbol::X(0));
        let y = RationalVector::unit(BasisSymbol::X(1));
        let xy = &x + &y;
        let term = |v: &RationalVector, n: i64, p: i64, e: u32| {
            v.scaled(&(q(n, 1) / q(p.pow(e), 1)))
        };
        let mut out = term(&x, a, 2, i);
        out = &out + &term(&y, b, 3, j);
        &out + &term(&xy, c, 5, k)
    })
}

fn small_vector_strategy() -> impl Strategy<Value = RationalVector> {
    let entry = (-10i64..=10, 1i64..=30);
    (entry.clone(), entry).prop_map(|((a, b), (c, d))| {
        RationalVector::from_entries([
            (BasisSymbol::X(0), q(a, b)),
            (BasisSymbol::X(1), q(c, d)),
        ])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn member_closed_under_addition_and_negation(
        u in member_strategy(),
        v in member_strategy(),
    ) {
        let p = rank2_mixed();
        let a = Analyzer::new(&p).unwrap();
        prop_assert!(a.member(&u).unwrap());
        prop_assert!(a.member(&v).unwrap());
        prop_assert!(a.member(&(&u + &v)).unwrap());
        prop_assert!(a.member(&(-&u)).unwrap());
    }

    #[test]
    fn pc_member_implies_member_and_is_monotone(v in small_vector_strategy()) {
        let p = rank2_mixed();
        let a = Analyzer::new(&p).unwrap();
        let x = RationalVector::unit(BasisSymbol::X(0));
        let y = RationalVector::unit(BasisSymbol::X(1));
        let small = [x.clone()];
        let large = [x, y];
        let in_small = a.pc_member(&v, &small).unwrap();
        let in_large = a.pc_member(&v, &large).unwrap();
        if in_small {
            prop_assert!(a.member(&v).unwrap());
            prop_assert!(in_large);
        }
    }

    #[test]
    fn pure_closure_is_pure(v in member_strategy(), c in 1i64..=12) {
        // If c·v lies in the pure closure and v is a member, v lies in the
        // pure closure too.
        let p = rank2_mixed();
        let a = Analyzer::new(&p).unwrap();
        let x = RationalVector::unit(BasisSymbol::X(0));
        let scaled = v.scaled(&q(c, 1));
        if a.member(&scaled).unwrap()
            && a.pc_member(&scaled, std::slice::from_ref(&x)).unwrap()
            && a.member(&v).unwrap()
        {
            prop_assert!(a.pc_member(&v, &[x]).unwrap());
        }
    }

    #[test]
    fn hnf_basis_is_order_independent_and_span_preserving(
        rows in proptest::collection::vec((-9i64..=9, -9i64..=9), 1..5),
        rotation in 0usize..4,
    ) {
        let vectors: Vec<RationalVector> = rows
            .iter()
            .map(|(a, b)| {
                RationalVector::from_entries([
                    (BasisSymbol::X(0), q(*a, 1)),
                    (BasisSymbol::X(1), q(*b, 1)),
                ])
            })
            .collect();
        let mut rotated = vectors.clone();
        let by = rotation % rotated.len().max(1);
        rotated.rotate_left(by);
        let canon = hnf_basis(&vectors);
        prop_assert_eq!(&canon, &hnf_basis(&rotated));

        // Mutual integer-span containment.
        let basis = [BasisSymbol::X(0), BasisSymbol::X(1)];
        let dense =
            |vs: &[RationalVector]| -> Vec<Vec<Rational>> {
                vs.iter().map(|v| v.to_dense(&basis).unwrap()).collect()
            };
        let lat_in = QLattice::from_rational_rows(2, &dense(&vectors));
        let lat_out = QLattice::from_rational_rows(2, &dense(&canon));
        prop_assert!(lat_in.same_lattice(&lat_out));
    }
}

/// Raising the depth cap never enlarges the solution module.
#[test]
fn solver_monotone_in_depth() {
    let p = rank2_mixed();
    let a = Analyzer::new(&p).unwrap();
    let designated = vec![
        PcDescriptor::from_span("psi.2", vec![RationalVector::unit(BasisSymbol::X(0))], &p)
            .unwrap(),
        PcDescriptor::from_span("psi.3", vec![RationalVector::unit(BasisSymbol::X(1))], &p)
            .unwrap(),
    ];
    let mut lattices = Vec::new();
    for depth in [3u32, 4, 5, 6] {
        let ring = endo_ring(&a, &designated, depth).unwrap();
        let flat: Vec<Vec<Rational>> = ring
            .solutions
            .iter()
            .map(|s| s.matrix.to_flat())
            .collect();
        lattices.push(QLattice::from_rational_rows(4, &flat));
    }
    for w in lattices.windows(2) {
        // Every solution at the deeper cap solves the shallower system.
        for row in w[1].rational_rows() {
            assert!(w[0].contains(&row));
        }
    }
}

/// The stability flag reported on built blocks holds from depth 5 to 6.
#[test]
fn block_solver_stable_at_depth() {
    let family =
        BranchFamily::new(vec![Branch::constant(false), Branch::constant(true)]).unwrap();
    let params = ConstructionParams::new(2, 1, 6, family).unwrap();
    let scheme = default_scheme(1, params.ladder_primes_needed().unwrap());
    let pres = build(&params, &scheme).unwrap();
    let analyzer = Analyzer::new(&pres).unwrap();
    let designated = rigid_core::construction::designated_family(&pres).unwrap();
    let ring = endo_ring(&analyzer, &designated, 6).unwrap();
    assert!(ring.stable);
    assert!(ring.contains_identity);
}
