use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use conetri::bpft::run_bpft;
use conetri::cone::{Containment, SimplicialCone};
use conetri::generators::{prime_example, random_cone, random_cone_where, ConeSpec};
use conetri::linalg::{determinant, solve_rational, IntMatrix, RationalVector};
use conetri::numtheory::{factorize, is_prime, p_max};
use conetri::unimodular::{pipeline_finres, Strategy as Method};
use conetri::verify::{check_partition, overlapping_pairs_exact};

fn small_cone(d: usize, max_entry: u64, max_mu: i64) -> impl Strategy<Value = SimplicialCone> {
    any::<u64>().prop_map(move |seed| {
        random_cone(&ConeSpec::random(d, seed, max_entry).with_mu_range(1, max_mu)).unwrap()
    })
}

fn coords(c: &SimplicialCone, v: &[BigInt]) -> Vec<BigRational> {
    solve_rational(c.generators(), &RationalVector::from_integers(v))
        .unwrap()
        .into_inner()
}

fn in_cone(c: &SimplicialCone, v: &[BigInt]) -> bool {
    coords(c, v).iter().all(|q| !q.is_negative())
}

fn sub(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Whether `v` is a nonnegative integer combination of `basis`.
fn representable(c: &SimplicialCone, basis: &[Vec<BigInt>], v: Vec<BigInt>, memo: &mut HashMap<Vec<BigInt>, bool>) -> bool {
    if v.iter().all(Zero::is_zero) {
        return true;
    }
    if let Some(&r) = memo.get(&v) {
        return r;
    }
    let r = basis.iter().any(|b| {
        let rest = sub(&v, b);
        in_cone(c, &rest) && representable(c, basis, rest, memo)
    });
    memo.insert(v, r);
    r
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_cones_are_well_formed(d in 2usize..=4, seed: u64, max_entry in 1u64..=9) {
        let c = random_cone(&ConeSpec::random(d, seed, max_entry)).unwrap();
        for row in c.generators().row_iter() {
            let g = row.iter().fold(BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
            prop_assert!(g.is_one());
        }
        prop_assert_eq!(c.multiplicity(), &determinant(c.generators()).unwrap().abs());
        for row in c.generators().row_iter() {
            prop_assert!(c.dilation(row).unwrap().value().is_one());
        }
    }

    #[test]
    fn stellar_subdivision_partitions(c in small_cone(3, 6, 400), pick: u64) {
        prop_assume!(!c.is_unimodular());
        let group = c.quotient_group().unwrap();
        let points: Vec<_> = group.enumerate_par_points(1_000).unwrap().filter(|e| !e.is_zero()).collect();
        let x = &points[(pick % points.len() as u64) as usize];
        let (x, _) = conetri::cone::primitivize(&x.lattice_point);
        let q = coords(&c, &x);
        let children = c.stellar_children(&x).unwrap();
        prop_assert_eq!(children.len(), q.iter().filter(|v| v.is_positive()).count());
        for (i, child) in &children {
            let expected = &q[*i] * BigRational::from_integer(c.multiplicity().clone());
            prop_assert_eq!(BigRational::from_integer(child.multiplicity().clone()), expected);
            prop_assert!(child.multiplicity() < c.multiplicity());
        }
        let pieces: Vec<_> = children.into_iter().map(|(_, k)| k).collect();
        let v = check_partition(&c, &pieces, 1_000, pick);
        prop_assert!(v.is_valid(), "{:?}", v);
        prop_assert!(overlapping_pairs_exact(&pieces).unwrap().is_empty());
    }

    #[test]
    fn hilbert_basis_generates_and_is_irreducible(c in small_cone(2, 12, 200)) {
        let basis = c.hilbert_basis(10_000).unwrap().elements;
        for g in c.generators().row_iter() {
            prop_assert!(basis.iter().any(|b| b == g));
        }
        for (i, h) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                if i != j {
                    prop_assert!(!in_cone(&c, &sub(h, b)), "{:?} - {:?} stays in the cone", h, b);
                }
            }
        }
        let mut memo = HashMap::new();
        for e in c.quotient_group().unwrap().enumerate_par_points(1_000).unwrap() {
            prop_assert!(representable(&c, &basis, e.lattice_point.clone(), &mut memo));
        }
    }

    #[test]
    fn par_reduction(c in small_cone(3, 5, 300), x in prop::collection::vec(-50i64..50, 3)) {
        let group = c.quotient_group().unwrap();
        let x: Vec<BigInt> = x.into_iter().map(BigInt::from).collect();
        let e = group.reduce_to_par(&x);
        prop_assert!(group.contains_in_sublattice(&sub(&x, &e.lattice_point)));
        prop_assert_eq!(group.reduce_to_par(&e.lattice_point), e.clone());
        prop_assert!(e.coeffs.iter().all(|q| !q.is_negative() && q < &BigRational::one()));
        prop_assert_eq!(group.abstract_coords(&x), group.abstract_coords(&e.lattice_point));
    }

    #[test]
    fn p_torsion_matches_count(c in small_cone(3, 6, 500)) {
        prop_assume!(!c.is_unimodular());
        let group = c.quotient_group().unwrap();
        for p in factorize(c.multiplicity()).unwrap().primes() {
            let elems: Vec<_> = group.p_torsion_elements(p).unwrap().collect();
            prop_assert_eq!(BigInt::from(elems.len()), group.p_torsion_count(p));
            for e in &elems {
                prop_assert!(!e.is_zero());
                let scaled = e.scaled_coeffs(p);
                prop_assert!(scaled.is_some());
                let px: Vec<BigInt> = e.lattice_point.iter().map(|v| v * p).collect();
                prop_assert!(group.contains_in_sublattice(&px));
            }
        }
    }

    #[test]
    fn bpft_partitions_root(d in 2usize..=3, seed: u64) {
        let spec = ConeSpec::random(d, seed, 15);
        let c = random_cone_where(&spec, |c| {
            p_max(c.multiplicity()).is_ok_and(|p| conetri::numtheory::threshold_exceeded(&p, d))
        }).unwrap();
        let state = run_bpft(&c).unwrap();
        let pieces = state.current_cones();
        let v = check_partition(&c, &pieces, 2_000, seed);
        prop_assert!(v.is_valid(), "{:?}", v);
        prop_assert!(overlapping_pairs_exact(&pieces).unwrap().is_empty());
        for step in state.steps() {
            prop_assert!(is_prime(&step.p));
            for id in &step.subdivided {
                prop_assert!(state.ancestry()[*id].cone.contains_point(&step.vector, Containment::Closed));
            }
        }
    }

    #[test]
    fn pipelines_are_unimodular_partitions(c in small_cone(3, 4, 120), which in 0usize..3) {
        prop_assume!(!c.is_unimodular());
        let s = Method::ALL[which];
        let t = pipeline_finres(&c, s).unwrap();
        prop_assert!(t.pieces.iter().all(SimplicialCone::is_unimodular));
        prop_assert!(check_partition(&c, &t.pieces, 2_000, 1).is_valid());
        prop_assert!(overlapping_pairs_exact(&t.pieces).unwrap().is_empty());
    }
}

#[test]
fn prime_examples_have_prime_multiplicity() {
    for d in 2..30usize {
        if is_prime(&BigInt::from(d + 1)) {
            assert_eq!(prime_example(d).unwrap().multiplicity(), &BigInt::from(d + 1));
        } else {
            assert!(prime_example(d).is_err());
        }
    }
}

#[test]
fn explicit_rows_keep_rays() {
    let m = IntMatrix::from_rows(vec![vec![4, 2], vec![1, 2]]).unwrap();
    let c = SimplicialCone::new(&m).unwrap();
    assert_eq!(c.generator(0), &[BigInt::from(2), BigInt::from(1)]);
    assert_eq!(c.multiplicity(), &BigInt::from(3));
    let m = IntMatrix::from_rows(vec![vec![-4, -2], vec![1, 2]]).unwrap();
    let c = SimplicialCone::new(&m).unwrap();
    assert_eq!(c.generator(0), &[BigInt::from(-2), BigInt::from(-1)]);
}
