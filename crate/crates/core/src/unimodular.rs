//! Unimodular triangulations: a baseline desingularizer, the prime transfer
//! construction and the full pipeline on top of the bounded prime factors
//! triangulation.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::bpft::{run_bpft, TriangulationState};
use crate::cone::{primitivize, Containment, DilationFactor, SimplicialCone};
use crate::error::{Error, Result};
use crate::lattice::DEFAULT_PAR_CAP;
use crate::linalg::{determinant, IntMatrix};
use crate::numtheory::{constants, is_prime, p_max};
use crate::precise::Real;
use crate::provenance::{Origin, ProvenanceTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Naive,
    BpftThenNaive,
    BpftThenTransfer,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Naive, Strategy::BpftThenNaive, Strategy::BpftThenTransfer];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::BpftThenNaive => "bpft-naive",
            Strategy::BpftThenTransfer => "bpft-transfer",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "bpft-naive" | "bpft_then_naive" => Ok(Strategy::BpftThenNaive),
            "bpft-transfer" | "bpft_then_transfer" => Ok(Strategy::BpftThenTransfer),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// A stellar refinement of one cone, as produced by the desingularizer.
#[derive(Clone, Debug)]
struct Refinement {
    tree: ProvenanceTree,
    leaves: Vec<usize>,
    vectors: Vec<Vec<BigInt>>,
}

impl Refinement {
    fn pieces(&self) -> Vec<SimplicialCone> {
        self.leaves.iter().map(|&id| self.tree.cone(id).clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct UnimodularTriangulation {
    pub root: SimplicialCone,
    pub strategy: Strategy,
    pub pieces: Vec<SimplicialCone>,
    /// Provenance id of each piece.
    pub piece_ids: Vec<usize>,
    pub provenance: ProvenanceTree,
    /// Stellar subdivision vectors, in the order they were used.
    pub subdivision_vectors: Vec<Vec<BigInt>>,
    pub transfers: Vec<TransferCertificate>,
    /// Primes removed by transfers on the way from the root to each piece.
    pub prime_chains: Vec<Vec<BigInt>>,
    /// Index into `bpft.current_ids()` of the cone each piece descends from.
    pub bpft_origin: Vec<Option<usize>>,
    pub bpft: Option<TriangulationState>,
    /// Largest dilation of a piece generator relative to the root.
    pub max_dilation: DilationFactor,
}

impl UnimodularTriangulation {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

/// Evidence for one application of the prime transfer to a cone `C`.
#[derive(Clone, Debug)]
pub struct TransferCertificate {
    pub p: BigInt,
    /// The cone `E` with `v_1' = p e_1 + Σ (p − z_j) e_j`, `v_i' = e_i`.
    pub special_cone: SimplicialCone,
    /// Normalized coefficients, `z[0] = 1`.
    pub z: Vec<BigInt>,
    /// `permutation[k]` is the generator of `C` playing the role of `v_k`.
    pub permutation: Vec<usize>,
    /// `A^i`: row `j` holds `p` times the coordinates of `w_j'` in `E`.
    pub coefficient_matrices: Vec<IntMatrix>,
    /// `l^i_j` with `a^i_{jk} ≡ l^i_j z_k (mod p)`.
    pub multipliers: Vec<Vec<BigInt>>,
    /// `w^i_j = (1/p) Σ_k a^i_{jk} v_k` before primitivization.
    pub raw_generators: Vec<IntMatrix>,
    /// Largest dilation in `Δ_E` of a generator of the triangulation of `E`.
    pub measured_k: DilationFactor,
}

impl TransferCertificate {
    /// `d²/64 · p^(ρ·ld p + ε)`, the reference value for `measured_k`.
    pub fn k_formula(&self) -> Real {
        let d = self.special_cone.dimension() as i64;
        let c = constants();
        let p = Real::from_int(self.p.clone());
        let exponent = &(&c.rho * &p.ld()) + &c.epsilon;
        &Real::from_ratio(d * d, 64) * &p.powr(&exponent)
    }
}

/// Resolves `c` by repeated stellar subdivision at minimal-dilation par
/// points, with dilations measured against `root`.
fn desingularize_within(c: &SimplicialCone, root: &SimplicialCone, cap: u64) -> Result<Refinement> {
    let mut tree = ProvenanceTree::new(c.clone());
    let mut leaves = vec![0usize];
    let mut vectors = Vec::new();
    while let Some(&target) = leaves.iter().find(|&&id| !tree.cone(id).is_unimodular()) {
        let piece = tree.cone(target);
        let group = piece.quotient_group()?;
        let mut best: Option<(BigInt, Vec<BigInt>)> = None;
        for e in group.enumerate_par_points(cap)? {
            if e.is_zero() {
                continue;
            }
            let key = root.coordinate_numerators(&e.lattice_point).into_iter().sum::<BigInt>();
            let better = match &best {
                None => true,
                Some((k, v)) => key < *k || (key == *k && e.lattice_point < *v),
            };
            if better {
                best = Some((key, e.lattice_point));
            }
        }
        let (_, x) = best.expect("non-unimodular cone has a nonzero par point");
        let (x, _) = primitivize(&x);
        let hit: Vec<usize> = leaves
            .iter()
            .copied()
            .filter(|&id| tree.cone(id).contains_point(&x, Containment::Closed))
            .collect();
        for id in hit {
            let children = tree.cone(id).stellar_subdivide(&x)?;
            leaves.retain(|&l| l != id);
            for child in children {
                leaves.push(tree.add_child(id, child, Origin::Stellar(x.clone())));
            }
        }
        vectors.push(x);
    }
    Ok(Refinement { tree, leaves, vectors })
}

/// Unimodular triangulation of `c` by the baseline desingularizer.
pub fn desingularize_baseline(c: &SimplicialCone) -> Result<UnimodularTriangulation> {
    desingularize_baseline_with_cap(c, DEFAULT_PAR_CAP)
}

pub fn desingularize_baseline_with_cap(c: &SimplicialCone, cap: u64) -> Result<UnimodularTriangulation> {
    check_dimension(c)?;
    let r = desingularize_within(c, c, cap)?;
    let pieces = r.pieces();
    let n = pieces.len();
    finish(UnimodularTriangulation {
        root: c.clone(),
        strategy: Strategy::Naive,
        pieces,
        piece_ids: r.leaves,
        provenance: r.tree,
        subdivision_vectors: r.vectors,
        transfers: Vec::new(),
        prime_chains: vec![Vec::new(); n],
        bpft_origin: vec![None; n],
        bpft: None,
        max_dilation: DilationFactor::one(),
    })
}

fn check_dimension(c: &SimplicialCone) -> Result<()> {
    if c.dimension() < 2 {
        return Err(Error::Precondition(format!("need d >= 2, got {}", c.dimension())));
    }
    Ok(())
}

fn finish(mut t: UnimodularTriangulation) -> Result<UnimodularTriangulation> {
    if let Some(bad) = t.pieces.iter().find(|p| !p.is_unimodular()) {
        return Err(Error::InvariantViolation(format!(
            "piece with multiplicity {} left in a unimodular triangulation",
            bad.multiplicity()
        )));
    }
    t.max_dilation = t.root.max_generator_dilation(&t.pieces)?;
    Ok(t)
}

/// The cone `E` for the prime `p` and coefficients `z` with `z_1 = 1`,
/// together with `x' = (1/p) Σ z_i v_i'`, which is the all-ones vector.
pub fn build_special_cone(p: &BigInt, z: &[BigInt]) -> Result<(SimplicialCone, Vec<BigInt>)> {
    let d = z.len();
    if d < 2 {
        return Err(Error::Precondition(format!("need d >= 2, got {d}")));
    }
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    if !z[0].is_one() {
        return Err(Error::Precondition(format!("z_1 must be 1, got {}", z[0])));
    }
    if let Some(bad) = z.iter().find(|&zi| zi.is_negative() || zi >= p) {
        return Err(Error::Precondition(format!("coefficient {bad} outside [0, {p})")));
    }
    if z[1..].iter().all(Zero::is_zero) {
        // v_1' = (p, …, p) is then not primitive and (1/p)v_1' is a lattice point
        return Err(Error::Precondition(
            "z_2 = … = z_d = 0 gives a non-primitive first generator".into(),
        ));
    }
    let mut rows = vec![vec![BigInt::zero(); d]; d];
    rows[0][0] = p.clone();
    for j in 1..d {
        rows[0][j] = p - &z[j];
        rows[j][j] = BigInt::one();
    }
    let cone = SimplicialCone::from_primitive(IntMatrix::from_rows(rows)?)?;
    debug_assert_eq!(cone.multiplicity(), p);

    let x = cone.generators().left_mul_vec(z);
    let witness: Vec<BigInt> = x.iter().map(|v| v / p).collect();
    debug_assert!(x.iter().all(|v| (v % p).is_zero()));
    Ok((cone, witness))
}

/// Triangulates `c` into cones of multiplicity `μ(c)/p` by transporting a
/// unimodular triangulation of the special cone for `p`.
///
/// The returned cones are primitivized; their raw generators (which give
/// determinant exactly `μ(c)/p`) are kept in the certificate.
pub fn prime_transfer(c: &SimplicialCone, p: &BigInt) -> Result<(Vec<SimplicialCone>, TransferCertificate)> {
    prime_transfer_with_cap(c, p, DEFAULT_PAR_CAP)
}

pub fn prime_transfer_with_cap(
    c: &SimplicialCone,
    p: &BigInt,
    cap: u64,
) -> Result<(Vec<SimplicialCone>, TransferCertificate)> {
    check_dimension(c)?;
    let mu = c.multiplicity();
    if !is_prime(p) || !(mu % p).is_zero() {
        return Err(Error::Precondition(format!("{p} is not a prime divisor of {mu}")));
    }
    let d = c.dimension();
    let group = c.quotient_group()?;
    let element = group
        .p_torsion_elements(p)?
        .next()
        .ok_or_else(|| Error::InvariantViolation(format!("no element of order {p}")))?;
    let raw_z = element.scaled_coeffs(p).expect("p-torsion element");
    let unit = raw_z
        .iter()
        .position(|z| !(z % p).is_zero())
        .ok_or_else(|| Error::InvariantViolation("order-p element with all coefficients divisible by p".into()))?;
    let inverse = raw_z[unit]
        .modinv(p)
        .ok_or_else(|| Error::InvariantViolation(format!("{} not invertible mod {p}", raw_z[unit])))?;
    let mut permutation = vec![unit];
    permutation.extend((0..d).filter(|&i| i != unit));
    let z: Vec<BigInt> = permutation
        .iter()
        .map(|&i| (&raw_z[i] * &inverse).mod_floor(p))
        .collect();

    let (special, _) = build_special_cone(p, &z)?;
    let refinement = desingularize_within(&special, &special, cap)?;
    let permuted = IntMatrix::from_rows(permutation.iter().map(|&i| c.generator(i).to_vec()))?;

    let expected_det = p.pow(d as u32 - 1);
    let mut pieces = Vec::new();
    let mut coefficient_matrices = Vec::new();
    let mut multipliers = Vec::new();
    let mut raw_generators = Vec::new();
    let mut measured = BigInt::zero();
    for &leaf in &refinement.leaves {
        let f = refinement.tree.cone(leaf);
        let mut a_rows = Vec::with_capacity(d);
        let mut l_row = Vec::with_capacity(d);
        let mut w_rows = Vec::with_capacity(d);
        for w_prime in f.generators().row_iter() {
            let a = special.coordinate_numerators(w_prime);
            measured = measured.max(a.iter().sum());
            let l = a[0].mod_floor(p);
            if let Some(k) = (0..d).find(|&k| !((&a[k] - &l * &z[k]) % p).is_zero()) {
                return Err(Error::InvariantViolation(format!(
                    "a_{{j{k}}} - l z_{k} is not divisible by {p}"
                )));
            }
            let sum = permuted.left_mul_vec(&a);
            if sum.iter().any(|s| !(s % p).is_zero()) {
                return Err(Error::InvariantViolation("transferred generator is not integral".into()));
            }
            w_rows.push(sum.into_iter().map(|s| s / p).collect::<Vec<_>>());
            a_rows.push(a);
            l_row.push(l);
        }
        let a = IntMatrix::from_rows(a_rows)?;
        if determinant(&a)? != expected_det {
            return Err(Error::InvariantViolation(format!(
                "det(A) = {} instead of {expected_det}",
                determinant(&a)?
            )));
        }
        let w = IntMatrix::from_rows(w_rows)?;
        if determinant(&w)?.abs() * p != *mu {
            return Err(Error::InvariantViolation(format!(
                "transferred cone has determinant {} for mu = {mu}, p = {p}",
                determinant(&w)?
            )));
        }
        pieces.push(SimplicialCone::new(&w)?);
        coefficient_matrices.push(a);
        multipliers.push(l_row);
        raw_generators.push(w);
    }
    let cert = TransferCertificate {
        p: p.clone(),
        measured_k: DilationFactor::new(num_rational::BigRational::new(measured, p.clone())),
        special_cone: special,
        z,
        permutation,
        coefficient_matrices,
        multipliers,
        raw_generators,
    };
    Ok((pieces, cert))
}

struct TransferRun {
    tree: ProvenanceTree,
    leaves: Vec<(usize, Vec<BigInt>)>,
    certificates: Vec<TransferCertificate>,
}

/// Applies prime transfers, largest prime first, until every piece is
/// unimodular.
fn transfer_down(c: &SimplicialCone, cap: u64) -> Result<TransferRun> {
    let mut tree = ProvenanceTree::new(c.clone());
    let mut leaves = Vec::new();
    let mut certificates = Vec::new();
    let mut stack = vec![(0usize, Vec::new())];
    while let Some((id, chain)) = stack.pop() {
        let cone = tree.cone(id).clone();
        if cone.is_unimodular() {
            leaves.push((id, chain));
            continue;
        }
        let p = p_max(cone.multiplicity())?;
        let (pieces, cert) = prime_transfer_with_cap(&cone, &p, cap)?;
        certificates.push(cert);
        let mut chain = chain;
        chain.push(p.clone());
        let ids: Vec<usize> = pieces
            .into_iter()
            .map(|piece| tree.add_child(id, piece, Origin::Transfer(p.clone())))
            .collect();
        stack.extend(ids.into_iter().rev().map(|i| (i, chain.clone())));
    }
    Ok(TransferRun {
        tree,
        leaves,
        certificates,
    })
}

/// Full unimodular triangulation of `c` with the given strategy.
pub fn pipeline_finres(c: &SimplicialCone, strategy: Strategy) -> Result<UnimodularTriangulation> {
    pipeline_finres_with_cap(c, strategy, DEFAULT_PAR_CAP)
}

pub fn pipeline_finres_with_cap(
    c: &SimplicialCone,
    strategy: Strategy,
    cap: u64,
) -> Result<UnimodularTriangulation> {
    check_dimension(c)?;
    if strategy == Strategy::Naive {
        return desingularize_baseline_with_cap(c, cap);
    }
    let state = run_bpft(c)?;
    let mut provenance = state.provenance().clone();
    let mut subdivision_vectors: Vec<Vec<BigInt>> = state.subdivision_vectors().map(<[BigInt]>::to_vec).collect();
    let mut pieces = Vec::new();
    let mut piece_ids = Vec::new();
    let mut prime_chains = Vec::new();
    let mut bpft_origin = Vec::new();
    let mut transfers = Vec::new();
    let stage: Vec<(usize, SimplicialCone)> = state
        .current()
        .zip(state.current_ids())
        .map(|(lc, &id)| (id, lc.cone.clone()))
        .collect();

    match strategy {
        Strategy::BpftThenNaive => {
            let refined: Vec<Refinement> = stage
                .par_iter()
                .map(|(_, cone)| desingularize_within(cone, c, cap))
                .collect::<Result<_>>()?;
            for (k, ((at, _), r)) in stage.iter().zip(refined).enumerate() {
                let ids = provenance.graft(*at, &r.tree);
                for &leaf in &r.leaves {
                    pieces.push(r.tree.cone(leaf).clone());
                    piece_ids.push(ids[leaf]);
                    prime_chains.push(Vec::new());
                    bpft_origin.push(Some(k));
                }
                subdivision_vectors.extend(r.vectors);
            }
        }
        Strategy::BpftThenTransfer => {
            let runs: Vec<TransferRun> = stage
                .par_iter()
                .map(|(_, cone)| transfer_down(cone, cap))
                .collect::<Result<_>>()?;
            for (k, ((at, _), run)) in stage.iter().zip(runs).enumerate() {
                let ids = provenance.graft(*at, &run.tree);
                for (leaf, chain) in run.leaves {
                    pieces.push(run.tree.cone(leaf).clone());
                    piece_ids.push(ids[leaf]);
                    prime_chains.push(chain);
                    bpft_origin.push(Some(k));
                }
                transfers.extend(run.certificates);
            }
        }
        Strategy::Naive => unreachable!(),
    }
    finish(UnimodularTriangulation {
        root: c.clone(),
        strategy,
        pieces,
        piece_ids,
        provenance,
        subdivision_vectors,
        transfers,
        prime_chains,
        bpft_origin,
        bpft: Some(state),
        max_dilation: DilationFactor::one(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn cone(rows: &[&[i64]]) -> SimplicialCone {
        SimplicialCone::from_rows(rows.iter().map(|r| r.iter().copied())).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn baseline_small_cases() {
        let unit = cone(&[&[1, 0], &[0, 1]]);
        let t = desingularize_baseline(&unit).unwrap();
        assert_eq!(t.pieces, vec![unit]);

        let c = cone(&[&[2, 1], &[1, 2]]);
        let t = desingularize_baseline(&c).unwrap();
        assert_eq!(t.subdivision_vectors, vec![ints(&[1, 1])]);
        assert_eq!(t.len(), 2);

        let c = cone(&[&[3, 1], &[0, 1]]);
        let t = desingularize_baseline(&c).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.subdivision_vectors, vec![ints(&[1, 1]), ints(&[2, 1])]);
        assert!(t.max_dilation.value() <= &BigRational::from_integer(2.into()));
    }

    #[test]
    fn special_cone_examples() {
        let p = BigInt::from(5);
        let (e, x) = build_special_cone(&p, &ints(&[1, 2, 3])).unwrap();
        assert_eq!(e.generator(0), ints(&[5, 3, 2]).as_slice());
        assert_eq!(e.multiplicity(), &p);
        assert_eq!(x, ints(&[1, 1, 1]));

        let (e, x) = build_special_cone(&BigInt::from(2), &ints(&[1, 1])).unwrap();
        assert_eq!(e.generator(0), ints(&[2, 1]).as_slice());
        assert_eq!(x, ints(&[1, 1]));

        assert!(build_special_cone(&p, &ints(&[2, 1, 1])).is_err());
        assert!(build_special_cone(&p, &ints(&[1, 5, 1])).is_err());
        assert!(build_special_cone(&BigInt::from(4), &ints(&[1, 1])).is_err());
        assert!(build_special_cone(&p, &ints(&[1, 0, 0])).is_err());
    }

    #[test]
    fn transfer_three() {
        let c = cone(&[&[2, 1], &[1, 2]]);
        let (pieces, cert) = prime_transfer(&c, &BigInt::from(3)).unwrap();
        assert_eq!(pieces.len(), 2);
        assert!(pieces.iter().all(SimplicialCone::is_unimodular));
        for a in &cert.coefficient_matrices {
            assert_eq!(determinant(a).unwrap(), BigInt::from(3));
        }
        for w in pieces.iter().flat_map(|p| p.generators().row_iter()) {
            assert!(c.dilation(w).unwrap() <= cert.measured_k);
        }
        assert!(prime_transfer(&c, &BigInt::from(2)).is_err());
    }

    #[test]
    fn transfer_reduces_by_p() {
        let c = cone(&[&[1, 0, 0], &[0, 1, 0], &[3, 5, 30]]);
        for p in [2, 3, 5] {
            let p = BigInt::from(p);
            let (pieces, cert) = prime_transfer(&c, &p).unwrap();
            for (piece, w) in pieces.iter().zip(&cert.raw_generators) {
                assert_eq!(determinant(w).unwrap().abs() * &p, BigInt::from(30));
                assert!(piece.multiplicity() * &p <= BigInt::from(30));
            }
        }
    }

    #[test]
    fn pipeline_strategies() {
        let c = cone(&[&[2, 1], &[1, 2]]);
        for s in Strategy::ALL {
            let t = pipeline_finres(&c, s).unwrap();
            assert_eq!(t.len(), 2, "{s}");
            assert!(t.max_dilation.value() <= &BigRational::from_integer(2.into()));
        }
        let unit = cone(&[&[1, 0], &[0, 1]]);
        for s in Strategy::ALL {
            let t = pipeline_finres(&unit, s).unwrap();
            assert_eq!(t.len(), 1);
            assert_eq!(t.max_dilation, DilationFactor::one());
        }
        let c = cone(&[&[13, 1], &[0, 1]]);
        for s in Strategy::ALL {
            let t = pipeline_finres(&c, s).unwrap();
            assert!(t.pieces.iter().all(SimplicialCone::is_unimodular));
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bpft".parse::<Strategy>().is_err());
    }
}
