//! Bounded prime factors triangulation.
//!
//! Repeatedly picks a cone `D` of the current triangulation whose
//! multiplicity has a prime factor `p ≥ e^(τd)`, finds an element
//! `x = (1/p) Σ z_j v_j` of order `p` modulo the lattice of `D` with no
//! `z_j` an odd prime, and stellarly subdivides every current cone that
//! contains `x`. Each cone carries the labels `ξ(i)`: indices `−1…−d` hold
//! the root generators and nonnegative indices the subdivision vectors
//! along its history; a subdivided cone `E` hands its labels down and its
//! children receive `ξ(ν+1) = x` with `ν = max{i : ξ_E(i) ≠ 0}`.

use std::collections::BTreeMap;

use log::debug;
use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::cone::{primitivize, Containment, SimplicialCone};
use crate::error::{Error, Result};
use crate::lattice::{ParElement, QuotientGroup};
use crate::numtheory::{is_prime, p_max, threshold_exceeded, Phi};
use crate::provenance::{Origin, ProvenanceTree};

/// A cone of the ancestry together with its ξ labels.
#[derive(Clone, Debug)]
pub struct LabeledCone {
    pub cone: SimplicialCone,
    /// Nonzero labels only; absent indices are the zero vector.
    pub xi: BTreeMap<i64, Vec<BigInt>>,
    /// ξ index of each generator row of `cone`.
    pub generator_indices: Vec<i64>,
}

impl LabeledCone {
    fn root(cone: SimplicialCone) -> Self {
        let d = cone.dimension() as i64;
        let xi = (1..=d)
            .map(|i| (-i, cone.generator((i - 1) as usize).to_vec()))
            .collect();
        Self {
            generator_indices: (1..=d).map(|i| -i).collect(),
            cone,
            xi,
        }
    }

    /// χ(D) = max{i : ξ_D(i) ≠ 0}.
    pub fn chi(&self) -> i64 {
        *self.xi.keys().next_back().expect("root labels are never empty")
    }

    pub fn xi(&self, i: i64) -> Option<&[BigInt]> {
        self.xi.get(&i).map(Vec::as_slice)
    }

    /// Generator indices sorted as `i_1 > i_2 > … > i_d`.
    pub fn sorted_generator_indices(&self) -> Vec<i64> {
        let mut idx = self.generator_indices.clone();
        idx.sort_unstable_by(|a, b| b.cmp(a));
        idx
    }
}

pub fn chi(cone: &LabeledCone) -> i64 {
    cone.chi()
}

/// One pass of the main loop.
#[derive(Clone, Debug)]
pub struct BpftStep {
    /// Ancestry id of the cone `D` the vector was found in.
    pub selected: usize,
    pub p: BigInt,
    /// Coefficients `z_j` of the found element with respect to `D`.
    pub z: Vec<BigInt>,
    /// The element as found (before primitivization).
    pub found: Vec<BigInt>,
    /// The primitive vector actually used for subdivision.
    pub vector: Vec<BigInt>,
    /// gcd divided out of `found`; 1 in the common case.
    pub gcd: BigInt,
    /// Ancestry ids of all cones subdivided by `vector`.
    pub subdivided: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TriangulationState {
    ancestry: Vec<LabeledCone>,
    current: Vec<usize>,
    provenance: ProvenanceTree,
    steps: Vec<BpftStep>,
}

impl TriangulationState {
    fn new(root: SimplicialCone) -> Self {
        Self {
            provenance: ProvenanceTree::new(root.clone()),
            ancestry: vec![LabeledCone::root(root)],
            current: vec![0],
            steps: Vec::new(),
        }
    }

    pub fn root(&self) -> &SimplicialCone {
        &self.ancestry[0].cone
    }

    pub fn dimension(&self) -> usize {
        self.root().dimension()
    }

    /// Â(C): every cone ever created, indexed like the provenance tree.
    pub fn ancestry(&self) -> &[LabeledCone] {
        &self.ancestry
    }

    /// Ids of T̂(C) in insertion order.
    pub fn current_ids(&self) -> &[usize] {
        &self.current
    }

    pub fn current(&self) -> impl Iterator<Item = &LabeledCone> + '_ {
        self.current.iter().map(|&id| &self.ancestry[id])
    }

    pub fn current_cones(&self) -> Vec<SimplicialCone> {
        self.current().map(|c| c.cone.clone()).collect()
    }

    pub fn provenance(&self) -> &ProvenanceTree {
        &self.provenance
    }

    pub fn steps(&self) -> &[BpftStep] {
        &self.steps
    }

    /// Subdivision vectors in the order they were introduced.
    pub fn subdivision_vectors(&self) -> impl Iterator<Item = &[BigInt]> + '_ {
        self.steps.iter().map(|s| s.vector.as_slice())
    }

    /// The current cone with the largest multiplicity among those whose
    /// largest prime factor reaches the threshold; ties go to the earlier
    /// inserted cone.
    fn select(&self) -> Result<Option<(usize, BigInt)>> {
        let d = self.dimension();
        let mut best: Option<(usize, BigInt, BigInt)> = None;
        for &id in &self.current {
            let mu = self.ancestry[id].cone.multiplicity();
            if mu.is_one() || best.as_ref().is_some_and(|(_, m, _)| mu <= m) {
                continue;
            }
            let p = p_max(mu)?;
            if threshold_exceeded(&p, d) {
                best = Some((id, mu.clone(), p));
            }
        }
        Ok(best.map(|(id, _, p)| (id, p)))
    }
}

fn is_odd_prime(z: &BigInt) -> bool {
    z > &BigInt::from(2) && is_prime(z)
}

/// The first element of order `p` (in the deterministic p-torsion order)
/// none of whose coefficients `z_i = p·q_i`, `i ∈ avoid`, is an odd prime.
///
/// Indices in `avoid` are zero-based generator positions.
pub fn find_avoiding(group: &QuotientGroup, p: &BigInt, avoid: &[usize]) -> Result<ParElement> {
    if let Some(&bad) = avoid.iter().find(|&&i| i >= group.dimension()) {
        return Err(Error::Precondition(format!(
            "index {bad} out of range for dimension {}",
            group.dimension()
        )));
    }
    for element in group.p_torsion_elements(p)? {
        let z = element
            .scaled_coeffs(p)
            .expect("p-torsion coefficients have denominator p");
        if avoid.iter().all(|&i| !is_odd_prime(&z[i])) {
            return Ok(element);
        }
    }
    Err(Error::NotFound { p: p.clone() })
}

/// Runs the bounded prime factors triangulation on `root`.
///
/// Every subdivision is checked on the fly: multiplicities strictly drop,
/// `φ(μ(child)) ≤ φ(μ(parent)) − 1`, and `χ(child) ≤ φ(μ(C)) − 1`. A failed
/// check aborts with [`Error::InvariantViolation`].
pub fn run_bpft(root: &SimplicialCone) -> Result<TriangulationState> {
    let d = root.dimension();
    if d < 2 {
        return Err(Error::Precondition(format!("need d >= 2, got {d}")));
    }
    let root_phi = Phi::of(root.multiplicity())?;
    let mut state = TriangulationState::new(root.clone());
    let all: Vec<usize> = (0..d).collect();

    while let Some((selected, p)) = state.select()? {
        let cone = &state.ancestry[selected].cone;
        let group = cone.quotient_group()?;
        let found = match find_avoiding(&group, &p, &all) {
            Ok(e) => e,
            Err(Error::NotFound { .. }) => {
                return Err(Error::InvariantViolation(format!(
                    "no element of order {p} avoiding odd prime coefficients in cone {:?}",
                    cone.generators()
                )))
            }
            Err(e) => return Err(e),
        };
        let z = found.scaled_coeffs(&p).expect("p-torsion element");
        let (vector, gcd) = primitivize(&found.lattice_point);
        if !gcd.is_one() {
            debug!(
                "primitivized subdivision vector {:?} by gcd {gcd}",
                found.lattice_point.iter().map(ToString::to_string).collect::<Vec<_>>()
            );
        }

        let targets: Vec<usize> = state
            .current
            .iter()
            .copied()
            .filter(|&id| state.ancestry[id].cone.contains_point(&vector, Containment::Closed))
            .collect();

        for &target in &targets {
            let parent = &state.ancestry[target];
            let nu = parent.chi();
            let parent_phi = Phi::of(parent.cone.multiplicity())?;
            let mut new_ids = Vec::new();
            for (slot, child) in parent.cone.stellar_children(&vector)? {
                check_edge(&parent.cone, &parent_phi, &child, &root_phi, nu + 1)?;
                let mut xi = parent.xi.clone();
                xi.insert(nu + 1, vector.clone());
                let mut generator_indices = parent.generator_indices.clone();
                generator_indices[slot] = nu + 1;
                let labeled = LabeledCone {
                    cone: child.clone(),
                    xi,
                    generator_indices,
                };
                let id = state
                    .provenance
                    .add_child(target, child, Origin::Stellar(vector.clone()));
                debug_assert_eq!(id, state.ancestry.len() + new_ids.len());
                new_ids.push((id, labeled));
            }
            state.current.retain(|&id| id != target);
            for (id, labeled) in new_ids {
                state.ancestry.push(labeled);
                state.current.push(id);
            }
        }
        state.steps.push(BpftStep {
            selected,
            p,
            z,
            found: found.lattice_point,
            vector,
            gcd,
            subdivided: targets,
        });
    }
    Ok(state)
}

fn check_edge(
    parent: &SimplicialCone,
    parent_phi: &Phi,
    child: &SimplicialCone,
    root_phi: &Phi,
    child_chi: i64,
) -> Result<()> {
    if child.multiplicity() >= parent.multiplicity() {
        return Err(Error::InvariantViolation(format!(
            "multiplicity did not drop: {} -> {}",
            parent.multiplicity(),
            child.multiplicity()
        )));
    }
    let child_phi = Phi::of(child.multiplicity())?;
    if !child_phi.le_plus(parent_phi, -1) {
        return Err(Error::InvariantViolation(format!(
            "phi({}) > phi({}) - 1 for a subdivision edge",
            child.multiplicity(),
            parent.multiplicity()
        )));
    }
    // χ ≤ φ(μ(C)) − 1  ⟺  φ(μ(C)) ≥ χ + 1
    if !root_phi.at_least(child_chi + 1) {
        return Err(Error::InvariantViolation(format!(
            "chi = {child_chi} exceeds phi({}) - 1",
            root_phi.n()
        )));
    }
    Ok(())
}

impl TriangulationState {
    /// Number of cones in T̂(C) with multiplicity above one.
    pub fn nonunimodular_count(&self) -> usize {
        self.current().filter(|c| !c.cone.is_unimodular()).count()
    }

    /// ξ values with nonnegative index across the ancestry, deduplicated,
    /// as (index, vector).
    pub fn labeled_vectors(&self) -> Vec<(i64, Vec<BigInt>)> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.ancestry {
            for (i, v) in c.xi.range(0..) {
                if v.iter().any(|x| !x.is_zero()) {
                    seen.insert((*i, v.clone()));
                }
            }
        }
        seen.into_iter().collect()
    }
}
