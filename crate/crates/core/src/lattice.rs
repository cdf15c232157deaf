//! The finite group `Z^d / U`, where `U` is spanned by the rows of a
//! nonsingular integer matrix.
//!
//! Elements are addressed through the Smith normal form `L·B·R = diag(s)`:
//! `x ∈ Z^d` maps to `(x·R) mod s`, and a tuple `t` maps back to `t·R⁻¹`.
//! Every class is reported by its representative in the half-open
//! parallelepiped `par(v_1, …, v_d) = {Σ q_i v_i : 0 ≤ q_i < 1}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{adjugate, inverse_unimodular, smith_normal_form, IntMatrix, RationalVector, SNFDecomposition};

/// Default cap on full enumerations of `Z^d/U`.
pub const DEFAULT_PAR_CAP: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct QuotientGroup {
    basis: IntMatrix,
    snf: SNFDecomposition,
    order: BigInt,
    right_inverse: IntMatrix,
    /// `basis⁻¹ · order`, sign-adjusted so Δ-coordinates are `x·coord_matrix / order`.
    coord_matrix: IntMatrix,
}

/// A class representative in the half-open parallelepiped.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParElement {
    pub coeffs: RationalVector,
    pub lattice_point: Vec<BigInt>,
}

impl ParElement {
    /// `m · q_i` for every coefficient; `None` unless all are integral.
    pub fn scaled_coeffs(&self, m: &BigInt) -> Option<Vec<BigInt>> {
        self.coeffs
            .iter()
            .map(|q| {
                let v = q * BigRational::from_integer(m.clone());
                v.is_integer().then(|| v.to_integer())
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.lattice_point.iter().all(Zero::is_zero)
    }
}

pub fn build_quotient(generators: &IntMatrix) -> Result<QuotientGroup> {
    if !generators.is_square() {
        return Err(Error::Dimension(format!(
            "need d generators in dimension d, got {}x{}",
            generators.rows(),
            generators.cols()
        )));
    }
    for (i, row) in generators.row_iter().enumerate() {
        let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        if !g.is_one() && !g.is_zero() {
            return Err(Error::NotPrimitive { row: i, gcd: g });
        }
    }
    let (adj, det) = adjugate(generators)?;
    let snf = smith_normal_form(generators)?;
    let order = snf.diag.iter().product::<BigInt>();
    debug_assert_eq!(order, det.abs());
    let right_inverse = inverse_unimodular(&snf.right)?;
    let coord_matrix = if det.is_negative() {
        IntMatrix::from_rows(adj.row_iter().map(|r| r.iter().map(|x| -x).collect::<Vec<_>>()))?
    } else {
        adj
    };
    Ok(QuotientGroup {
        basis: generators.clone(),
        snf,
        order,
        right_inverse,
        coord_matrix,
    })
}

impl QuotientGroup {
    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn snf(&self) -> &SNFDecomposition {
        &self.snf
    }

    pub fn order(&self) -> &BigInt {
        &self.order
    }

    pub fn dimension(&self) -> usize {
        self.basis.rows()
    }

    /// Numerators of the Δ-coordinates of `point` over the common
    /// denominator `order`.
    fn coordinate_numerators(&self, point: &[BigInt]) -> Vec<BigInt> {
        self.coord_matrix.left_mul_vec(point)
    }

    /// Reduced numerators `c_i ∈ [0, order)` and the matching par point.
    fn reduce_numerators(&self, point: &[BigInt]) -> (Vec<BigInt>, Vec<BigInt>) {
        let numer: Vec<BigInt> = self
            .coordinate_numerators(point)
            .into_iter()
            .map(|n| n.mod_floor(&self.order))
            .collect();
        let scaled = self.basis.left_mul_vec(&numer);
        let lattice_point = scaled
            .into_iter()
            .map(|x| {
                debug_assert!(x.is_multiple_of(&self.order));
                x / &self.order
            })
            .collect();
        (numer, lattice_point)
    }

    fn element_from(&self, numer: Vec<BigInt>, lattice_point: Vec<BigInt>) -> ParElement {
        let coeffs = numer
            .into_iter()
            .map(|n| BigRational::new(n, self.order.clone()))
            .collect();
        ParElement { coeffs, lattice_point }
    }

    pub fn reduce_to_par(&self, point: &[BigInt]) -> ParElement {
        assert_eq!(point.len(), self.dimension());
        let (numer, lp) = self.reduce_numerators(point);
        self.element_from(numer, lp)
    }

    /// True iff `point ∈ U`.
    pub fn contains_in_sublattice(&self, point: &[BigInt]) -> bool {
        self.coordinate_numerators(point)
            .iter()
            .all(|n| n.is_multiple_of(&self.order))
    }

    fn tuple_to_point(&self, tuple: &[BigInt]) -> Vec<BigInt> {
        self.right_inverse.left_mul_vec(tuple)
    }

    /// Abstract coordinates of `point` in `⊕ Z/s_i`.
    pub fn abstract_coords(&self, point: &[BigInt]) -> Vec<BigInt> {
        self.snf
            .right
            .left_mul_vec(point)
            .into_iter()
            .zip(&self.snf.diag)
            .map(|(v, s)| v.mod_floor(s))
            .collect()
    }

    /// The nonzero elements of order `p`, in lexicographic order of their
    /// coordinates with respect to the generators `(s_i/p)·e_i` of the
    /// p-torsion subgroup.
    pub fn p_torsion_elements(&self, p: &BigInt) -> Result<PTorsionIter<'_>> {
        if p <= &BigInt::one() || !self.order.is_multiple_of(p) {
            return Err(Error::Precondition(format!(
                "{p} does not divide the group order {}",
                self.order
            )));
        }
        let slots: Vec<(usize, BigInt)> = self
            .snf
            .diag
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_multiple_of(p))
            .map(|(i, s)| (i, s / p))
            .collect();
        Ok(PTorsionIter {
            group: self,
            p: p.clone(),
            counter: vec![BigInt::zero(); slots.len()],
            slots,
            done: false,
        })
    }

    /// Number of nonzero p-torsion elements, `p^r − 1`.
    pub fn p_torsion_count(&self, p: &BigInt) -> BigInt {
        let r = self.snf.diag.iter().filter(|s| s.is_multiple_of(p)).count();
        p.pow(r as u32) - 1
    }

    /// Every class once, as (numerators over `order`, par point).
    pub(crate) fn par_numerators(&self, cap: u64) -> Result<impl Iterator<Item = (Vec<BigInt>, Vec<BigInt>)> + '_> {
        if self.order > BigInt::from(cap) {
            return Err(Error::CapExceeded {
                what: "parallelepiped enumeration",
                size: self.order.clone(),
                cap,
            });
        }
        let diag: Vec<u64> = self.snf.diag.iter().map(|s| s.to_u64().unwrap()).collect();
        let total = self.order.to_u64().unwrap();
        Ok((0..total).map(move |mut idx| {
            let mut tuple = vec![BigInt::zero(); diag.len()];
            for (slot, &s) in tuple.iter_mut().zip(&diag).rev() {
                *slot = BigInt::from(idx % s);
                idx /= s;
            }
            self.reduce_numerators(&self.tuple_to_point(&tuple))
        }))
    }

    /// All `order` class representatives; errors if `order > cap`.
    pub fn enumerate_par_points(&self, cap: u64) -> Result<impl Iterator<Item = ParElement> + '_> {
        Ok(self
            .par_numerators(cap)?
            .map(|(n, lp)| self.element_from(n, lp)))
    }
}

pub struct PTorsionIter<'a> {
    group: &'a QuotientGroup,
    p: BigInt,
    slots: Vec<(usize, BigInt)>,
    counter: Vec<BigInt>,
    done: bool,
}

impl PTorsionIter<'_> {
    fn advance(&mut self) -> bool {
        for c in self.counter.iter_mut().rev() {
            *c += 1;
            if *c < self.p {
                return true;
            }
            *c = BigInt::zero();
        }
        false
    }
}

impl Iterator for PTorsionIter<'_> {
    type Item = ParElement;

    fn next(&mut self) -> Option<ParElement> {
        if self.done || !self.advance() {
            self.done = true;
            return None;
        }
        let mut tuple = vec![BigInt::zero(); self.group.dimension()];
        for ((idx, step), c) in self.slots.iter().zip(&self.counter) {
            tuple[*idx] = step * c;
        }
        Some(self.group.reduce_to_par(&self.group.tuple_to_point(&tuple)))
    }
}
