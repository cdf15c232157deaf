//! Simplicial cones: multiplicity, Δ-coordinates, stellar subdivision and
//! Hilbert bases.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_quotient, QuotientGroup};
use crate::linalg::{adjugate, IntMatrix, RationalVector};

/// Default cap on the multiplicity for Hilbert basis computations.
pub const DEFAULT_HILBERT_CAP: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Closed,
    Interior,
}

/// Divides `v` by the gcd of its coordinates. Returns the primitive vector
/// and the gcd (zero for the zero vector, which is returned unchanged).
pub fn primitivize(v: &[BigInt]) -> (Vec<BigInt>, BigInt) {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        return (v.to_vec(), g);
    }
    (v.iter().map(|x| x / &g).collect(), g)
}

/// `c` such that `x ∈ cΔ_C`, i.e. the sum of the Δ-coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DilationFactor(BigRational);

impl DilationFactor {
    pub fn new(value: BigRational) -> Self {
        debug_assert!(!value.is_negative());
        Self(value)
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }
}

impl fmt::Display for DilationFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for DilationFactor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        let n: BigInt = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        let q = BigRational::new(n, d);
        if q.is_negative() {
            return Err(format!("negative dilation {s:?}"));
        }
        Ok(Self(q))
    }
}

impl Serialize for DilationFactor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DilationFactor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A cone spanned by `d` linearly independent primitive integer vectors.
#[derive(Clone)]
pub struct SimplicialCone {
    generators: IntMatrix,
    multiplicity: BigInt,
    orientation: bool,
    /// Δ-coordinates of `x` are `x · coord_matrix / multiplicity`.
    coord_matrix: IntMatrix,
    coord_small: Option<Vec<i64>>,
}

impl PartialEq for SimplicialCone {
    fn eq(&self, other: &Self) -> bool {
        self.generators == other.generators
    }
}

impl Eq for SimplicialCone {}

impl fmt::Debug for SimplicialCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimplicialCone")
            .field("generators", &self.generators)
            .field("multiplicity", &self.multiplicity.to_string())
            .finish()
    }
}

/// Primitivizes the rows, then builds the cone.
pub fn make_cone(rows: &IntMatrix) -> Result<SimplicialCone> {
    SimplicialCone::new(rows)
}

impl SimplicialCone {
    /// Primitivizes every row (dividing by the positive coordinate gcd, so
    /// the ray is preserved) and computes the multiplicity.
    pub fn new(rows: &IntMatrix) -> Result<Self> {
        if !rows.is_square() {
            return Err(Error::Dimension(format!(
                "a simplicial cone needs d generators in dimension d, got {}x{}",
                rows.rows(),
                rows.cols()
            )));
        }
        let prim: Vec<Vec<BigInt>> = rows.row_iter().map(|r| primitivize(r).0).collect();
        Self::from_primitive(IntMatrix::from_rows(prim)?)
    }

    /// Builds a cone whose rows are already primitive.
    pub fn from_primitive(generators: IntMatrix) -> Result<Self> {
        if !generators.is_square() {
            return Err(Error::Dimension(format!(
                "a simplicial cone needs d generators in dimension d, got {}x{}",
                generators.rows(),
                generators.cols()
            )));
        }
        for (i, row) in generators.row_iter().enumerate() {
            let g = primitivize(row).1;
            if g.is_zero() {
                return Err(Error::Singular);
            }
            if !g.is_one() {
                return Err(Error::NotPrimitive { row: i, gcd: g });
            }
        }
        let (adj, det) = adjugate(&generators)?;
        let orientation = det.is_positive();
        let coord_matrix = if orientation {
            adj
        } else {
            IntMatrix::from_rows(adj.row_iter().map(|r| r.iter().map(|x| -x).collect::<Vec<_>>()))?
        };
        let coord_small = coord_matrix.row_iter().flatten().map(ToPrimitive::to_i64).collect();
        Ok(Self {
            generators,
            multiplicity: det.abs(),
            orientation,
            coord_matrix,
            coord_small,
        })
    }

    pub fn from_rows<R, I, T>(rows: R) -> Result<Self>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        Self::new(&IntMatrix::from_rows(rows)?)
    }

    pub fn dimension(&self) -> usize {
        self.generators.rows()
    }

    pub fn generators(&self) -> &IntMatrix {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &[BigInt] {
        self.generators.row(i)
    }

    pub fn multiplicity(&self) -> &BigInt {
        &self.multiplicity
    }

    pub fn is_unimodular(&self) -> bool {
        self.multiplicity.is_one()
    }

    /// Sign of the generator determinant.
    pub fn is_positively_oriented(&self) -> bool {
        self.orientation
    }

    /// The generator set as canonical rays; two cones are the same cone
    /// iff their ray sets agree.
    pub fn ray_set(&self) -> BTreeSet<Vec<BigInt>> {
        self.generators.row_iter().map(<[BigInt]>::to_vec).collect()
    }

    pub fn same_cone(&self, other: &SimplicialCone) -> bool {
        self.ray_set() == other.ray_set()
    }

    pub fn quotient_group(&self) -> Result<QuotientGroup> {
        build_quotient(&self.generators)
    }

    /// `μ · q` for the Δ-coordinates `q` of an integer vector.
    pub fn coordinate_numerators(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.dimension(), "vector has the wrong dimension");
        self.coord_matrix.left_mul_vec(x)
    }

    pub fn coordinates(&self, x: &[BigInt]) -> RationalVector {
        self.coordinate_numerators(x)
            .into_iter()
            .map(|n| BigRational::new(n, self.multiplicity.clone()))
            .collect()
    }

    pub fn coordinates_rational(&self, x: &RationalVector) -> RationalVector {
        let den = x.common_denominator();
        let scaled: Vec<BigInt> = x
            .iter()
            .map(|q| (q * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        let total = &den * &self.multiplicity;
        self.coordinate_numerators(&scaled)
            .into_iter()
            .map(|n| BigRational::new(n, total.clone()))
            .collect()
    }

    /// Signs of the Δ-coordinates of `y` in machine integers, or `None` if an
    /// intermediate would overflow.
    pub fn coordinate_signs_small(&self, y: &[i64]) -> Option<Vec<Ordering>> {
        let m = self.coord_small.as_ref()?;
        let d = self.dimension();
        (0..d)
            .map(|k| {
                let mut acc: i128 = 0;
                for (j, &yj) in y.iter().enumerate() {
                    acc = acc.checked_add(i128::from(yj) * i128::from(m[j * d + k]))?;
                }
                Some(acc.cmp(&0))
            })
            .collect()
    }

    pub fn coordinate_signs(&self, y: &[BigInt]) -> Vec<Ordering> {
        self.coordinate_numerators(y)
            .iter()
            .map(|n| n.cmp(&BigInt::zero()))
            .collect()
    }

    pub fn contains_point(&self, x: &[BigInt], mode: Containment) -> bool {
        signs_in(&self.coordinate_signs(x), mode)
    }

    pub fn contains(&self, x: &RationalVector, mode: Containment) -> bool {
        let den = x.common_denominator();
        let scaled: Vec<BigInt> = x
            .iter()
            .map(|q| (q * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        self.contains_point(&scaled, mode)
    }

    /// Exact dilation factor of an integer vector in the cone.
    pub fn dilation(&self, x: &[BigInt]) -> Result<DilationFactor> {
        let numer = self.coordinate_numerators(x);
        if let Some((index, n)) = numer.iter().enumerate().find(|(_, n)| n.is_negative()) {
            return Err(Error::NotInCone {
                index,
                value: BigRational::new(n.clone(), self.multiplicity.clone()),
            });
        }
        let total: BigInt = numer.iter().sum();
        Ok(DilationFactor(BigRational::new(total, self.multiplicity.clone())))
    }

    /// Largest dilation (relative to `self`) among the generators of `pieces`.
    pub fn max_generator_dilation<'a>(
        &self,
        pieces: impl IntoIterator<Item = &'a SimplicialCone>,
    ) -> Result<DilationFactor> {
        let mut best = DilationFactor(BigRational::zero());
        for piece in pieces {
            for g in piece.generators.row_iter() {
                best = best.max(self.dilation(g)?);
            }
        }
        Ok(best)
    }

    /// Stellar subdivision by a primitive integer vector `x` of the cone.
    ///
    /// Returns `(i, E_i)` for every `i` with positive coordinate `q_i`, where
    /// `E_i` replaces generator `i` by `x`; `μ(E_i) = q_i · μ`.
    pub fn stellar_children(&self, x: &[BigInt]) -> Result<Vec<(usize, SimplicialCone)>> {
        let numer = self.coordinate_numerators(x);
        if numer.iter().all(Zero::is_zero) {
            return Err(Error::Precondition("cannot subdivide by the zero vector".into()));
        }
        if let Some((index, n)) = numer.iter().enumerate().find(|(_, n)| n.is_negative()) {
            return Err(Error::NotInCone {
                index,
                value: BigRational::new(n.clone(), self.multiplicity.clone()),
            });
        }
        let positive: Vec<usize> = (0..numer.len()).filter(|&i| numer[i].is_positive()).collect();
        if positive.len() == 1 {
            return Err(Error::Precondition(format!(
                "subdividing vector lies on the ray of generator {}",
                positive[0]
            )));
        }
        let (_, g) = primitivize(x);
        if !g.is_one() {
            return Err(Error::NotPrimitive { row: 0, gcd: g });
        }
        positive
            .into_iter()
            .map(|i| {
                let child = SimplicialCone::from_primitive(self.generators.with_row(i, x))?;
                // det(E_i) = q_i det(C) with q_i > 0: orientation is kept
                debug_assert_eq!(child.orientation, self.orientation);
                debug_assert_eq!(&child.multiplicity, &numer[i]);
                Ok((i, child))
            })
            .collect()
    }

    pub fn stellar_subdivide(&self, x: &[BigInt]) -> Result<Vec<SimplicialCone>> {
        Ok(self.stellar_children(x)?.into_iter().map(|(_, c)| c).collect())
    }

    /// Hilbert basis of `C ∩ Z^d`; errors if `μ > cap`.
    ///
    /// Every Hilbert basis element of a simplicial cone is a generator or a
    /// nonzero par point. A par point is reducible iff another nonzero par
    /// point is dominated by it coordinatewise (the difference then lies in
    /// the cone), so the basis consists of the generators and the minimal
    /// par points.
    pub fn hilbert_basis(&self, cap: u64) -> Result<HilbertBasis> {
        if self.multiplicity > BigInt::from(cap) {
            return Err(Error::CapExceeded {
                what: "Hilbert basis multiplicity",
                size: self.multiplicity.clone(),
                cap,
            });
        }
        let group = self.quotient_group()?;
        let mut candidates: Vec<(BigInt, Vec<BigInt>, Vec<BigInt>)> = group
            .par_numerators(cap)?
            .filter(|(n, _)| n.iter().any(|x| !x.is_zero()))
            .map(|(n, lp)| (n.iter().sum(), n, lp))
            .collect();
        candidates.sort();

        let mut minimal: Vec<(Vec<BigInt>, Vec<BigInt>)> = Vec::new();
        for (_, numer, point) in candidates {
            let dominated = minimal
                .iter()
                .any(|(m, _)| m.iter().zip(&numer).all(|(a, b)| a <= b));
            if !dominated {
                minimal.push((numer, point));
            }
        }
        let mut elements: Vec<Vec<BigInt>> = self.generators.to_rows();
        elements.extend(minimal.into_iter().map(|(_, p)| p));
        Ok(HilbertBasis { elements })
    }
}

fn signs_in(signs: &[Ordering], mode: Containment) -> bool {
    match mode {
        Containment::Closed => signs.iter().all(|s| *s != Ordering::Less),
        Containment::Interior => signs.iter().all(|s| *s == Ordering::Greater),
    }
}

/// Generators first, then the irreducible par points in order of
/// increasing dilation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertBasis {
    pub elements: Vec<Vec<BigInt>>,
}

impl HilbertBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.elements.iter().any(|e| e == v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(rows: &[&[i64]]) -> SimplicialCone {
        SimplicialCone::from_rows(rows.iter().map(|r| r.iter().copied())).unwrap()
    }

    fn v(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn make_cone_examples() {
        let unit = SimplicialCone::new(&IntMatrix::identity(3)).unwrap();
        assert!(unit.is_unimodular());

        let c = cone(&[&[4, 2], &[1, 2]]);
        assert_eq!(c.generators().to_rows(), vec![v(&[2, 1]), v(&[1, 2])]);
        assert_eq!(c.multiplicity(), &BigInt::from(3));

        let c = cone(&[&[5, 3, 2, 1], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        assert_eq!(c.multiplicity(), &BigInt::from(5));

        // sign is preserved when dividing out the gcd
        let c = cone(&[&[-4, -2], &[0, 3]]);
        assert_eq!(c.generator(0), v(&[-2, -1]).as_slice());
        assert_eq!(c.generator(1), v(&[0, 1]).as_slice());

        assert_eq!(
            SimplicialCone::from_rows(vec![vec![1, 2], vec![2, 4]]).unwrap_err(),
            Error::Singular
        );
        assert_eq!(
            SimplicialCone::from_rows(vec![vec![0, 0], vec![2, 4]]).unwrap_err(),
            Error::Singular
        );
    }

    #[test]
    fn dilation_examples() {
        let c = cone(&[&[2, 1], &[1, 2]]);
        assert_eq!(c.dilation(&v(&[2, 1])).unwrap(), DilationFactor::one());
        assert_eq!(c.dilation(&v(&[1, 1])).unwrap().value(), &q(2, 3));
        let unit = SimplicialCone::new(&IntMatrix::identity(2)).unwrap();
        assert_eq!(unit.dilation(&v(&[1, 1])).unwrap().value(), &q(2, 1));
        match c.dilation(&v(&[1, 0])) {
            Err(Error::NotInCone { index: 1, value }) => assert_eq!(value, q(-1, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn containment_examples() {
        let c = cone(&[&[2, 1], &[1, 2]]);
        let zero = RationalVector::from_integers(&v(&[0, 0]));
        assert!(c.contains(&zero, Containment::Closed));
        assert!(!c.contains(&zero, Containment::Interior));
        let gen = RationalVector::from_integers(&v(&[2, 1]));
        assert!(c.contains(&gen, Containment::Closed));
        assert!(!c.contains(&gen, Containment::Interior));
        assert!(!c.contains(&RationalVector::from_integers(&v(&[1, 0])), Containment::Closed));
        let half = RationalVector::new(vec![q(1, 2), q(1, 2)]);
        assert!(c.contains(&half, Containment::Interior));
        assert_eq!(c.coordinates_rational(&half).coords(), &[q(1, 6), q(1, 6)]);
    }

    #[test]
    fn small_signs_agree_with_exact() {
        let c = cone(&[&[7, 1, 0], &[-2, 3, 1], &[1, -1, 5]]);
        for y in [[1i64, 2, 3], [-5, 0, 2], [100, -3, 7], [0, 0, 0]] {
            let big: Vec<BigInt> = y.iter().map(|&x| x.into()).collect();
            assert_eq!(c.coordinate_signs_small(&y).unwrap(), c.coordinate_signs(&big));
        }
    }

    #[test]
    fn stellar_examples() {
        let c = cone(&[&[2, 1], &[1, 2]]);
        let kids = c.stellar_subdivide(&v(&[1, 1])).unwrap();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].generators().to_rows(), vec![v(&[1, 1]), v(&[1, 2])]);
        assert_eq!(kids[1].generators().to_rows(), vec![v(&[2, 1]), v(&[1, 1])]);
        assert!(kids.iter().all(SimplicialCone::is_unimodular));

        let unit = SimplicialCone::new(&IntMatrix::identity(2)).unwrap();
        let kids = unit.stellar_subdivide(&v(&[1, 1])).unwrap();
        assert_eq!(kids.len(), 2);
        assert!(kids.iter().all(SimplicialCone::is_unimodular));

        let c3 = cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(c3.stellar_subdivide(&v(&[1, 1, 1])).unwrap().len(), 3);
        assert_eq!(c3.stellar_subdivide(&v(&[1, 1, 0])).unwrap().len(), 2);
    }

    #[test]
    fn stellar_errors() {
        let c = cone(&[&[2, 1], &[1, 2]]);
        assert!(matches!(c.stellar_subdivide(&v(&[1, 0])), Err(Error::NotInCone { .. })));
        assert!(matches!(c.stellar_subdivide(&v(&[0, 0])), Err(Error::Precondition(_))));
        assert!(matches!(c.stellar_subdivide(&v(&[2, 1])), Err(Error::Precondition(_))));
        assert!(matches!(c.stellar_subdivide(&v(&[4, 2])), Err(Error::Precondition(_))));
        assert!(matches!(c.stellar_subdivide(&v(&[3, 3])), Err(Error::NotPrimitive { .. })));
    }

    #[test]
    fn hilbert_examples() {
        let unit = SimplicialCone::new(&IntMatrix::identity(3)).unwrap();
        assert_eq!(unit.hilbert_basis(100).unwrap().elements, IntMatrix::identity(3).to_rows());

        let c = cone(&[&[2, 1], &[1, 2]]);
        assert_eq!(
            c.hilbert_basis(100).unwrap().elements,
            vec![v(&[2, 1]), v(&[1, 2]), v(&[1, 1])]
        );

        let c = cone(&[&[3, 1], &[0, 1]]);
        let hb: BTreeSet<_> = c.hilbert_basis(100).unwrap().elements.into_iter().collect();
        let want: BTreeSet<_> = [v(&[3, 1]), v(&[0, 1]), v(&[1, 1]), v(&[2, 1])].into_iter().collect();
        assert_eq!(hb, want);

        assert!(matches!(c.hilbert_basis(2), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn dilation_factor_strings() {
        let d: DilationFactor = "6/4".parse().unwrap();
        assert_eq!(d.to_string(), "3/2");
        assert_eq!("5".parse::<DilationFactor>().unwrap().to_string(), "5/1");
        assert!("1/0".parse::<DilationFactor>().is_err());
        assert!("-1/2".parse::<DilationFactor>().is_err());
    }
}
