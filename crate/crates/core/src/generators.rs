//! Test cones: seeded random cones and the prime-multiplicity families.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::SimplicialCone;
use crate::error::{Error, Result};
use crate::linalg::{determinant, IntMatrix};
use crate::numtheory::is_prime;

/// Identifier of the pseudo-random generator behind every seeded draw.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Draws allowed before [`random_cone`] gives up.
pub const REJECTION_BUDGET: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConeKind {
    Random,
    PrimeExample,
    Explicit(IntMatrix),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub d: usize,
    pub seed: u64,
    pub max_entry: u64,
    /// Inclusive range the multiplicity must land in.
    pub target_mu_range: Option<(BigInt, BigInt)>,
}

impl ConeSpec {
    pub fn random(d: usize, seed: u64, max_entry: u64) -> Self {
        Self {
            kind: ConeKind::Random,
            d,
            seed,
            max_entry,
            target_mu_range: None,
        }
    }

    pub fn with_mu_range(mut self, lo: impl Into<BigInt>, hi: impl Into<BigInt>) -> Self {
        self.target_mu_range = Some((lo.into(), hi.into()));
        self
    }

    fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Precondition(format!("need d >= 2, got {}", self.d)));
        }
        if self.max_entry < 1 {
            return Err(Error::Precondition("max_entry must be at least 1".into()));
        }
        if self.max_entry > i64::MAX as u64 {
            return Err(Error::Precondition("max_entry too large".into()));
        }
        Ok(())
    }
}

/// `v_1 = (d+1) e_1 + Σ_{j≥2} (d+1−j) e_j`, `v_i = e_i`; multiplicity `d + 1`.
pub fn prime_example(d: usize) -> Result<SimplicialCone> {
    if d < 2 {
        return Err(Error::Precondition(format!("need d >= 2, got {d}")));
    }
    if !is_prime(&BigInt::from(d + 1)) {
        return Err(Error::Precondition(format!("d + 1 = {} is not prime", d + 1)));
    }
    let rows = (0..d).map(|i| {
        (0..d)
            .map(|j| match (i, j) {
                (0, 0) => (d + 1) as i64,
                (0, j) => (d - j) as i64,
                (i, j) => i64::from(i == j),
            })
            .collect::<Vec<_>>()
    });
    SimplicialCone::from_rows(rows)
}

/// `(N, 1), (0, 1)` for a prime `N`.
pub fn two_dim_prime(n: &BigInt) -> Result<SimplicialCone> {
    if !is_prime(n) {
        return Err(Error::Precondition(format!("{n} is not prime")));
    }
    SimplicialCone::from_rows(vec![vec![n.clone(), BigInt::one()], vec![BigInt::zero(), BigInt::one()]])
}

/// True iff every nonzero class of `Z^d / U` has coefficients `z_i` forming
/// exactly `{1, …, d}`, so that some `z_i` is always an odd prime once
/// `d ≥ 3`.
pub fn verify_prime_example_property(c: &SimplicialCone, d: usize) -> bool {
    if c.dimension() != d || c.multiplicity() != &BigInt::from(d + 1) {
        return false;
    }
    let Ok(group) = c.quotient_group() else {
        return false;
    };
    let Ok(points) = group.enumerate_par_points(d as u64 + 1) else {
        return false;
    };
    let m = BigInt::from(d + 1);
    let expected: BTreeSet<u64> = (1..=d as u64).collect();
    let mut classes = 0;
    for e in points.filter(|e| !e.is_zero()) {
        classes += 1;
        let Some(z) = e.scaled_coeffs(&m) else {
            return false;
        };
        let got: Result<BTreeSet<u64>, ()> = z.iter().map(|v| v.to_u64().ok_or(())).collect();
        if got.ok().as_ref() != Some(&expected) || z.len() != d {
            return false;
        }
    }
    classes == d
}

fn draw_matrix(rng: &mut ChaCha8Rng, d: usize, max_entry: i64) -> IntMatrix {
    let entries = (0..d * d)
        .map(|_| BigInt::from(rng.random_range(-max_entry..=max_entry)))
        .collect();
    IntMatrix::new(d, d, entries).expect("d*d entries")
}

/// Seeded random cone: entries uniform in `[−max_entry, max_entry]`,
/// redrawn until nonsingular (and in the target multiplicity range).
pub fn random_cone(spec: &ConeSpec) -> Result<SimplicialCone> {
    random_cone_where(spec, |_| true)
}

/// Like [`random_cone`], additionally rejecting cones failing `accept`.
pub fn random_cone_where(spec: &ConeSpec, accept: impl Fn(&SimplicialCone) -> bool) -> Result<SimplicialCone> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let max = spec.max_entry as i64;
    for _ in 0..REJECTION_BUDGET {
        let m = draw_matrix(&mut rng, spec.d, max);
        if determinant(&m)?.is_zero() {
            continue;
        }
        let cone = SimplicialCone::new(&m)?;
        if let Some((lo, hi)) = &spec.target_mu_range {
            if cone.multiplicity() < lo || cone.multiplicity() > hi {
                continue;
            }
        }
        if accept(&cone) {
            return Ok(cone);
        }
    }
    Err(Error::RejectionBudget(REJECTION_BUDGET))
}

/// Builds the cone a spec describes.
pub fn generate(spec: &ConeSpec) -> Result<SimplicialCone> {
    match &spec.kind {
        ConeKind::Random => random_cone(spec),
        ConeKind::PrimeExample => prime_example(spec.d),
        ConeKind::Explicit(m) => SimplicialCone::new(m),
    }
}
