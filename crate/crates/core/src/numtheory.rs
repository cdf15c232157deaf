//! Prime decomposition, the φ potential, the prime-size threshold and the
//! `h_k` recurrence.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::precise::Real;

const TRIAL_LIMIT: u64 = 1_000_000;
const MR_BASES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Prime decomposition `n = Π p_i^α_i`, primes strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pairs: Vec<(BigInt, u32)>,
}

impl Factorization {
    pub fn pairs(&self) -> &[(BigInt, u32)] {
        &self.pairs
    }

    pub fn primes(&self) -> impl DoubleEndedIterator<Item = &BigInt> {
        self.pairs.iter().map(|(p, _)| p)
    }

    pub fn largest_prime(&self) -> Option<&BigInt> {
        self.pairs.last().map(|(p, _)| p)
    }

    /// η(n): number of prime factors counted with multiplicity.
    pub fn eta(&self) -> u64 {
        self.pairs.iter().map(|&(_, a)| u64::from(a)).sum()
    }

    pub fn product(&self) -> BigInt {
        self.pairs
            .iter()
            .fold(BigInt::one(), |acc, (p, a)| acc * p.pow(*a))
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairs.is_empty() {
            return write!(f, "1");
        }
        for (i, (p, a)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if *a == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{a}")?;
            }
        }
        Ok(())
    }
}

fn miller_rabin(n: &BigInt, base: u32) -> bool {
    let one = BigInt::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = BigInt::from(base).modpow(&d, n);
    if x.is_one() || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

/// Deterministic for n < 3.3·10²⁴ (prime bases up to 41); beyond that a
/// strong probable-prime test.
pub fn is_prime(n: &BigInt) -> bool {
    if n < &BigInt::from(2) {
        return false;
    }
    for &b in &MR_BASES {
        let b = BigInt::from(b);
        if n == &b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    MR_BASES.iter().all(|&b| miller_rabin(n, b))
}

pub fn is_prime_u64(n: u64) -> bool {
    is_prime(&BigInt::from(n))
}

/// Brent's variant of Pollard rho; `n` must be odd and composite.
fn pollard_rho(n: &BigInt) -> BigInt {
    let one = BigInt::one();
    let mut c = BigInt::one();
    loop {
        let f = |x: &BigInt| (x * x + &c) % n;
        let mut y = BigInt::from(2);
        let mut r = 1u64;
        let mut q = BigInt::one();
        let mut g = BigInt::one();
        let mut x = y.clone();
        let mut ys = y.clone();
        while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..(128.min(r - k)) {
                    y = f(&y);
                    q = (q * (&x - &y).abs()) % n;
                }
                g = q.gcd(n);
                k += 128;
            }
            r *= 2;
        }
        if &g == n {
            loop {
                ys = f(&ys);
                g = (&x - &ys).abs().gcd(n);
                if g > one {
                    break;
                }
            }
        }
        if &g != n {
            return g;
        }
        c += 1;
    }
}

fn split_into(n: BigInt, out: &mut BTreeMap<BigInt, u32>) {
    if n.is_one() {
        return;
    }
    if is_prime(&n) {
        *out.entry(n).or_default() += 1;
        return;
    }
    let d = pollard_rho(&n);
    let rest = &n / &d;
    split_into(d, out);
    split_into(rest, out);
}

pub fn factorize(n: &BigInt) -> Result<Factorization> {
    if !n.is_positive() {
        return Err(Error::Domain(format!("cannot factorize {n}; need n >= 1")));
    }
    let mut found: BTreeMap<BigInt, u32> = BTreeMap::new();
    let mut rest = n.clone();

    if let Some(mut small) = rest.to_u64() {
        let mut p = 2u64;
        while p <= TRIAL_LIMIT && p.saturating_mul(p) <= small {
            while small % p == 0 {
                small /= p;
                *found.entry(BigInt::from(p)).or_default() += 1;
            }
            p += if p == 2 { 1 } else { 2 };
        }
        rest = BigInt::from(small);
    } else {
        let mut p = 2u64;
        while p <= TRIAL_LIMIT && BigInt::from(p) * p <= rest {
            let bp = BigInt::from(p);
            while (&rest % &bp).is_zero() {
                rest /= &bp;
                *found.entry(bp.clone()).or_default() += 1;
            }
            p += if p == 2 { 1 } else { 2 };
        }
    }
    split_into(rest, &mut found);
    Ok(Factorization {
        pairs: found.into_iter().collect(),
    })
}

/// Largest prime divisor of `n ≥ 2`.
pub fn p_max(n: &BigInt) -> Result<BigInt> {
    if n <= &BigInt::one() {
        return Err(Error::Domain(format!("{n} has no prime divisor")));
    }
    Ok(factorize(n)?
        .largest_prime()
        .cloned()
        .expect("n >= 2 has a prime factor"))
}

/// φ(n) = ld(n) − η(n), kept symbolically as the pair `(n, η(n))`.
///
/// φ(n) = ld(n / 2^η), so every comparison with an integer offset reduces
/// to an integer comparison after clearing powers of two.
#[derive(Clone, Debug)]
pub struct Phi {
    n: BigInt,
    eta: u64,
}

impl Phi {
    pub fn of(n: &BigInt) -> Result<Self> {
        let eta = factorize(n)?.eta();
        Ok(Self { n: n.clone(), eta })
    }

    pub fn n(&self) -> &BigInt {
        &self.n
    }

    pub fn eta(&self) -> u64 {
        self.eta
    }

    /// `n / 2^η`; φ is its base-2 logarithm.
    pub fn ratio(&self) -> BigRational {
        BigRational::new(self.n.clone(), BigInt::one() << self.eta)
    }

    /// φ(a·b) from φ(a) and φ(b).
    pub fn combine(&self, other: &Phi) -> Phi {
        Phi {
            n: &self.n * &other.n,
            eta: self.eta + other.eta,
        }
    }

    /// Exact test of `φ(self) ≤ φ(other) + offset`.
    pub fn le_plus(&self, other: &Phi, offset: i64) -> bool {
        // n_a / 2^η_a ≤ n_b / 2^η_b · 2^offset
        // ⟺ n_a · 2^η_b ≤ n_b · 2^(η_a + offset)
        let left = i128::from(other.eta);
        let right = i128::from(self.eta) + i128::from(offset);
        let common = left.min(right);
        (&self.n << (left - common) as u64) <= (&other.n << (right - common) as u64)
    }

    /// Exact test of `φ(self) ≥ k`.
    pub fn at_least(&self, k: i64) -> bool {
        // n ≥ 2^(η + k)
        let e = self.eta as i128 + k as i128;
        if e <= 0 {
            (&self.n << (-e) as u64) >= BigInt::one()
        } else {
            self.n >= (BigInt::one() << e as u64)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.n == (BigInt::one() << self.eta)
    }

    pub fn to_real(&self) -> Real {
        &Real::from_int(self.n.clone()).ld() - &Real::from_int(self.eta)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_real().to_f64()
    }
}

impl PartialEq for Phi {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Phi {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let lhs = &self.n << other.eta;
        let rhs = &other.n << self.eta;
        Some(lhs.cmp(&rhs))
    }
}

/// The constants that appear in the bounds: τ, ε, ρ, γ, κ.
#[derive(Clone, Debug)]
pub struct BoundConstants {
    pub tau: Real,
    pub epsilon: Real,
    pub rho: Real,
    pub gamma: Real,
    pub kappa: Real,
}

pub fn constants() -> &'static BoundConstants {
    static CONSTANTS: OnceLock<BoundConstants> = OnceLock::new();
    CONSTANTS.get_or_init(|| {
        let tau = Real::from_decimal("1.25506").unwrap();
        let ld_3_2 = Real::from_ratio(3, 2).ld();
        let epsilon = &Real::from_int(5) + &(&Real::from_ratio(3, 2) * &ld_3_2);
        let rho = &Real::from_ratio(1, 2) * &ld_3_2;
        let ld_e = Real::one().exp().ld();
        let gamma = &(&rho * &tau) * &ld_e;
        let kappa = &epsilon - &Real::from_int(5);
        BoundConstants {
            tau,
            epsilon,
            rho,
            gamma,
            kappa,
        }
    })
}

/// τ·d, the logarithm of the prime-size threshold e^(τd).
pub fn threshold_log(d: usize) -> Real {
    constants().tau.mul_int(d)
}

/// Values of |ln p − τd| below this are reported as ties.
pub fn tie_band() -> Real {
    Real::from_decimal("0.00000000000000000001").unwrap()
}

/// Result of comparing `ln(p)` with a real threshold.
#[derive(Clone, Debug)]
pub struct ThresholdCheck {
    pub exceeded: bool,
    /// `ln(p) − threshold`
    pub margin: Real,
    pub near_tie: bool,
}

/// Compares `ln(n) ≥ f_log`.
pub fn compare_log(n: &BigInt, f_log: &Real) -> ThresholdCheck {
    let margin = &Real::from_int(n.clone()).ln() - f_log;
    let near_tie = margin.abs() < tie_band();
    if near_tie {
        log::warn!("ln({n}) is within 1e-20 of the threshold {f_log}; decided at 256-bit precision");
    }
    ThresholdCheck {
        exceeded: !margin.is_negative(),
        margin,
        near_tie,
    }
}

/// True iff `p ≥ e^(τd)`.
pub fn threshold_exceeded(p: &BigInt, d: usize) -> bool {
    compare_log(p, &threshold_log(d)).exceeded
}

/// e^(τd) for display.
pub fn threshold_value(d: usize) -> Real {
    threshold_log(d).exp()
}

/// `h_k` with `h_k = 1` for k ≤ −1 and `h_k = h_{k−1} + … + h_{k−d}` otherwise.
pub fn h_sequence(d: usize, k: i64) -> BigInt {
    assert!(d >= 1, "h_sequence needs d >= 1");
    if k < 0 {
        return BigInt::one();
    }
    let mut window: VecDeque<BigInt> = (0..d).map(|_| BigInt::one()).collect();
    let mut sum = BigInt::from(d);
    for _ in 0..k {
        let oldest = window.pop_front().unwrap();
        window.push_back(sum.clone());
        sum = &sum + &sum - oldest;
    }
    sum
}
