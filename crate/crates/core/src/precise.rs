//! Fixed-point reals with 256 fractional bits.
//!
//! Used wherever a transcendental quantity (logarithms, `e^x`, real powers)
//! has to be compared against exact data. Every operation truncates at
//! 2⁻²⁵⁶ ≈ 10⁻⁷⁷, far below the 30 significant digits the comparisons need.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: u64 = 256;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Real {
    mantissa: BigInt,
}

fn ln2() -> &'static Real {
    static LN2: OnceLock<Real> = OnceLock::new();
    LN2.get_or_init(|| Real::atanh_series(&Real::from_ratio(1, 3)).mul_int(2))
}

impl Real {
    fn from_mantissa(mantissa: BigInt) -> Self {
        Self { mantissa }
    }

    pub fn zero() -> Self {
        Self::from_mantissa(BigInt::zero())
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::from_mantissa(n.into() << FRAC_BITS)
    }

    pub fn from_ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Self::from_rational(&BigRational::new(num.into(), den.into()))
    }

    pub fn from_rational(q: &BigRational) -> Self {
        Self::from_mantissa((q.numer() << FRAC_BITS).div_floor(q.denom()))
    }

    /// Parses a plain decimal literal such as `1.25506` or `-3`.
    pub fn from_decimal(s: &str) -> Option<Self> {
        let (neg, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
        let denom = BigInt::from(10).pow(frac_part.len() as u32);
        let r = Self::from_rational(&BigRational::new(numer, denom));
        Some(if neg { -r } else { r })
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self::from_mantissa(self.mantissa.abs())
    }

    pub fn mul_int(&self, k: impl Into<BigInt>) -> Self {
        Self::from_mantissa(&self.mantissa * k.into())
    }

    pub fn div(&self, other: &Real) -> Self {
        assert!(!other.mantissa.is_zero(), "division by zero");
        Self::from_mantissa((&self.mantissa << FRAC_BITS).div_floor(&other.mantissa))
    }

    pub fn floor(&self) -> BigInt {
        self.mantissa.div_floor(&(BigInt::one() << FRAC_BITS))
    }

    /// Σ t^(2k+1)/(2k+1); converges fast for |t| ≤ 1/3.
    fn atanh_series(t: &Real) -> Real {
        let t2 = t * t;
        let mut power = t.clone();
        let mut sum = Real::zero();
        let mut k = 1u64;
        while !power.mantissa.is_zero() {
            sum = &sum + &Real::from_mantissa(&power.mantissa / BigInt::from(k));
            power = &power * &t2;
            k += 2;
        }
        sum
    }

    /// Natural logarithm; panics on non-positive input.
    pub fn ln(&self) -> Real {
        assert!(self.mantissa.is_positive(), "logarithm of a non-positive number");
        // self = 2^shift · y with y ∈ [1, 2)
        let shift = self.mantissa.bits() as i64 - 1 - FRAC_BITS as i64;
        let y = if shift >= 0 {
            Real::from_mantissa(&self.mantissa >> shift as u64)
        } else {
            Real::from_mantissa(&self.mantissa << (-shift) as u64)
        };
        let t = (&y - &Real::one()).div(&(&y + &Real::one()));
        &Real::atanh_series(&t).mul_int(2) + &ln2().mul_int(shift)
    }

    pub fn ld(&self) -> Real {
        self.ln().div(ln2())
    }

    pub fn exp(&self) -> Real {
        let n = self.div(ln2()).floor();
        let r = self - &ln2().mul_int(n.clone());
        let mut term = Real::one();
        let mut sum = Real::zero();
        let mut k = 1u64;
        while !term.mantissa.is_zero() {
            sum = &sum + &term;
            term = Real::from_mantissa((&term * &r).mantissa / BigInt::from(k));
            k += 1;
        }
        let n = n.to_i64().expect("exponent out of range");
        if n >= 0 {
            Real::from_mantissa(sum.mantissa << n as u64)
        } else {
            Real::from_mantissa(sum.mantissa >> (-n) as u64)
        }
    }

    /// `self^exponent` for positive `self`.
    pub fn powr(&self, exponent: &Real) -> Real {
        (exponent * &self.ln()).exp()
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 significant bits, then scale
        let bits = self.mantissa.bits() as i64;
        let drop = (bits - 64).max(0);
        let top = (&self.mantissa >> drop as u64).to_f64().unwrap_or(f64::NAN);
        top * 2f64.powi((drop - FRAC_BITS as i64) as i32)
    }

    /// Decimal rendering truncated to `digits` places after the point.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scaled = (self.mantissa.abs() * BigInt::from(10).pow(digits as u32)) >> FRAC_BITS;
        let s = scaled.to_string();
        let s = if s.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
        } else {
            s
        };
        let (int, frac) = s.split_at(s.len() - digits);
        let sign = if self.mantissa.is_negative() { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }

    /// Ordering with a guard band: values closer than `band` compare equal.
    pub fn cmp_with_band(&self, other: &Real, band: &Real) -> Ordering {
        let diff = self - other;
        if &diff.abs() <= band {
            Ordering::Equal
        } else {
            diff.mantissa.sign().cmp_zero()
        }
    }
}

trait SignOrdering {
    fn cmp_zero(self) -> Ordering;
}

impl SignOrdering for num_bigint::Sign {
    fn cmp_zero(self) -> Ordering {
        match self {
            num_bigint::Sign::Minus => Ordering::Less,
            num_bigint::Sign::NoSign => Ordering::Equal,
            num_bigint::Sign::Plus => Ordering::Greater,
        }
    }
}

impl Add for &Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        Real::from_mantissa(&self.mantissa + &rhs.mantissa)
    }
}

impl Sub for &Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        Real::from_mantissa(&self.mantissa - &rhs.mantissa)
    }
}

impl Mul for &Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        Real::from_mantissa((&self.mantissa * &rhs.mantissa) >> FRAC_BITS)
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::from_mantissa(-self.mantissa)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(30))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(f.precision().unwrap_or(30)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Real, b: &Real) -> bool {
        (a - b).abs() < Real::from_decimal("0.000000000000000000000000000000000001").unwrap()
    }

    #[test]
    fn known_constants() {
        assert_eq!(ln2().to_decimal(30), "0.693147180559945309417232121458");
        let e = Real::one().exp();
        assert_eq!(e.to_decimal(30), "2.718281828459045235360287471352");
        assert_eq!(Real::from_int(10).ln().to_decimal(30), "2.302585092994045684017991454684");
    }

    #[test]
    fn ln_exp_inverse() {
        for x in ["0.001", "0.5", "1", "3.75", "1234567.89"] {
            let r = Real::from_decimal(x).unwrap();
            assert!(close(&r.ln().exp(), &r), "{x}");
        }
        let neg = Real::from_decimal("-7.25").unwrap();
        assert!(close(&neg.exp().ln(), &neg));
    }

    #[test]
    fn ld_of_powers_of_two() {
        assert!(close(&Real::from_int(1024).ld(), &Real::from_int(10)));
        assert!(close(&Real::from_ratio(1, 8).ld(), &Real::from_int(-3)));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Real::from_ratio(-1, 4).to_decimal(3), "-0.250");
        assert_eq!(Real::from_int(42).to_decimal(0), "42");
        assert!((Real::from_ratio(1, 3).to_f64() - 1.0 / 3.0).abs() < 1e-16);
        assert!((Real::from_int(3).powr(&Real::from_int(40)).to_f64() / 3f64.powi(40) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn guard_band() {
        let a = Real::from_int(1);
        let b = &a + &Real::from_decimal("0.0000000000000000000001").unwrap();
        let band = Real::from_decimal("0.00000000000000000001").unwrap();
        assert_eq!(a.cmp_with_band(&b, &band), Ordering::Equal);
        assert_eq!(a.cmp_with_band(&Real::from_int(2), &band), Ordering::Less);
    }
}
