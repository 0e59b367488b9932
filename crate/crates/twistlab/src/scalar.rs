//! Scalar arithmetic with two backends: exact big rationals and `f64` with a
//! global comparison tolerance.
//!
//! Every strict inequality against a threshold goes through [`tri_lt`] (or its
//! exact counterpart). In float mode a comparison that lands within [`ETA`] of
//! the threshold is reported as [`Tri::Indeterminate`] instead of being
//! silently resolved; exact comparisons never produce an indeterminate.
//!
//! Weighted thresholds have the shape `c * 2^(a/b)` with rational `c` and
//! rational exponent. In exact mode such comparisons are decided exactly by
//! clearing the exponent denominator: for `x, c >= 0` and `b > 0`,
//! `x < c * 2^(a/b)  <=>  x^b < c^b * 2^a`.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global float comparison tolerance.
pub const ETA: f64 = 1e-12;

/// Rational with machine-word numerator/denominator, used for weight
/// exponents and other small exact quantities.
pub type Rat64 = Ratio<i64>;

/// Golden ratio, 40 significant digits.
pub const PHI_DECIMAL: &str = "1.618033988749894848204586834365638117720";
/// Square root of two, 40 significant digits.
pub const SQRT2_DECIMAL: &str = "1.414213562373095048801688724209698078570";
/// Square root of three, 40 significant digits.
pub const SQRT3_DECIMAL: &str = "1.732050807568877293527446341505872366943";

pub fn phi() -> f64 {
    PHI_DECIMAL.parse().unwrap()
}

pub fn sqrt2() -> f64 {
    SQRT2_DECIMAL.parse().unwrap()
}

pub fn sqrt3() -> f64 {
    SQRT3_DECIMAL.parse().unwrap()
}

/// Rapidly approximable float preset: `23/64 + 2^-50`, exactly representable
/// in an f64. The approximation quality jumps from ~2^-6 at denominator 64 to
/// ~2^-44, so at desk scales the matrix [[x]] behaves singular-like.
pub fn liouville_like() -> f64 {
    23.0 / 64.0 + (2.0f64).powi(-50)
}

/// Three-valued comparison outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    True,
    False,
    Indeterminate,
}

impl Tri {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Tri::True
    }

    pub fn is_false(self) -> bool {
        self == Tri::False
    }

    pub fn is_indeterminate(self) -> bool {
        self == Tri::Indeterminate
    }

    /// Conjunction: False dominates, then Indeterminate.
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::Indeterminate, _) | (_, Tri::Indeterminate) => Tri::Indeterminate,
            _ => Tri::True,
        }
    }

    /// Negation swaps True and False, keeps Indeterminate.
    pub fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Indeterminate => Tri::Indeterminate,
        }
    }
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tri::True => write!(f, "true"),
            Tri::False => write!(f, "false"),
            Tri::Indeterminate => write!(f, "indeterminate"),
        }
    }
}

/// Counts threshold comparisons and how many fell inside the eta band.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CmpCounter {
    pub comparisons: u64,
    pub indeterminate: u64,
}

impl CmpCounter {
    pub fn merge(&mut self, other: &CmpCounter) {
        self.comparisons += other.comparisons;
        self.indeterminate += other.indeterminate;
    }

    pub fn indeterminate_fraction(&self) -> f64 {
        if self.comparisons == 0 {
            0.0
        } else {
            self.indeterminate as f64 / self.comparisons as f64
        }
    }
}

/// Strict `value < threshold` with the eta band surfaced as indeterminate.
pub fn tri_lt(value: f64, threshold: f64, counter: &mut CmpCounter) -> Tri {
    counter.comparisons += 1;
    if (value - threshold).abs() <= ETA {
        counter.indeterminate += 1;
        Tri::Indeterminate
    } else if value < threshold {
        Tri::True
    } else {
        Tri::False
    }
}

/// Non-strict `value <= threshold` with the eta band surfaced as indeterminate.
pub fn tri_le(value: f64, threshold: f64, counter: &mut CmpCounter) -> Tri {
    counter.comparisons += 1;
    if (value - threshold).abs() <= ETA {
        counter.indeterminate += 1;
        Tri::Indeterminate
    } else if value <= threshold {
        Tri::True
    } else {
        Tri::False
    }
}

/// A scalar tagged exact-rational or float.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn from_f64(x: f64) -> Self {
        Scalar::Float(x)
    }

    pub fn exact_from_i64(n: i64, d: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Lift an f64 to its exact rational value (every finite f64 is rational).
    pub fn lift_f64(x: f64) -> Result<BigRational> {
        BigRational::from_float(x).ok_or_else(|| Error::usage(format!("non-finite value {x}")))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Exact value if tagged exact, otherwise the exact lift of the float.
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            Scalar::Exact(r) => Ok(r.clone()),
            Scalar::Float(x) => Self::lift_f64(*x),
        }
    }

    /// Parse a matrix-style entry: `a/b` is exact, a decimal literal is float.
    pub fn parse_entry(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n: BigInt = num
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("bad rational numerator in `{s}`")))?;
            let d: BigInt = den
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("bad rational denominator in `{s}`")))?;
            if d.is_zero() {
                return Err(Error::usage(format!("zero denominator in `{s}`")));
            }
            Ok(Scalar::Exact(BigRational::new(n, d)))
        } else {
            let x: f64 = s
                .parse()
                .map_err(|_| Error::usage(format!("bad numeric entry `{s}`")))?;
            if !x.is_finite() {
                return Err(Error::usage(format!("non-finite entry `{s}`")));
            }
            Ok(Scalar::Float(x))
        }
    }

    /// Parse a threshold-style value exactly: `a/b` or a decimal literal, both
    /// mapped to rationals (finite decimals are rational).
    pub fn parse_exact(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('/') {
            return Self::parse_entry(s);
        }
        parse_decimal_rational(s).map(Scalar::Exact)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(_) => ser.serialize_str(&self.to_string()),
            Scalar::Float(x) => ser.serialize_f64(*x),
        }
    }
}

/// Parse a plain decimal literal (optionally signed, optional fraction part)
/// into an exact rational.
pub fn parse_decimal_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::usage(format!("bad decimal literal `{s}`"));
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(bad());
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || (int_part.is_empty() && frac_part.is_empty())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(numer * sign, denom))
}

/// Round half away from zero.
pub fn round_half_away_f64(x: f64) -> i64 {
    // f64::round already rounds half away from zero
    x.round() as i64
}

/// Round half away from zero for rationals.
pub fn round_half_away_rat(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let ax = x.abs();
    let rounded = (ax + half).floor().to_integer();
    if x.is_negative() {
        -rounded
    } else {
        rounded
    }
}

/// `base^exp` for integer `exp >= 0`.
pub fn big_pow(base: &BigRational, exp: u32) -> BigRational {
    BigRational::new(base.numer().pow(exp), base.denom().pow(exp))
}

/// `2^k` for any integer `k`.
pub fn pow2_rational(k: i64) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(BigInt::one() << (k as usize))
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << ((-k) as usize))
    }
}

fn ratio_parts(e: Rat64) -> (i64, u32) {
    let (n, d) = (*e.numer(), *e.denom());
    debug_assert!(d > 0);
    (n, d as u32)
}

/// Exact strict test `x < c * 2^e` for `x, c >= 0` and rational exponent `e`.
pub fn exact_lt_scaled_pow2(x: &BigRational, c: &BigRational, e: Rat64) -> bool {
    let (a, b) = ratio_parts(e);
    // x < c * 2^(a/b)  <=>  x^b < c^b * 2^a
    let lhs = big_pow(x, b);
    let rhs = big_pow(c, b) * pow2_rational(a);
    lhs < rhs
}

/// Exact nonnegative power value `mag^exp` with rational magnitude and
/// positive rational exponent, ordered without ever materialising the real
/// number.
#[derive(Debug, Clone)]
pub struct ExactPow {
    pub mag: BigRational,
    pub exp: Rat64,
}

impl ExactPow {
    pub fn new(mag: BigRational, exp: Rat64) -> Self {
        debug_assert!(!mag.is_negative());
        debug_assert!(exp.numer() > &0 && exp.denom() > &0);
        ExactPow { mag, exp }
    }

    pub fn zero() -> Self {
        ExactPow {
            mag: BigRational::zero(),
            exp: Rat64::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mag.to_f64().unwrap_or(f64::NAN);
        m.powf(self.exp.to_f64().unwrap_or(f64::NAN))
    }

    /// Compare `self.mag^self.exp` with `other.mag^other.exp` exactly.
    pub fn cmp_exact(&self, other: &ExactPow) -> Ordering {
        cmp_pow_pow(&self.mag, self.exp, &other.mag, other.exp)
    }
}

/// Compare `x^p` with `y^r` exactly for `x, y >= 0` and `p, r > 0`.
pub fn cmp_pow_pow(x: &BigRational, p: Rat64, y: &BigRational, r: Rat64) -> Ordering {
    if x.is_zero() {
        return if y.is_zero() {
            Ordering::Equal
        } else {
            Ordering::Less
        };
    }
    if y.is_zero() {
        return Ordering::Greater;
    }
    let (pn, pd) = ratio_parts(p);
    let (rn, rd) = ratio_parts(r);
    // raise both sides to lcm(pd, rd)
    let l = num::integer::lcm(pd as i64, rd as i64);
    let pe = pn * (l / pd as i64);
    let re = rn * (l / rd as i64);
    debug_assert!(pe > 0 && re > 0);
    big_pow(x, pe as u32).cmp(&big_pow(y, re as u32))
}

/// Exact product of power terms, `prod_i mag_i^exp_i`; used for the badly
/// approximable functional `|q|_alpha * |residual|^(n/(m v_i))`.
#[derive(Debug, Clone)]
pub struct ExactProd {
    pub terms: Vec<ExactPow>,
}

impl ExactProd {
    pub fn new(terms: Vec<ExactPow>) -> Self {
        ExactProd { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().any(|t| t.is_zero())
    }

    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|t| t.to_f64()).product()
    }

    /// Exact comparison of two products by raising both to the lcm of all
    /// exponent denominators.
    pub fn cmp_exact(&self, other: &ExactProd) -> Ordering {
        if self.is_zero() {
            return if other.is_zero() {
                Ordering::Equal
            } else {
                Ordering::Less
            };
        }
        if other.is_zero() {
            return Ordering::Greater;
        }
        let mut l: i64 = 1;
        for t in self.terms.iter().chain(other.terms.iter()) {
            l = num::integer::lcm(l, *t.exp.denom());
        }
        let raise = |p: &ExactProd| -> BigRational {
            let mut acc = BigRational::one();
            for t in &p.terms {
                let e = t.exp.numer() * (l / t.exp.denom());
                debug_assert!(e > 0);
                acc *= big_pow(&t.mag, e as u32);
            }
            acc
        };
        raise(self).cmp(&raise(other))
    }
}

/// Deterministic seed derivation (splitmix64), documented in the README: the
/// seed for task `k` under root seed `s` is `splitmix64(s + k + 1)`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tri_lt_bands() {
        let mut c = CmpCounter::default();
        assert_eq!(tri_lt(0.1, 0.2, &mut c), Tri::True);
        assert_eq!(tri_lt(0.3, 0.2, &mut c), Tri::False);
        assert_eq!(tri_lt(0.2 + 0.4e-12, 0.2, &mut c), Tri::Indeterminate);
        assert_eq!(c.comparisons, 3);
        assert_eq!(c.indeterminate, 1);
    }

    #[test]
    fn round_half_away() {
        assert_eq!(round_half_away_f64(0.5), 1);
        assert_eq!(round_half_away_f64(-0.5), -1);
        assert_eq!(round_half_away_f64(2.4), 2);
        assert_eq!(round_half_away_f64(-2.6), -3);

        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert_eq!(round_half_away_rat(&half), BigInt::from(1));
        assert_eq!(round_half_away_rat(&(-half.clone())), BigInt::from(-1));
        let x = BigRational::new(BigInt::from(7), BigInt::from(3));
        assert_eq!(round_half_away_rat(&x), BigInt::from(2));
    }

    #[test]
    fn parse_entries() {
        assert!(Scalar::parse_entry("1/3").unwrap().is_exact());
        assert!(!Scalar::parse_entry("0.5").unwrap().is_exact());
        assert!(Scalar::parse_entry("1/0").is_err());
        assert!(Scalar::parse_entry("abc").is_err());
        let r = parse_decimal_rational("0.125").unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(1), BigInt::from(8)));
        let neg = parse_decimal_rational("-2.5").unwrap();
        assert_eq!(neg, BigRational::new(BigInt::from(-5), BigInt::from(2)));
    }

    #[test]
    fn exact_threshold_comparison() {
        // 1/3 < (1/10) * 2^(-1/2)?  1/10 * 0.7071 = 0.0707 -> false
        let x = BigRational::new(BigInt::from(1), BigInt::from(3));
        let c = BigRational::new(BigInt::from(1), BigInt::from(10));
        assert!(!exact_lt_scaled_pow2(&x, &c, Rat64::new(-1, 2)));
        // 1/100 < (1/10) * 2^(-1/2) -> true
        let y = BigRational::new(BigInt::from(1), BigInt::from(100));
        assert!(exact_lt_scaled_pow2(&y, &c, Rat64::new(-1, 2)));
    }

    #[test]
    fn exact_pow_ordering() {
        // 0.25^(1/2) = 0.5 vs 0.125^(2/3) = 0.25
        let a = ExactPow::new(
            BigRational::new(BigInt::from(1), BigInt::from(4)),
            Rat64::new(1, 2),
        );
        let b = ExactPow::new(
            BigRational::new(BigInt::from(1), BigInt::from(8)),
            Rat64::new(2, 3),
        );
        assert_eq!(a.cmp_exact(&b), Ordering::Greater);
        assert_eq!(ExactPow::zero().cmp_exact(&a), Ordering::Less);
    }

    #[test]
    fn derive_seed_is_stable() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
