use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{float::FloatCore, One, Signed, ToPrimitive, Zero};
use regex::Regex;

use crate::error::{Error, Result};

/// A real number held as an exact fraction `num/den`.
///
/// Irrational inputs are truncated decimal expansions; `digits` records the
/// number of decimals kept (`None` for values that are exact).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HpReal {
    num: BigInt,
    den: BigInt,
    digits: Option<u32>,
}

pub const DEFAULT_DIGITS: u32 = 50;

fn pow10(d: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), d as usize)
}

/// `a/b` as `f64` for arbitrarily large operands.
pub(crate) fn ratio_f64(a: &BigInt, b: &BigInt) -> f64 {
    let shift = b.bits().saturating_sub(960);
    let (a, b) = if shift > 0 {
        (a >> shift, b >> shift)
    } else {
        (a.clone(), b.clone())
    };
    a.to_f64().unwrap_or(f64::NAN) / b.to_f64().unwrap_or(f64::NAN)
}

impl HpReal {
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_parts(BigInt::from(num), BigInt::from(den), None)
    }

    fn from_parts(num: BigInt, den: BigInt, digits: Option<u32>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let g = num.gcd(&den);
        let g = if g.is_zero() { BigInt::one() } else { g };
        HpReal {
            num: num / &g,
            den: den / &g,
            digits,
        }
    }

    /// The exact binary value of `x`.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        let (mant, exp, sign) = x.integer_decode();
        let mut num = BigInt::from(mant) * BigInt::from(sign);
        let mut den = BigInt::one();
        if exp >= 0 {
            num <<= exp as usize;
        } else {
            den <<= (-exp) as usize;
        }
        Self::from_parts(num, den, None)
    }

    /// `(√radicand + offset) / divisor`, truncated to `digits` decimals.
    pub fn sqrt_expr(radicand: u64, offset: i64, divisor: u64, digits: u32) -> Self {
        let scale = pow10(digits);
        let root = (BigInt::from(radicand) * &scale * &scale).sqrt();
        let num = root + BigInt::from(offset) * &scale;
        let den = scale * BigInt::from(divisor);
        let exact_square = (radicand as f64).sqrt().fract() == 0.0;
        Self::from_parts(num, den, if exact_square { None } else { Some(digits) })
    }

    /// Accepts `a/b`, decimals, `golden`, `sqrt(N)`, `sqrt(N)-K`, `(sqrt(N)-K)/M`
    /// and the shorthand `sqrt2-1`.
    pub fn parse(s: &str, digits: u32) -> Result<Self> {
        static RATIO: OnceLock<Regex> = OnceLock::new();
        static DECIMAL: OnceLock<Regex> = OnceLock::new();
        static SQRT: OnceLock<Regex> = OnceLock::new();
        let ratio = RATIO.get_or_init(|| Regex::new(r"^(-?\d+)\s*/\s*(\d+)$").unwrap());
        let decimal = DECIMAL.get_or_init(|| Regex::new(r"^(-?)(\d*)(?:\.(\d*))?$").unwrap());
        let sqrt = SQRT.get_or_init(|| {
            Regex::new(r"^\(?\s*sqrt\(?(\d+)\)?\s*(?:([+-])\s*(\d+))?\s*\)?\s*(?:/\s*(\d+))?$").unwrap()
        });
        let t = s.trim().to_ascii_lowercase();
        let bad = || Error::Parameter(format!("cannot parse real number {s:?}"));
        if t == "golden" || t == "phi" {
            return Ok(Self::sqrt_expr(5, -1, 2, digits));
        }
        if let Some(c) = ratio.captures(&t) {
            let num: BigInt = c[1].parse().map_err(|_| bad())?;
            let den: BigInt = c[2].parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            return Ok(Self::from_parts(num, den, None));
        }
        if let Some(c) = decimal.captures(&t) {
            let int_part = c.get(2).map_or("", |m| m.as_str());
            let frac_part = c.get(3).map_or("", |m| m.as_str());
            if int_part.is_empty() && frac_part.is_empty() {
                return Err(bad());
            }
            let digits_str = format!("{int_part}{frac_part}");
            let mut num: BigInt = if digits_str.is_empty() {
                BigInt::zero()
            } else {
                digits_str.parse().map_err(|_| bad())?
            };
            if &c[1] == "-" {
                num = -num;
            }
            return Ok(Self::from_parts(num, pow10(frac_part.len() as u32), None));
        }
        if let Some(c) = sqrt.captures(&t) {
            let radicand: u64 = c[1].parse().map_err(|_| bad())?;
            let offset: i64 = match (c.get(2), c.get(3)) {
                (Some(sign), Some(k)) => {
                    let k: i64 = k.as_str().parse().map_err(|_| bad())?;
                    if sign.as_str() == "-" {
                        -k
                    } else {
                        k
                    }
                }
                _ => 0,
            };
            let divisor: u64 = match c.get(4) {
                Some(m) => m.as_str().parse().map_err(|_| bad())?,
                None => 1,
            };
            if divisor == 0 {
                return Err(bad());
            }
            return Ok(Self::sqrt_expr(radicand, offset, divisor, digits));
        }
        Err(bad())
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn digits(&self) -> Option<u32> {
        self.digits
    }

    pub fn is_exact(&self) -> bool {
        self.digits.is_none()
    }

    pub fn to_f64(&self) -> f64 {
        ratio_f64(&self.num, &self.den)
    }

    /// Fractional part as a new value in `[0, 1)`.
    pub fn frac(&self) -> HpReal {
        HpReal {
            num: self.num.mod_floor(&self.den),
            den: self.den.clone(),
            digits: self.digits,
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> HpReal {
        Self::from_parts(&self.num * k, self.den.clone(), self.digits)
    }

    /// `(k·self − target) mod 1` as an exact pair `(residue, modulus)`.
    fn residue(&self, k: &BigInt, target: Option<&HpReal>) -> (BigInt, BigInt) {
        match target {
            None => ((k * &self.num).mod_floor(&self.den), self.den.clone()),
            Some(t) => {
                let m = &self.den * &t.den;
                let r = (k * &self.num * &t.den - &t.num * &self.den).mod_floor(&m);
                (r, m)
            }
        }
    }

    /// Signed distance of `k·self − target` to the nearest integer, in `(-1/2, 1/2]`.
    pub fn signed_turn(&self, k: &BigInt, target: Option<&HpReal>) -> f64 {
        let (r, m) = self.residue(k, target);
        let twice: BigInt = &r * 2;
        if twice > m {
            -ratio_f64(&(&m - &r), &m)
        } else {
            ratio_f64(&r, &m)
        }
    }

    /// `|e^{2πi k·self} − e^{2πi target}|`, with `target = 0` when absent.
    pub fn chord(&self, k: &BigInt, target: Option<&HpReal>) -> f64 {
        2.0 * (PI * self.signed_turn(k, target).abs()).sin()
    }

    /// `|e^{2πi k·self} + 1|`.
    pub fn chord_to_minus_one(&self, k: &BigInt) -> f64 {
        let t = self.signed_turn(k, None).abs();
        2.0 * (PI * (0.5 - t)).sin()
    }

    /// Fraction of a turn as a 128-bit fixed-point number, for fast scans.
    pub(crate) fn fixed_turn(&self) -> u128 {
        let r = self.num.mod_floor(&self.den);
        let scaled: BigInt = (r << 128usize) / &self.den;
        let (_, digits) = scaled.to_u64_digits();
        let lo = digits.first().copied().unwrap_or(0) as u128;
        let hi = digits.get(1).copied().unwrap_or(0) as u128;
        debug_assert!(scaled.sign() != Sign::Minus);
        lo | (hi << 64)
    }
}

impl fmt::Display for HpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.digits {
            None => write!(f, "{}/{}", self.num, self.den),
            Some(d) => write!(f, "{:.*} ({d} digits)", 17, self.to_f64()),
        }
    }
}

/// `|e^{2πi t} − 1|` for a 128-bit fixed-point turn.
pub(crate) fn fixed_chord(t: u128) -> f64 {
    let dist = t.min(t.wrapping_neg());
    2.0 * (PI * (dist as f64 / 2f64.powi(128))).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(HpReal::parse("1/3", 50).unwrap(), HpReal::ratio(1, 3));
        assert_eq!(HpReal::parse("0.25", 50).unwrap(), HpReal::ratio(1, 4));
        assert_eq!(HpReal::parse("-2/4", 50).unwrap(), HpReal::ratio(-1, 2));
        let s = HpReal::parse("sqrt2-1", 50).unwrap();
        assert!((s.to_f64() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(s.digits(), Some(50));
        let g = HpReal::parse("(sqrt(5)-1)/2", 40).unwrap();
        assert!((g.to_f64() - 0.618_033_988_749_894_8).abs() < 1e-15);
        assert_eq!(HpReal::parse("golden", 40).unwrap(), g);
        assert!(HpReal::parse("sqrt(4)", 10).unwrap().is_exact());
        assert!(HpReal::parse("pi", 10).is_err());
        assert!(HpReal::parse("1/0", 10).is_err());
    }

    #[test]
    fn chords_are_exact_for_rationals() {
        let q = HpReal::ratio(1, 4);
        assert_eq!(q.chord(&BigInt::from(4), None), 0.0);
        assert!((q.chord(&BigInt::from(2), None) - 2.0).abs() < 1e-15);
        assert!(q.chord_to_minus_one(&BigInt::from(2)).abs() < 1e-15);
        let t = HpReal::ratio(1, 3);
        let g = HpReal::ratio(2, 3);
        assert!(t.chord(&BigInt::from(2), Some(&g)).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_matches_exact() {
        let s = HpReal::parse("sqrt2-1", 60).unwrap();
        let f = s.fixed_turn();
        for k in [1u64, 7, 12345, 999_983] {
            let fast = fixed_chord(f.wrapping_mul(k as u128));
            let exact = s.chord(&BigInt::from(k), None);
            assert!((fast - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn from_f64_is_exact() {
        let h = HpReal::from_f64(0.375);
        assert_eq!(h, HpReal::ratio(3, 8));
        assert_eq!(HpReal::from_f64(0.1).to_f64(), 0.1);
    }
}
