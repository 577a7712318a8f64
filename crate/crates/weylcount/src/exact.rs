//! Exact-arithmetic plumbing: rational thresholds, integer square roots,
//! decimal parsing, and high-precision evaluation of constants of the form
//! `q * pi^(t/2)`.
//!
//! Counting queries carry `lambda^2` as a `BigRational` so that boundary
//! comparisons against integer or dyadic eigenvalues are exact. Conversion
//! to `f64` happens once, at the edge of a computation.

use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rat = BigRational;

/// First 100 decimal places of pi, used for high-precision remainder output.
const PI_DIGITS: &str = "31415926535897932384626433832795028841971693993751\
                         058209749445923078164062862089986280348253421170679";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumberParseError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Shorthand for small rational literals in tests and constants.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int<T: Into<BigInt>>(n: T) -> Rat {
    Rat::from_integer(n.into())
}

/// Exact floor of a rational as a big integer.
pub fn floor_int(x: &Rat) -> BigInt {
    x.floor().to_integer()
}

/// Floor of the square root of a nonnegative big integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(!n.is_negative(), "isqrt of negative value");
    n.sqrt()
}

/// Largest integer `j >= 0` with `j^2 <= t`, or `None` when `t < 0`.
pub fn isqrt_rat(t: &Rat) -> Option<BigInt> {
    if t.is_negative() {
        return None;
    }
    // j^2 <= t for integer j is equivalent to j^2 <= floor(t).
    Some(isqrt(&floor_int(t)))
}

/// Rational-to-f64 conversion that stays accurate when numerator and
/// denominator are individually far outside f64 range.
pub fn rat_to_f64(x: &Rat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let negative = x.is_negative();
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    // Scale so the integer quotient keeps ~128 bits of the mantissa.
    let q = (num << 128u32) / den;
    let f = q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-128);
    if negative {
        -f
    } else {
        f
    }
}

/// Parses an integer (`42`), a decimal (`3.25`, `-0.5`), or a fraction
/// (`13/4`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rat, NumberParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(NumberParseError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n =
            BigInt::from_str(num.trim()).map_err(|_| NumberParseError::Invalid(s.to_string()))?;
        let d =
            BigInt::from_str(den.trim()).map_err(|_| NumberParseError::Invalid(s.to_string()))?;
        if d.is_zero() {
            return Err(NumberParseError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(NumberParseError::Invalid(s.to_string()));
        }
        let negative = int_part.starts_with('-');
        let int = if int_part == "-" || int_part.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(int_part).map_err(|_| NumberParseError::Invalid(s.to_string()))?
        };
        let frac =
            BigInt::from_str(frac_part).map_err(|_| NumberParseError::Invalid(s.to_string()))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let magnitude = int.magnitude() * &scale.to_biguint().unwrap() + frac.to_biguint().unwrap();
        let signed = if negative {
            -BigInt::from(magnitude)
        } else {
            BigInt::from(magnitude)
        };
        return Ok(Rat::new(signed, scale));
    }
    BigInt::from_str(s)
        .map(Rat::from_integer)
        .map_err(|_| NumberParseError::Invalid(s.to_string()))
}

/// Exact rational equal to the given f64 (every finite f64 is rational).
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

fn pi_approx() -> &'static Rat {
    static PI: OnceLock<Rat> = OnceLock::new();
    PI.get_or_init(|| {
        let digits: String = PI_DIGITS.chars().filter(|c| c.is_ascii_digit()).collect();
        let num = BigInt::from_str(&digits).unwrap();
        let den = BigInt::from(10u32).pow((digits.len() - 1) as u32);
        Rat::new(num, den)
    })
}

fn sqrt_pi_approx() -> &'static Rat {
    static SQRT_PI: OnceLock<Rat> = OnceLock::new();
    SQRT_PI.get_or_init(|| sqrt_rat_approx(pi_approx(), 70))
}

/// Floor-square-root approximation of a nonnegative rational, accurate to
/// roughly `10^-digits` relative error.
pub fn sqrt_rat_approx(x: &Rat, digits: u32) -> Rat {
    assert!(!x.is_negative(), "sqrt of negative value");
    if x.is_zero() {
        return Rat::zero();
    }
    // sqrt(p/q) = sqrt(p*q)/q; scale by 10^(2*digits) before the integer root.
    let scale = BigUint::from(10u32).pow(digits);
    let scaled = x.numer().magnitude() * x.denom().magnitude() * &scale * &scale;
    let root = BigInt::from(scaled.sqrt());
    Rat::new(root, x.denom() * BigInt::from(scale))
}

/// High-precision rational approximation of `pi^(t/2)` for integer `t`.
pub fn pi_half_pow(t: i32) -> Rat {
    let whole = t.div_euclid(2);
    let half = t.rem_euclid(2);
    let mut value = pi_approx().pow(whole);
    if half == 1 {
        value *= sqrt_pi_approx();
    }
    value
}

/// An exact constant of the form `coef * pi^(pi_half_exp / 2)`.
///
/// Since pi is transcendental, two such constants are equal as reals iff
/// their fields match, so identities between closed-form constants can be
/// checked exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiPower {
    pub coef: Rat,
    pub pi_half_exp: i32,
}

impl PiPower {
    pub fn rational(coef: Rat) -> Self {
        PiPower {
            coef,
            pi_half_exp: 0,
        }
    }

    pub fn one() -> Self {
        PiPower::rational(Rat::one())
    }

    pub fn mul(&self, other: &PiPower) -> PiPower {
        PiPower {
            coef: &self.coef * &other.coef,
            pi_half_exp: self.pi_half_exp + other.pi_half_exp,
        }
    }

    pub fn div(&self, other: &PiPower) -> PiPower {
        PiPower {
            coef: &self.coef / &other.coef,
            pi_half_exp: self.pi_half_exp - other.pi_half_exp,
        }
    }

    pub fn scale(&self, c: &Rat) -> PiPower {
        PiPower {
            coef: &self.coef * c,
            pi_half_exp: self.pi_half_exp,
        }
    }

    /// Rational approximation carrying the full precision of the embedded
    /// pi constant (about 100 decimal digits).
    pub fn to_rat_approx(&self) -> Rat {
        if self.pi_half_exp == 0 {
            return self.coef.clone();
        }
        &self.coef * pi_half_pow(self.pi_half_exp)
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.to_rat_approx())
    }
}
