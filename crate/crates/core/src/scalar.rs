//! Scalars: exact rationals (the default) and tolerance-compared floats.
//!
//! Every decision procedure in this crate is generic over [`Scalar`]. With
//! [`Rational`] all comparisons are exact; with [`Float`] every equality and
//! sign test goes through a single process-wide tolerance, see
//! [`set_epsilon`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Arbitrary precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Default comparison tolerance for [`Float`].
pub const DEFAULT_EPSILON: f64 = 1e-9;

static EPSILON_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Current global tolerance used by [`Float`] comparisons.
pub fn epsilon() -> f64 {
    f64::from_bits(EPSILON_BITS.load(AtomicOrdering::Relaxed))
}

/// Replaces the global float tolerance. Affects every [`Float`] comparison
/// made afterwards, in every thread.
pub fn set_epsilon(eps: f64) {
    assert!(eps >= 0.0 && eps.is_finite(), "epsilon must be finite and non-negative");
    EPSILON_BITS.store(eps.to_bits(), AtomicOrdering::Relaxed);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Exact,
    Float,
}

impl ScalarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::Exact => "exact",
            ScalarMode::Float => "float",
        }
    }
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalarMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "exact" => Ok(ScalarMode::Exact),
            "float" => Ok(ScalarMode::Float),
            other => Err(Error::Parse(format!("unknown scalar mode {other:?}"))),
        }
    }
}

/// Ordered field element used for matrix entries and vector coordinates.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ScalarMode;

    fn zero() -> Self;
    fn one() -> Self;

    /// `num / den`. Panics when `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn to_f64(&self) -> f64;

    /// Total order; for floats, values within the tolerance compare equal.
    fn compare(&self, other: &Self) -> Ordering;

    fn approx_eq(&self, other: &Self) -> bool {
        self.compare(other) == Ordering::Equal
    }

    fn is_zero(&self) -> bool {
        self.approx_eq(&Self::zero())
    }

    fn is_nonneg(&self) -> bool {
        self.compare(&Self::zero()) != Ordering::Less
    }

    fn is_nonpos(&self) -> bool {
        self.compare(&Self::zero()) != Ordering::Greater
    }

    fn abs(&self) -> Self {
        if self.is_nonneg() {
            self.clone()
        } else {
            -self.clone()
        }
    }

    fn min_of(&self, other: &Self) -> Self {
        if self.compare(other) == Ordering::Greater {
            other.clone()
        } else {
            self.clone()
        }
    }

    fn max_of(&self, other: &Self) -> Self {
        if self.compare(other) == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// JSON representation used by the file formats.
    fn to_json(&self) -> serde_json::Value;
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::Exact;

    fn zero() -> Self {
        <Rational as Zero>::zero()
    }

    fn one() -> Self {
        <Rational as One>::one()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn compare(&self, other: &Self) -> Ordering {
        // Sign first: avoids the cross multiplication against zero entries.
        let (a, b) = (self.numer().sign(), other.numer().sign());
        if a != b {
            return a.cmp(&b);
        }
        self.cmp(other)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_nonneg(&self) -> bool {
        !Signed::is_negative(self)
    }

    fn is_nonpos(&self) -> bool {
        !Signed::is_positive(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

/// `f64` wrapper whose comparisons honour the global tolerance.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Float(pub f64);

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! float_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Float {
            type Output = Float;
            fn $method(self, rhs: Float) -> Float {
                Float(self.0 $op rhs.0)
            }
        }
    };
}

float_binop!(Add, add, +);
float_binop!(Sub, sub, -);
float_binop!(Mul, mul, *);
float_binop!(Div, div, /);

impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}

impl Scalar for Float {
    const MODE: ScalarMode = ScalarMode::Float;

    fn zero() -> Self {
        Float(0.0)
    }

    fn one() -> Self {
        Float(1.0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Float(num as f64 / den as f64)
    }

    fn from_rational(q: &Rational) -> Self {
        Float(Scalar::to_f64(q))
    }

    fn to_f64(&self) -> f64 {
        self.0
    }

    fn compare(&self, other: &Self) -> Ordering {
        if (self.0 - other.0).abs() <= epsilon() {
            Ordering::Equal
        } else if self.0 < other.0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(self.0)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"-0.25"` or `"1e-3"`
/// into an exact rational. Decimal text is converted exactly.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let text = text.trim();
    let bad = || Error::Parse(format!("invalid rational {text:?}"));
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(text).ok_or_else(bad)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Shorthand for building exact rationals in code and tests.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}
