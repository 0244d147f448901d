//! Numeric backends for the simulator.
//!
//! Every formula the simulator and the constructions evaluate is a rational
//! function of masses, positions and velocities, so [`BigRational`] gives a
//! lossless backend in which event ordering is decided exactly. `f64` is
//! offered as a fast approximate backend.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Which arithmetic a simulation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Exact,
    Float,
}

impl fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithmeticMode::Exact => f.write_str("exact"),
            ArithmeticMode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for ArithmeticMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "rational" | "exactrational" => Ok(ArithmeticMode::Exact),
            "float" | "f64" | "float64" => Ok(ArithmeticMode::Float),
            other => Err(format!("unknown arithmetic mode `{other}` (expected exact|float)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseScalarError(pub String);

impl fmt::Display for ParseScalarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseScalarError {}

/// A field in which the simulator can compute.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ArithmeticMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(v: i64) -> Self;
    /// `num / den`; panics when `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Converts a finite float. Exact for the rational backend.
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn floor(&self) -> Self;
    fn ceil(&self) -> Self;

    /// A "simple" value strictly inside `(lo, hi)`; requires `lo < hi`.
    ///
    /// The rational backend returns the element of least denominator (the
    /// Stern-Brocot choice), which keeps numbers small across inductive
    /// constructions. The float backend returns the midpoint.
    fn simplest_between(lo: &Self, hi: &Self) -> Self;

    /// `self <= other`, with a relative slack of 1e-9 in float mode.
    fn approx_le(&self, other: &Self) -> bool;

    fn parse_str(s: &str) -> Result<Self, ParseScalarError>;

    /// JSON form: `"p/q"` strings for rationals, numbers for floats.
    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self, ParseScalarError> {
        match v {
            Value::String(s) => Self::parse_str(s),
            Value::Number(n) => Self::parse_str(&n.to_string()),
            other => Err(ParseScalarError(format!("expected a number or \"p/q\" string, got {other}"))),
        }
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }

    fn two_pow(k: u32) -> Self {
        Self::from_int(2).powi(k)
    }
}

impl Scalar for BigRational {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Oversized numerators or denominators: scale down first.
            let n = self.numer().to_f64().unwrap_or(f64::INFINITY);
            let d = self.denom().to_f64().unwrap_or(f64::INFINITY);
            n / d
        })
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn ceil(&self) -> Self {
        BigRational::ceil(self)
    }

    fn simplest_between(lo: &Self, hi: &Self) -> Self {
        assert!(lo < hi, "empty interval");
        let zero = <BigRational as Zero>::zero();
        if *hi <= zero {
            -simplest_nonneg(&-hi.clone(), Some(&-lo.clone()))
        } else if *lo < zero {
            zero
        } else {
            simplest_nonneg(lo, Some(hi))
        }
    }

    fn approx_le(&self, other: &Self) -> bool {
        self <= other
    }

    fn parse_str(s: &str) -> Result<Self, ParseScalarError> {
        parse_rational(s)
    }

    fn to_json(&self) -> Value {
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }
}

/// Simplest rational in the open interval `(lo, hi)`, `0 <= lo`, with
/// `hi = None` standing for +infinity.
fn simplest_nonneg(lo: &BigRational, hi: Option<&BigRational>) -> BigRational {
    let fl = lo.floor();
    let next = &fl + <BigRational as One>::one();
    match hi {
        None => next,
        Some(h) if next < *h => next,
        Some(h) => {
            // lo and hi share the integer part fl; recurse on the reciprocal
            // of the fractional parts.
            let y_lo = (h - &fl).recip();
            let y_hi = if *lo == fl {
                None
            } else {
                Some((lo - &fl).recip())
            };
            fl + simplest_nonneg(&y_lo, y_hi.as_ref()).recip()
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational, ParseScalarError> {
    let s = s.trim();
    let err = || ParseScalarError(format!("cannot parse `{s}` as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
        if q.is_zero() {
            return Err(ParseScalarError(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(p, q));
    }
    // Decimal with optional exponent, read exactly.
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&digits).map_err(|_| err())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num::pow(ten, scale as usize);
    } else {
        value /= num::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

impl Scalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn ceil(&self) -> Self {
        f64::ceil(*self)
    }

    fn simplest_between(lo: &Self, hi: &Self) -> Self {
        assert!(lo < hi, "empty interval");
        0.5 * (lo + hi)
    }

    fn approx_le(&self, other: &Self) -> bool {
        let scale = 1.0f64.max(f64::abs(*self)).max(f64::abs(*other));
        *self <= *other + 1e-9 * scale
    }

    fn parse_str(s: &str) -> Result<Self, ParseScalarError> {
        let s = s.trim();
        let value = if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().map_err(|_| ParseScalarError(format!("cannot parse `{s}`")))?;
            let q: f64 = q.trim().parse().map_err(|_| ParseScalarError(format!("cannot parse `{s}`")))?;
            if q == 0.0 {
                return Err(ParseScalarError(format!("zero denominator in `{s}`")));
            }
            p / q
        } else {
            s.parse().map_err(|_| ParseScalarError(format!("cannot parse `{s}` as a float")))?
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(ParseScalarError(format!("`{s}` is not finite")))
        }
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(v: &Value) -> Result<Self, ParseScalarError> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParseScalarError(format!("`{n}` is not a finite float"))),
            Value::String(s) => Self::parse_str(s),
            other => Err(ParseScalarError(format!("expected a number, got {other}"))),
        }
    }
}

/// Converts between backends (through `f64` when leaving exact arithmetic).
pub fn convert<A: Scalar, B: Scalar>(x: &A) -> B {
    match (A::MODE, B::MODE) {
        (ArithmeticMode::Exact, ArithmeticMode::Exact) => {
            B::from_json(&x.to_json()).expect("rational round trip")
        }
        _ => B::from_f64(x.to_f64()).expect("finite value"),
    }
}
