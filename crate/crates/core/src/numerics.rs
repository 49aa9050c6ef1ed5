//! Scalar fields the rest of the crate is generic over.
//!
//! Every algebraic routine in this crate runs on any [`Scalar`]. Two backends
//! are provided:
//!
//! * [`Exact`], arbitrary-precision rationals. Comparisons are decided exactly,
//!   so strict inequalities such as `w < 1` can be checked without tolerance.
//! * `f64`, binary64 floats. Comparisons take an absolute tolerance.
//!
//! [`Value`] is the dynamically tagged counterpart used at I/O boundaries,
//! where the backend is only known at runtime.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arbitrary-precision rational.
pub type Exact = BigRational;

/// Default absolute tolerance for float comparisons of values in `[0, 1]`.
pub const DEFAULT_FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => f.write_str("exact"),
            Backend::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Backend {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(NumericsError::Parse(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("backend mismatch: {left} vs {right}")]
    BackendMismatch { left: Backend, right: Backend },
    #[error("exact comparisons take no tolerance (got {0})")]
    ToleranceOnExact(f64),
    #[error("tolerance must be finite and nonnegative (got {0})")]
    InvalidTolerance(f64),
    #[error("cannot parse scalar: {0}")]
    Parse(String),
}

/// An ordered field element.
///
/// Implementors are immutable values; all operations produce new values.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const BACKEND: Backend;

    /// `num / den`. Panics if `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_exact(value: &Exact) -> Self;

    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;

    /// Three-way comparison. Float values within `tol` of each other compare
    /// `Equal`; the exact backend requires `tol == 0`.
    fn compare(&self, other: &Self, tol: f64) -> Result<Ordering, NumericsError>;

    /// Text form used in every output file: `p/q` for rationals, a
    /// 17-significant-digit decimal for floats.
    fn to_literal(&self) -> String;

    fn parse_literal(s: &str) -> Result<Self, NumericsError>;

    fn to_json(&self) -> serde_json::Value;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// `self^k` by repeated squaring.
    fn powi(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            k >>= 1;
        }
        acc
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Exact {
    const BACKEND: Backend = Backend::Exact;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_exact(value: &Exact) -> Self {
        value.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn compare(&self, other: &Self, tol: f64) -> Result<Ordering, NumericsError> {
        if tol != 0.0 {
            return Err(NumericsError::ToleranceOnExact(tol));
        }
        Ok(self.cmp(other))
    }

    fn to_literal(&self) -> String {
        self.to_string()
    }

    fn parse_literal(s: &str) -> Result<Self, NumericsError> {
        parse_rational(s)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn from_exact(value: &Exact) -> Self {
        <Exact as Scalar>::to_f64(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn compare(&self, other: &Self, tol: f64) -> Result<Ordering, NumericsError> {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(NumericsError::InvalidTolerance(tol));
        }
        if (self - other).abs() <= tol {
            return Ok(Ordering::Equal);
        }
        self.partial_cmp(other)
            .ok_or_else(|| NumericsError::Parse("NaN is unordered".into()))
    }

    fn to_literal(&self) -> String {
        format!("{self:.16e}")
    }

    fn parse_literal(s: &str) -> Result<Self, NumericsError> {
        let s = s.trim();
        if s.contains('/') {
            return parse_rational(s).map(|q| <Exact as Scalar>::to_f64(&q));
        }
        s.parse::<f64>()
            .map_err(|e| NumericsError::Parse(format!("`{s}`: {e}")))
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// Parses `p/q` or an integer literal.
pub fn parse_rational(s: &str) -> Result<Exact, NumericsError> {
    let s = s.trim();
    let bad = || NumericsError::Parse(format!("`{s}` is not a rational (`p/q` or integer)"));
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(NumericsError::Parse(format!(
            "`{s}` has a zero denominator"
        )));
    }
    Ok(BigRational::new(num, den))
}

/// A scalar whose backend is only known at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(Exact),
    Float(f64),
}

impl Value {
    pub fn backend(&self) -> Backend {
        match self {
            Value::Exact(_) => Backend::Exact,
            Value::Float(_) => Backend::Float,
        }
    }

    /// Parses a command-line literal: `p/q` and integers are exact, anything
    /// else that parses as a decimal is a float.
    pub fn parse(s: &str) -> Result<Self, NumericsError> {
        match parse_rational(s) {
            Ok(q) => Ok(Value::Exact(q)),
            Err(_) => <f64 as Scalar>::parse_literal(s).map(Value::Float),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => <Exact as Scalar>::to_f64(q),
            Value::Float(x) => *x,
        }
    }

    /// Converts into the backend `S`. Floats cannot be promoted to exact.
    pub fn into_scalar<S: Scalar>(&self) -> Result<S, NumericsError> {
        match (self, S::BACKEND) {
            (Value::Exact(q), _) => Ok(S::from_exact(q)),
            (Value::Float(x), Backend::Float) => S::parse_literal(&x.to_string()),
            (Value::Float(_), Backend::Exact) => Err(NumericsError::BackendMismatch {
                left: Backend::Float,
                right: Backend::Exact,
            }),
        }
    }

    pub fn compare(&self, other: &Value, tol: f64) -> Result<Ordering, NumericsError> {
        match (self, other) {
            (Value::Exact(x), Value::Exact(y)) => x.compare(y, tol),
            (Value::Float(x), Value::Float(y)) => x.compare(y, tol),
            _ => Err(NumericsError::BackendMismatch {
                left: self.backend(),
                right: other.backend(),
            }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Relative difference `|x - y| / max(1, |x|, |y|)`.
pub fn relative_difference(x: f64, y: f64) -> f64 {
    (x - y).abs() / 1f64.max(x.abs()).max(y.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Exact {
        parse_rational(s).unwrap()
    }

    #[test]
    fn exact_compare_examples() {
        assert_eq!(q("1/2").compare(&q("1/2"), 0.0), Ok(Ordering::Equal));
        assert_eq!(q("2/3").compare(&q("1/2"), 0.0), Ok(Ordering::Greater));
        assert_eq!(q("1/3").compare(&q("1/2"), 0.0), Ok(Ordering::Less));
    }

    #[test]
    fn float_compare_absorbs_rounding() {
        assert_ne!(0.1 + 0.2, 0.3);
        assert_eq!((0.1 + 0.2).compare(&0.3, 1e-12), Ok(Ordering::Equal));
        assert_eq!(0.4.compare(&0.3, 1e-12), Ok(Ordering::Greater));
    }

    #[test]
    fn exact_rejects_tolerance() {
        assert_eq!(
            q("1/2").compare(&q("1/2"), 1e-12),
            Err(NumericsError::ToleranceOnExact(1e-12))
        );
    }

    #[test]
    fn mixed_backends_are_rejected() {
        let err = Value::Exact(q("1/2"))
            .compare(&Value::Float(0.5), 0.0)
            .unwrap_err();
        assert_eq!(
            err,
            NumericsError::BackendMismatch {
                left: Backend::Exact,
                right: Backend::Float
            }
        );
    }

    #[test]
    fn literal_parsing() {
        assert_eq!(Value::parse("3/6").unwrap(), Value::Exact(q("1/2")));
        assert_eq!(Value::parse("2").unwrap(), Value::Exact(q("2")));
        assert_eq!(Value::parse("0.25").unwrap(), Value::Float(0.25));
        assert_eq!(Value::parse("1e-6").unwrap(), Value::Float(1e-6));
        assert!(Value::parse("1/0").is_err());
        assert!(Value::parse("abc").is_err());
        assert!(Value::Float(0.5).into_scalar::<Exact>().is_err());
        assert_eq!(Value::Exact(q("1/4")).into_scalar::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn literal_forms() {
        assert_eq!(q("2/4").to_literal(), "1/2");
        assert_eq!(0.5f64.to_literal(), "5.0000000000000000e-1");
        let third = 1.0f64 / 3.0;
        assert_eq!(f64::parse_literal(&third.to_literal()).unwrap(), third);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let r = q("2/5");
        assert_eq!(r.powi(0), Exact::one());
        assert_eq!(r.powi(5), q("32/3125"));
        assert_eq!(3.0f64.powi(4), 81.0);
    }
}
