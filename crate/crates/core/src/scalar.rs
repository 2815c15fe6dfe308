//! The two interchangeable scalar domains.
//!
//! [`Rational`] is exact: zero tests and ranks are decided without tolerance.
//! [`Complex`] is IEEE double-precision complex; zero tests are relative and
//! ranks are decided by singular values against [`FLOAT_RANK_TOL`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{self, Kernel, Matrix};

pub type Rational = num::BigRational;
pub type Complex = num::complex::Complex64;

/// Singular values below this fraction of the largest one count as zero.
pub const FLOAT_RANK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Exact,
    Float,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Exact => "exact",
            Domain::Float => "float",
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub trait Scalar:
    Clone
    + Debug
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
    const DOMAIN: Domain;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Magnitude as a double, used for norms and reporting.
    fn magnitude(&self) -> f64;
    fn to_complex(&self) -> Complex;
    /// Exact zero in the rational domain; `|x| <= tol * scale` in the float domain.
    fn negligible(&self, tol: f64, scale: f64) -> bool;
    /// Rank and a kernel basis of `m`, using the domain's rank rule.
    fn kernel(m: &Matrix<Self>) -> Kernel<Self>;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;

    fn is_exact_zero(&self) -> bool {
        *self == Self::zero()
    }
}

impl Scalar for Rational {
    const DOMAIN: Domain = Domain::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn magnitude(&self) -> f64 {
        num::ToPrimitive::to_f64(&self.abs()).unwrap_or(f64::INFINITY)
    }
    fn to_complex(&self) -> Complex {
        Complex::new(num::ToPrimitive::to_f64(self).unwrap_or(f64::NAN), 0.0)
    }
    fn negligible(&self, _tol: f64, _scale: f64) -> bool {
        self.is_zero()
    }
    fn kernel(m: &Matrix<Self>) -> Kernel<Self> {
        linalg::rref_kernel(m)
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => s.trim().parse::<Rational>().map_err(|_| {
                Error::InvalidInput(format!("`{s}` is not a fraction"))
            }),
            Value::Number(n) if n.is_i64() => Ok(Self::from_i64(n.as_i64().unwrap_or(0))),
            Value::Array(_) => Err(Error::ScalarDomainMismatch {
                expected: Domain::Exact.to_string(),
                found: Domain::Float.to_string(),
            }),
            other => Err(Error::InvalidInput(format!("not a scalar: {other}"))),
        }
    }
}

impl Scalar for Complex {
    const DOMAIN: Domain = Domain::Float;

    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex::new(1.0, 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Complex::new(n as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(num as f64 / den as f64, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_complex(&self) -> Complex {
        *self
    }
    fn negligible(&self, tol: f64, scale: f64) -> bool {
        self.norm() <= tol * scale
    }
    fn kernel(m: &Matrix<Self>) -> Kernel<Self> {
        linalg::svd_kernel(m, FLOAT_RANK_TOL)
    }
    fn to_json(&self) -> Value {
        json!([self.re, self.im])
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(parts) if parts.len() == 2 => {
                let re = parts[0].as_f64();
                let im = parts[1].as_f64();
                match (re, im) {
                    (Some(re), Some(im)) => Ok(Complex::new(re, im)),
                    _ => Err(Error::InvalidInput(format!("not a complex pair: {v}"))),
                }
            }
            Value::Number(n) => Ok(Complex::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
            Value::String(_) => Err(Error::ScalarDomainMismatch {
                expected: Domain::Float.to_string(),
                found: Domain::Exact.to_string(),
            }),
            other => Err(Error::InvalidInput(format!("not a scalar: {other}"))),
        }
    }
}

/// `f64::max` that propagates NaN, so a diverged computation never reads as a
/// small residual.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Exact rational to double-precision complex.
pub fn rational_to_complex(x: &Rational) -> Complex {
    x.to_complex()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_json_roundtrip() {
        let x = Rational::from_ratio(-7, 3);
        let v = x.to_json();
        assert_eq!(v, Value::String("-7/3".into()));
        assert_eq!(Rational::from_json(&v).unwrap(), x);
    }

    #[test]
    fn complex_json_roundtrip() {
        let z = Complex::new(0.25, -1.5);
        assert_eq!(Complex::from_json(&z.to_json()).unwrap(), z);
    }

    #[test]
    fn cross_domain_json_is_rejected() {
        let err = Rational::from_json(&json!([1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::ScalarDomainMismatch { .. }));
        let err = Complex::from_json(&json!("1/2")).unwrap_err();
        assert!(matches!(err, Error::ScalarDomainMismatch { .. }));
    }

    #[test]
    fn negligible_rules() {
        assert!(!Rational::from_ratio(1, 1_000_000_000).negligible(1e-3, 1.0));
        assert!(Complex::new(1e-12, 0.0).negligible(1e-9, 1.0));
        assert!(!Complex::new(1e-6, 0.0).negligible(1e-9, 1.0));
    }
}
