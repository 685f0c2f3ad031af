use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Special;
use rug::ops::CompleteRound;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working-precision policy: how many mantissa bits to compute with, and how
/// far automatic escalation may double that width when a matrix that must be
/// positive definite fails to factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub mantissa_bits: u32,
    pub escalation_limit: u32,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            mantissa_bits: 512,
            escalation_limit: 4096,
        }
    }
}

impl PrecisionConfig {
    pub fn new(mantissa_bits: u32, escalation_limit: u32) -> Result<Self> {
        let cfg = PrecisionConfig {
            mantissa_bits,
            escalation_limit,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mantissa_bits < 128 {
            return Err(Error::InvalidPrecision {
                reason: format!(
                    "mantissa_bits = {} is below the minimum of 128",
                    self.mantissa_bits
                ),
            });
        }
        if self.escalation_limit < self.mantissa_bits {
            return Err(Error::InvalidPrecision {
                reason: format!(
                    "escalation_limit = {} is below mantissa_bits = {}",
                    self.escalation_limit, self.mantissa_bits
                ),
            });
        }
        Ok(())
    }
}

/// A real number carried at an explicit binary precision.
///
/// Thin wrapper over an MPFR float. Binary operations produce a result at the
/// wider of the two operand precisions; transcendental functions are correctly
/// rounded at the operand's precision.
#[derive(Clone)]
pub struct Scalar(Float);

impl Scalar {
    pub fn zero(bits: u32) -> Self {
        Scalar(Float::with_val(bits, 0))
    }

    pub fn one(bits: u32) -> Self {
        Scalar(Float::with_val(bits, 1))
    }

    pub fn infinity(bits: u32) -> Self {
        Scalar(Float::with_val(bits, Special::Infinity))
    }

    pub fn from_u64(v: u64, bits: u32) -> Self {
        Scalar(Float::with_val(bits, v))
    }

    pub fn from_i64(v: i64, bits: u32) -> Self {
        Scalar(Float::with_val(bits, v))
    }

    pub fn from_f64(v: f64, bits: u32) -> Self {
        Scalar(Float::with_val(bits, v))
    }

    /// Parses a decimal string (scientific notation accepted) at the given
    /// precision. Rejects anything that does not round to a finite value.
    pub fn parse_decimal(text: &str, bits: u32) -> Result<Self> {
        let incomplete = Float::parse(text).map_err(|_| Error::InvalidDecimal {
            text: text.to_owned(),
        })?;
        let value = Float::with_val(bits, incomplete);
        if !value.is_finite() {
            return Err(Error::InvalidDecimal {
                text: text.to_owned(),
            });
        }
        Ok(Scalar(value))
    }

    /// Exact power of two, useful for tolerance thresholds like 2^(-bits/2).
    pub fn two_pow(exponent: i32, bits: u32) -> Self {
        Scalar(Float::with_val(bits, 1) << exponent)
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    /// Re-rounds the value to a target precision.
    pub fn to_prec(&self, bits: u32) -> Self {
        Scalar(Float::with_val(bits, &self.0))
    }

    pub fn exp(&self) -> Self {
        Scalar(self.0.clone().exp())
    }

    /// Natural logarithm. Caller must ensure the argument is positive.
    pub fn ln(&self) -> Self {
        debug_assert!(self.0.is_sign_positive() && !self.0.is_zero());
        Scalar(self.0.clone().ln())
    }

    /// Square root. Caller must ensure the argument is non-negative.
    pub fn sqrt(&self) -> Self {
        debug_assert!(!self.0.is_sign_negative() || self.0.is_zero());
        Scalar(self.0.clone().sqrt())
    }

    pub fn abs(&self) -> Self {
        Scalar(self.0.clone().abs())
    }

    pub fn recip(&self) -> Self {
        Scalar(self.0.clone().recip())
    }

    pub fn square(&self) -> Self {
        Scalar(self.0.clone().square())
    }

    /// sqrt(self^2 + other^2) without intermediate overflow.
    pub fn hypot(&self, other: &Scalar) -> Self {
        Scalar(self.0.clone().hypot(&other.0))
    }

    /// Simultaneous sine and cosine, used for exponentials at complex
    /// arguments.
    pub fn sin_cos(&self) -> (Self, Self) {
        let (s, c) = self.0.clone().sin_cos(Float::new(self.prec()));
        (Scalar(s), Scalar(c))
    }

    pub fn min(&self, other: &Scalar) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn max(&self, other: &Scalar) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_positive(&self) -> bool {
        self.0.is_sign_positive()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// Deterministic decimal rendering with the given number of significant
    /// digits, in scientific notation.
    pub fn to_decimal_string(&self, significant_digits: usize) -> String {
        format!("{:.*e}", significant_digits.saturating_sub(1), self.0)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.20e}", self.0)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(digits) = f.precision() {
            write!(f, "{:.*e}", digits, self.0)
        } else {
            write!(f, "{:.39e}", self.0)
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

fn join_prec(a: &Scalar, b: &Scalar) -> u32 {
    a.prec().max(b.prec())
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                let prec = join_prec(self, rhs);
                Scalar((&self.0).$method(&rhs.0).complete(prec))
            }
        }

        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }

        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }

        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);
scalar_binop!(Div, div);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar((-&self.0).complete(self.prec()))
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}
