use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::Scalar;

/// Complex number over [`Scalar`], stored as rectangular parts.
///
/// Only the algebra the operator diagnostics need: the weight sequences are
/// complex, while every Gram matrix stays real, so full complex linear algebra
/// never appears — matrices with complex entries are handled through their
/// real and imaginary blocks.
#[derive(Clone, Debug)]
pub struct ComplexScalar {
    re: Scalar,
    im: Scalar,
}

impl ComplexScalar {
    pub fn new(re: Scalar, im: Scalar) -> Self {
        ComplexScalar { re, im }
    }

    pub fn from_real(re: Scalar) -> Self {
        let bits = re.prec();
        ComplexScalar {
            re,
            im: Scalar::zero(bits),
        }
    }

    pub fn zero(bits: u32) -> Self {
        ComplexScalar {
            re: Scalar::zero(bits),
            im: Scalar::zero(bits),
        }
    }

    pub fn one(bits: u32) -> Self {
        ComplexScalar {
            re: Scalar::one(bits),
            im: Scalar::zero(bits),
        }
    }

    pub fn re(&self) -> &Scalar {
        &self.re
    }

    pub fn im(&self) -> &Scalar {
        &self.im
    }

    pub fn conj(&self) -> Self {
        ComplexScalar {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// Modulus |z|, computed overflow-safely.
    pub fn abs(&self) -> Scalar {
        self.re.hypot(&self.im)
    }

    /// |z|^2 = re^2 + im^2.
    pub fn norm_sqr(&self) -> Scalar {
        &self.re.square() + &self.im.square()
    }

    pub fn scale(&self, factor: &Scalar) -> Self {
        ComplexScalar {
            re: &self.re * factor,
            im: &self.im * factor,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }
}

impl fmt::Display for ComplexScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_sign_negative() {
            write!(f, "{} - {}i", self.re, self.im.abs())
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

impl Add<&ComplexScalar> for &ComplexScalar {
    type Output = ComplexScalar;
    fn add(self, rhs: &ComplexScalar) -> ComplexScalar {
        ComplexScalar {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub<&ComplexScalar> for &ComplexScalar {
    type Output = ComplexScalar;
    fn sub(self, rhs: &ComplexScalar) -> ComplexScalar {
        ComplexScalar {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul<&ComplexScalar> for &ComplexScalar {
    type Output = ComplexScalar;
    fn mul(self, rhs: &ComplexScalar) -> ComplexScalar {
        ComplexScalar {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &ComplexScalar {
    type Output = ComplexScalar;
    fn neg(self) -> ComplexScalar {
        ComplexScalar {
            re: -&self.re,
            im: -&self.im,
        }
    }
}
