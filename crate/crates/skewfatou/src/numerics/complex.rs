//! Arbitrary-precision complex scalars over MPFR floats.

use crate::error::{Error, Result};
use crate::numerics::{Rational, Scalar, MIN_PRECISION};
use rug::Float;

/// Complex number with explicit precision. Arithmetic between operands of
/// different precision rounds to the smaller precision; precision is never
/// global state.
#[derive(Debug, Clone)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        BigComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn real(re: Float) -> Self {
        let p = re.prec();
        BigComplex {
            re,
            im: Float::new(p),
        }
    }

    /// Round both parts to `prec` bits.
    pub fn to_prec(&self, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        BigComplex {
            re: Float::with_val(prec, &self.re),
            im: Float::with_val(prec, &self.im),
        }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.precision();
        Float::with_val(p, &self.re * &self.re) + Float::with_val(p, &self.im * &self.im)
    }

    pub fn norm(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    pub fn conj(&self) -> Self {
        BigComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// |self - other| as a float at the smaller operand precision.
    pub fn dist(&self, other: &Self) -> Float {
        self.sub(other).norm()
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        let p = self.precision();
        BigComplex {
            re: Float::with_val(p, &self.re * s),
            im: Float::with_val(p, &self.im * s),
        }
    }
}

impl PartialEq for BigComplex {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re && self.im == other.im
    }
}

impl std::fmt::Display for BigComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

impl Scalar for BigComplex {
    const EXACT: bool = false;

    fn from_rat(q: &Rational, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        BigComplex {
            re: Float::with_val(prec, q),
            im: Float::new(prec),
        }
    }

    fn from_parts(re: &Rational, im: &Rational, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        BigComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    fn from_i64(v: i64, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        BigComplex {
            re: Float::with_val(prec, v),
            im: Float::new(prec),
        }
    }

    fn zero(prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        BigComplex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    fn precision(&self) -> u32 {
        self.re.prec().min(self.im.prec())
    }

    fn with_precision(&self, prec: u32) -> Self {
        self.to_prec(prec.max(MIN_PRECISION))
    }

    fn add(&self, o: &Self) -> Self {
        let p = self.precision().min(o.precision());
        BigComplex {
            re: Float::with_val(p, &self.re + &o.re),
            im: Float::with_val(p, &self.im + &o.im),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        let p = self.precision().min(o.precision());
        BigComplex {
            re: Float::with_val(p, &self.re - &o.re),
            im: Float::with_val(p, &self.im - &o.im),
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let p = self.precision().min(o.precision());
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        BigComplex { re, im }
    }

    fn div(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let p = self.precision().min(o.precision());
        let d = o.norm_sqr();
        let num = self.mul(&o.conj());
        Ok(BigComplex {
            re: Float::with_val(p, &num.re / &d),
            im: Float::with_val(p, &num.im / &d),
        })
    }

    fn neg(&self) -> Self {
        BigComplex {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        // norm_sqr keeps the full exponent range; log2 lands comfortably in f64
        let ns = self.norm_sqr();
        ns.log2().to_f64() / 2.0
    }

    fn to_f64_parts(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    fn fmt_value(&self) -> String {
        let p = self.precision();
        let digits = (p as f64 / 3.32).ceil() as usize + 2;
        if self.im.is_zero() {
            format!("{}", self.re.to_string_radix(10, Some(digits)))
        } else {
            format!(
                "{} + {}i",
                self.re.to_string_radix(10, Some(digits)),
                self.im.to_string_radix(10, Some(digits))
            )
        }
    }
}
