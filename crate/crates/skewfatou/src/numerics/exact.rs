//! Exact scalars: big-integer rationals and Gaussian rationals.

use crate::error::{Error, Result};
use crate::numerics::{Scalar, PREC_EXACT};
use rug::ops::Pow;

/// Exact big-integer fraction; rug keeps gcd(numerator, denominator) = 1 and
/// the denominator positive after every operation.
pub type Rational = rug::Rational;

/// Parse "p/q", an integer, or a decimal string into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Usage(format!("cannot parse rational {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: rug::Integer = n.trim().parse().map_err(|_| bad())?;
        let d: rug::Integer = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(Error::DivisionByZero);
        }
        return Ok(Rational::from((n, d)));
    }
    if let Some((int, frac)) = s.split_once('.') {
        // decimal string, exactly
        let neg = int.starts_with('-');
        let int = int.trim_start_matches(['-', '+']);
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let num: rug::Integer = digits.parse().map_err(|_| bad())?;
        let den = rug::Integer::from(10).pow(frac.len() as u32);
        let q = Rational::from((num, den));
        return Ok(if neg { -q } else { q });
    }
    let n: rug::Integer = s.parse().map_err(|_| bad())?;
    Ok(Rational::from(n))
}

/// Exact complex scalar: a pair of rationals. The degenerate-resonance
/// pipeline only ever needs real rationals, but the imaginary part comes for
/// free and keeps the solver generic.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussianRational {
            re,
            im: Rational::new(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self::real(Rational::from(v))
    }

    pub fn is_real(&self) -> bool {
        self.im == 0
    }

    /// The real part, provided the value is purely real.
    pub fn as_real(&self) -> Option<&Rational> {
        self.is_real().then_some(&self.re)
    }

    pub fn norm_sqr(&self) -> Rational {
        Rational::from(&self.re * &self.re) + Rational::from(&self.im * &self.im)
    }

    pub fn conj(&self) -> Self {
        GaussianRational {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

impl std::fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.im == 0 {
            write!(f, "{}", self.re)
        } else if self.re == 0 {
            write!(f, "{}i", self.im)
        } else if self.im < 0 {
            write!(f, "{}{}i", self.re, self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

fn log2_rational(q: &Rational) -> f64 {
    if *q == 0 {
        return f64::NEG_INFINITY;
    }
    // exponent from bit lengths, mantissa correction via a 64-bit float
    rug::Float::with_val(64, q).abs().log2().to_f64()
}

impl Scalar for GaussianRational {
    const EXACT: bool = true;

    fn from_rat(q: &Rational, _prec: u32) -> Self {
        GaussianRational::real(q.clone())
    }

    fn from_parts(re: &Rational, im: &Rational, _prec: u32) -> Self {
        GaussianRational::new(re.clone(), im.clone())
    }

    fn from_i64(v: i64, _prec: u32) -> Self {
        GaussianRational::from_int(v)
    }

    fn zero(_prec: u32) -> Self {
        GaussianRational::real(Rational::new())
    }

    fn precision(&self) -> u32 {
        PREC_EXACT
    }

    fn with_precision(&self, _prec: u32) -> Self {
        self.clone()
    }

    fn add(&self, o: &Self) -> Self {
        GaussianRational {
            re: Rational::from(&self.re + &o.re),
            im: Rational::from(&self.im + &o.im),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        GaussianRational {
            re: Rational::from(&self.re - &o.re),
            im: Rational::from(&self.im - &o.im),
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let re = Rational::from(&self.re * &o.re) - Rational::from(&self.im * &o.im);
        let im = Rational::from(&self.re * &o.im) + Rational::from(&self.im * &o.re);
        GaussianRational { re, im }
    }

    fn div(&self, o: &Self) -> Result<Self> {
        let d = o.norm_sqr();
        if d == 0 {
            return Err(Error::DivisionByZero);
        }
        let num = self.mul(&o.conj());
        Ok(GaussianRational {
            re: num.re / d.clone(),
            im: num.im / d,
        })
    }

    fn neg(&self) -> Self {
        GaussianRational {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }

    fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        log2_rational(&self.norm_sqr()) / 2.0
    }

    fn to_f64_parts(&self) -> (f64, f64) {
        (
            rug::Float::with_val(64, &self.re).to_f64(),
            rug::Float::with_val(64, &self.im).to_f64(),
        )
    }
}
