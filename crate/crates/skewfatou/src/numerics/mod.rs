//! Arithmetic substrate: arbitrary-precision complex scalars, exact Gaussian
//! rationals, truncated power series (jets) and small exact linear solves.
//!
//! Two scalar paths implement the [`Scalar`] trait: [`BigComplex`] (rounded,
//! explicit precision per value) and [`GaussianRational`] (exact). All higher
//! modules are generic over the path where both make sense.

pub mod complex;
pub mod exact;
pub mod jet;
pub mod linsolve;

pub use complex::BigComplex;
pub use exact::{parse_rational, GaussianRational, Rational};
pub use jet::Jet;
pub use linsolve::exact_solve_linear;

use crate::error::Result;
use serde::Serialize;

/// Precision tag reported by exact scalars.
pub const PREC_EXACT: u32 = u32::MAX;

/// Minimum admissible working precision in bits.
pub const MIN_PRECISION: u32 = 64;

/// Working-precision policy for depth-`n` computations with vertical
/// multiplier modulus `lambda_abs`: one lambda-factor of error growth per
/// step is budgeted both for reaching depth n and for derivative products,
/// hence `ceil(2 n log2 |lambda|) + guard_bits`.
pub fn precision_for_depth(n: u64, lambda_abs: f64, guard_bits: u32) -> u32 {
    assert!(n >= 1, "depth must be >= 1");
    assert!(lambda_abs > 1.0, "|lambda| must exceed 1");
    let bits = (2.0 * n as f64 * lambda_abs.log2()).ceil() as u32;
    (bits + guard_bits).max(MIN_PRECISION)
}

/// Default guard bits for the precision policy.
pub const DEFAULT_GUARD_BITS: u32 = 64;

/// A magnitude carried in log2 form, so quantities far below the f64
/// subnormal range (deep-orbit distances like 2^-1500) stay representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mag {
    /// log2 of the magnitude; NEG_INFINITY encodes exact zero.
    pub log2: f64,
}

impl Mag {
    pub const ZERO: Mag = Mag {
        log2: f64::NEG_INFINITY,
    };

    pub fn from_log2(log2: f64) -> Self {
        Mag { log2 }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Mag::ZERO
        } else {
            Mag { log2: v.abs().log2() }
        }
    }

    pub fn to_f64(self) -> f64 {
        self.log2.exp2()
    }

    pub fn is_zero(self) -> bool {
        self.log2 == f64::NEG_INFINITY
    }
}

impl std::fmt::Display for Mag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "2^{:.3}", self.log2)
        }
    }
}

/// Common scalar interface for the exact and floating paths.
///
/// Values are immutable after construction; every operation allocates its
/// result. On the floating path mixed-precision operands round to the
/// smaller precision.
pub trait Scalar:
    Clone + PartialEq + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// True on the exact path; zero tests and equality are then exact.
    const EXACT: bool;

    fn from_rat(q: &Rational, prec: u32) -> Self;
    /// Complex value from exact rational real and imaginary parts.
    fn from_parts(re: &Rational, im: &Rational, prec: u32) -> Self;
    fn from_i64(v: i64, prec: u32) -> Self;
    fn zero(prec: u32) -> Self;
    fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }
    /// Precision in bits; `PREC_EXACT` on the exact path.
    fn precision(&self) -> u32;

    /// Same value carried at a different working precision; identity on the
    /// exact path. Depth-sensitive algorithms lift their inputs with this
    /// to absorb cancellation losses, then round results back.
    fn with_precision(&self, prec: u32) -> Self;
    /// A one at the same precision as `self`.
    fn one_like(&self) -> Self {
        Self::one(self.precision())
    }
    fn zero_like(&self) -> Self {
        Self::zero(self.precision())
    }

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;

    fn is_zero(&self) -> bool;
    /// log2 |self|, NEG_INFINITY for zero. Lossy (f64) but exponent-exact.
    fn log2_abs(&self) -> f64;
    fn mag(&self) -> Mag {
        Mag::from_log2(self.log2_abs())
    }
    /// Lossy (re, im) view for reports and coarse scans.
    fn to_f64_parts(&self) -> (f64, f64);

    /// Integer power; negative exponents require invertibility.
    fn powi(&self, e: i64) -> Result<Self> {
        let mut base = if e < 0 {
            self.one_like().div(self)?
        } else {
            self.clone()
        };
        let mut k = e.unsigned_abs();
        let mut acc = self.one_like();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        Ok(acc)
    }

    /// Rendering for reports: "p/q" style on the exact path, decimal
    /// elsewhere.
    fn fmt_value(&self) -> String {
        format!("{self}")
    }
}
