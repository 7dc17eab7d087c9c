//! Truncated power series in one variable w. Dense, small orders; the
//! C/D/E decomposition needs order 2 plus spare orders for the tail bound.

use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// coeffs[k] is the coefficient of w^k; length = order + 1. Operations never
/// report coefficients beyond the order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S: Scalar> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn new(coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least the constant term");
        Jet { coeffs }
    }

    pub fn constant(c: S, order: usize) -> Self {
        let mut coeffs = vec![c.zero_like(); order + 1];
        coeffs[0] = c;
        Jet { coeffs }
    }

    /// c0 + w, the identity perturbation around c0.
    pub fn variable(c0: S, order: usize) -> Self {
        let one = c0.one_like();
        Self::variable_scaled(c0, one, order)
    }

    /// c0 + scale * w.
    pub fn variable_scaled(c0: S, scale: S, order: usize) -> Self {
        let mut coeffs = vec![c0.zero_like(); order + 1];
        let lin = scale;
        coeffs[0] = c0;
        if order >= 1 {
            coeffs[1] = lin;
        }
        Jet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &S {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    fn check_order(&self, o: &Self) -> Result<()> {
        if self.order() != o.order() {
            return Err(Error::OrderMismatch(self.order(), o.order()));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_order(o)?;
        Ok(Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check_order(o)?;
        Ok(Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_order(o)?;
        let n = self.coeffs.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.coeffs[0].mul(&o.coeffs[k]);
            for i in 1..=k {
                acc = acc.add(&self.coeffs[i].mul(&o.coeffs[k - i]));
            }
            out.push(acc);
        }
        Ok(Jet { coeffs: out })
    }

    pub fn scale(&self, s: &S) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect(),
        }
    }

    pub fn add_scalar(&self, s: &S) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = coeffs[0].add(s);
        Jet { coeffs }
    }

    /// Sum of |coeff_k| magnitudes for k >= from, as log2. Tail bound for
    /// the E-part of the decomposition.
    pub fn tail_log2(&self, from: usize) -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for c in self.coeffs.iter().skip(from) {
            let l = c.log2_abs();
            // log-sum-exp in base 2
            if l > acc {
                acc = l + (1.0 + (acc - l).exp2()).log2();
            } else if l > f64::NEG_INFINITY {
                acc += (1.0 + (l - acc).exp2()).log2();
            }
        }
        acc
    }
}
