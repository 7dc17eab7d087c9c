//! Polynomials, skew-products F(t,z) = (mu t, g(t,z)), orbits and the
//! resonant normal-form coefficients.

pub mod critical;
pub mod orbit;
pub mod parse;

pub use critical::{critical_data, CriticalData};
pub use orbit::{orbit, vertical_derivative_product, OrbitRecord};
pub use parse::parse_poly_expr;

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, GaussianRational, Jet, Scalar};

/// Univariate polynomial, coeffs[k] the coefficient of z^k. The leading
/// coefficient is nonzero unless the polynomial is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<S: Scalar> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.len() > 1 && coeffs.last().unwrap().is_zero() {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(S::zero(crate::numerics::MIN_PRECISION));
        }
        Polynomial { coeffs }
    }

    pub fn zero_poly(prec: u32) -> Self {
        Polynomial {
            coeffs: vec![S::zero(prec)],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Option<&S> {
        self.coeffs.get(k)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, z: &S) -> S {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(z).add(c);
        }
        acc
    }

    /// p(a) truncated at the jet order, via Horner on jets.
    pub fn eval_jet(&self, a: &Jet<S>) -> Result<Jet<S>> {
        let mut acc = Jet::constant(self.coeffs.last().unwrap().clone(), a.order());
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(a)?.add_scalar(c);
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Self {
        if self.degree() == 0 {
            return Polynomial::new(vec![self.coeffs[0].zero_like()]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.mul(&S::from_i64(k as i64, c.precision())))
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.derivative();
        }
        p
    }

    /// k-fold iterate value p^k(z).
    pub fn iterate(&self, z: &S, k: usize) -> S {
        let mut v = z.clone();
        for _ in 0..k {
            v = self.eval(&v);
        }
        v
    }

    /// Sum of coefficient magnitudes, for the standard escape bound.
    pub fn sum_abs_coeffs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.log2_abs().exp2()).sum()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(f).collect())
    }
}

impl Polynomial<GaussianRational> {
    pub fn to_big(&self, prec: u32) -> Polynomial<BigComplex> {
        self.map(|c| {
            BigComplex::new(
                rug::Float::with_val(prec, &c.re),
                rug::Float::with_val(prec, &c.im),
            )
        })
    }
}

/// Quadratic-jet coefficients of g at the origin: g = lambda z + a t +
/// gamma z^2 + tau zt + b t^2 + higher order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantForm<S: Scalar> {
    pub lambda: S,
    pub a: S,
    pub gamma: S,
    pub tau: S,
    pub b: S,
}

/// F(t,z) = (mu t, g(t,z)) with g(t,z) = sum c_{i,j} t^i z^j; g_coeffs[i][j]
/// is c_{i,j}. Immutable and shareable between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewProduct<S: Scalar> {
    mu: S,
    g_coeffs: Vec<Vec<S>>,
    is_split: bool,
}

impl<S: Scalar> SkewProduct<S> {
    /// General constructor from bivariate coefficients.
    pub fn new(mu: S, g_coeffs: Vec<Vec<S>>) -> Result<Self> {
        if g_coeffs.is_empty() || g_coeffs[0].is_empty() {
            return Err(Error::Usage("empty coefficient table".into()));
        }
        let mag = mu.log2_abs();
        if mu.is_zero() || mag >= 0.0 {
            return Err(Error::Usage("require 0 < |mu| < 1".into()));
        }
        // split form: no mixed t^i z^j terms with i >= 1 and j >= 1
        let is_split = g_coeffs
            .iter()
            .skip(1)
            .all(|row| row.iter().skip(1).all(|c| c.is_zero()));
        Ok(SkewProduct {
            mu,
            g_coeffs,
            is_split,
        })
    }

    /// Split form g(t,z) = p(z) + q(t) with q(0) = 0.
    pub fn split(mu: S, p: &Polynomial<S>, q: &Polynomial<S>) -> Result<Self> {
        if !q.coeffs()[0].is_zero() {
            return Err(Error::Usage("q must vanish at t = 0".into()));
        }
        let rows = q.degree().max(1) + 1;
        let mut g = vec![Vec::new(); rows];
        g[0] = p.coeffs().to_vec();
        for (i, row) in g.iter_mut().enumerate().skip(1) {
            let c = q
                .coeff(i)
                .cloned()
                .unwrap_or_else(|| p.coeffs()[0].zero_like());
            row.push(c);
        }
        SkewProduct::new(mu, g)
    }

    pub fn mu(&self) -> &S {
        &self.mu
    }

    pub fn is_split(&self) -> bool {
        self.is_split
    }

    /// Rows of g by t-power: g(t, z) = sum_i t^i * (row_i as poly in z).
    pub fn g_rows(&self) -> &[Vec<S>] {
        &self.g_coeffs
    }

    pub fn g_coeff(&self, i: usize, j: usize) -> S {
        self.g_coeffs
            .get(i)
            .and_then(|r| r.get(j))
            .cloned()
            .unwrap_or_else(|| self.mu.zero_like())
    }

    /// The invariant-fiber polynomial p(z) = g(0, z).
    pub fn fiber_poly(&self) -> Polynomial<S> {
        Polynomial::new(self.g_coeffs[0].clone())
    }

    /// q(t) = g(t, 0) - g(0, 0), the pure-t part.
    pub fn q_poly(&self) -> Polynomial<S> {
        let mut coeffs: Vec<S> = self
            .g_coeffs
            .iter()
            .map(|row| row.first().cloned().unwrap_or_else(|| self.mu.zero_like()))
            .collect();
        coeffs[0] = coeffs[0].zero_like();
        Polynomial::new(coeffs)
    }

    /// Vertical multiplier lambda = dg/dz(0,0).
    pub fn lambda(&self) -> S {
        self.g_coeff(0, 1)
    }

    /// a = dg/dt(0,0).
    pub fn a_coeff(&self) -> S {
        self.g_coeff(1, 0)
    }

    /// g(t, z) by Horner in t with polynomial rows in z.
    pub fn eval_g(&self, t: &S, z: &S) -> S {
        let mut acc = Polynomial::new(self.g_coeffs.last().unwrap().clone()).eval(z);
        for row in self.g_coeffs.iter().rev().skip(1) {
            acc = acc.mul(t).add(&Polynomial::new(row.clone()).eval(z));
        }
        acc
    }

    /// g on jets in both slots, truncated at the common order.
    pub fn eval_g_jet(&self, t: &Jet<S>, z: &Jet<S>) -> Result<Jet<S>> {
        let mut acc = Polynomial::new(self.g_coeffs.last().unwrap().clone()).eval_jet(z)?;
        for row in self.g_coeffs.iter().rev().skip(1) {
            acc = acc
                .mul(t)?
                .add(&Polynomial::new(row.clone()).eval_jet(z)?)?;
        }
        Ok(acc)
    }

    /// dg/dz(t, z).
    pub fn dg_dz(&self, t: &S, z: &S) -> S {
        let mut acc = Polynomial::new(self.g_coeffs.last().unwrap().clone())
            .derivative()
            .eval(z);
        for row in self.g_coeffs.iter().rev().skip(1) {
            acc = acc
                .mul(t)
                .add(&Polynomial::new(row.clone()).derivative().eval(z));
        }
        acc
    }

    /// One application of F.
    pub fn eval_map(&self, point: (&S, &S)) -> (S, S) {
        let (t, z) = point;
        (self.mu.mul(t), self.eval_g(t, z))
    }

    /// The five low-order coefficients of g at the origin. Requires
    /// g(0,0) = 0.
    pub fn resonant_form(&self) -> Result<ResonantForm<S>> {
        if !self.g_coeff(0, 0).is_zero() {
            return Err(Error::NotNormalized);
        }
        Ok(ResonantForm {
            lambda: self.g_coeff(0, 1),
            a: self.g_coeff(1, 0),
            gamma: self.g_coeff(0, 2),
            tau: self.g_coeff(1, 1),
            b: self.g_coeff(2, 0),
        })
    }

    /// mu * lambda == 1, the resonance condition. Exact test on the exact
    /// path, 2^-24 tolerance on the floating path (constructed maps carry
    /// mu = 1/lambda to working precision).
    pub fn is_resonant(&self) -> bool {
        let prod = self.mu.mul(&self.lambda());
        let dev = prod.sub(&prod.one_like());
        if S::EXACT {
            dev.is_zero()
        } else {
            dev.log2_abs() < -24.0
        }
    }

    /// Default escape bound: R = max(2, 2 * sum |p coeffs|).
    pub fn default_bailout(&self) -> f64 {
        (2.0 * self.fiber_poly().sum_abs_coeffs()).max(2.0)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<SkewProduct<T>> {
        SkewProduct::new(
            f(&self.mu),
            self.g_coeffs
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
        )
    }

    /// Canonical text form used for checkpoint hashing.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("mu={};", self.mu.fmt_value());
        for (i, row) in self.g_coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    s.push_str(&format!("c[{i}][{j}]={};", c.fmt_value()));
                }
            }
        }
        s
    }
}

impl SkewProduct<GaussianRational> {
    /// Floating copy at the given precision.
    pub fn to_big(&self, prec: u32) -> SkewProduct<BigComplex> {
        self.map_scalars(|c| {
            BigComplex::new(
                rug::Float::with_val(prec, &c.re),
                rug::Float::with_val(prec, &c.im),
            )
        })
        .expect("valid map stays valid under rounding")
    }
}

/// Shared test fixtures: short rational literals and the running example
/// family used throughout the unit tests.
#[cfg(test)]
pub(crate) mod test_maps {
    use super::*;
    use crate::dynamics::parse::parse_poly_expr;
    use crate::numerics::Rational;

    pub fn qr(n: i64, d: i64) -> GaussianRational {
        GaussianRational::real(Rational::from((n, d)))
    }

    /// The example family F(t,z) = (t/8, 2(z+1)^4 - 2 + a t + b t^2).
    pub fn example_family(a: GaussianRational, b: GaussianRational) -> SkewProduct<GaussianRational> {
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let q = Polynomial::new(vec![qr(0, 1), a, b]);
        SkewProduct::split(qr(1, 8), &p, &q).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_maps::{example_family, qr};
    use super::*;
    use crate::numerics::parse_rational;

    #[test]
    fn eval_map_example_family() {
        let b = GaussianRational::real(parse_rational("-641/4165").unwrap());
        let f = example_family(qr(1, 1), b.clone());
        // (0, -1) -> (0, -2)
        let (t, z) = f.eval_map((&qr(0, 1), &qr(-1, 1)));
        assert!(t.is_zero());
        assert_eq!(z, qr(-2, 1));
        // (0, -2) -> (0, 0)
        let (_, z) = f.eval_map((&qr(0, 1), &qr(-2, 1)));
        assert!(z.is_zero());
        // (8, 0) -> (1, 8 + 64 b)
        let (t, z) = f.eval_map((&qr(8, 1), &qr(0, 1)));
        assert_eq!(t, qr(1, 1));
        assert_eq!(z, qr(8, 1).add(&qr(64, 1).mul(&b)));
    }

    #[test]
    fn resonant_form_example_family() {
        let b = qr(-3, 7);
        let f = example_family(qr(1, 1), b.clone());
        let rf = f.resonant_form().unwrap();
        assert_eq!(rf.lambda, qr(8, 1));
        assert_eq!(rf.a, qr(1, 1));
        assert_eq!(rf.gamma, qr(12, 1));
        assert!(rf.tau.is_zero());
        assert_eq!(rf.b, b);
        assert!(f.is_resonant());
        assert!(f.is_split());
    }

    #[test]
    fn resonant_form_linear_and_mixed() {
        // g = lambda z + a t
        let f = SkewProduct::new(qr(1, 2), vec![vec![qr(0, 1), qr(2, 1)], vec![qr(1, 1)]]).unwrap();
        let rf = f.resonant_form().unwrap();
        assert!(rf.gamma.is_zero() && rf.tau.is_zero() && rf.b.is_zero());
        assert!(f.is_resonant());
        // c_{1,1} = 5 shows up as tau
        let f = SkewProduct::new(
            qr(1, 2),
            vec![vec![qr(0, 1), qr(2, 1)], vec![qr(0, 1), qr(5, 1)]],
        )
        .unwrap();
        assert_eq!(f.resonant_form().unwrap().tau, qr(5, 1));
        assert!(!f.is_split());
    }

    #[test]
    fn not_normalized_rejected() {
        let f = SkewProduct::new(qr(1, 2), vec![vec![qr(1, 1), qr(2, 1)], vec![qr(1, 1)]]).unwrap();
        assert!(matches!(f.resonant_form(), Err(Error::NotNormalized)));
    }

    #[test]
    fn jet_compose_flat_critical_point() {
        // p(z) = 2(z+1)^4 - 2 around z = -1: constant -2, zero linear and
        // quadratic terms
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let jet = Jet::variable(qr(-1, 1), 2);
        let out = p.eval_jet(&jet).unwrap();
        assert_eq!(out.coeff(0), &qr(-2, 1));
        assert!(out.coeff(1).is_zero());
        assert!(out.coeff(2).is_zero());
    }
}
