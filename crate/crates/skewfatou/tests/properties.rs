//! Property-based invariants: jet arithmetic against direct polynomial
//! evaluation, exactness of the rational path, and agreement between the
//! exact and floating scalar paths.

use proptest::prelude::*;

use skewfatou::dynamics::{parse_poly_expr, Polynomial, SkewProduct};
use skewfatou::numerics::complex::BigComplex;
use skewfatou::numerics::exact::GaussianRational;
use skewfatou::numerics::jet::Jet;
use skewfatou::numerics::{Rational, Scalar};

fn qr(n: i64, d: i64) -> GaussianRational {
    GaussianRational::real(Rational::from((n, d)))
}

fn small_rational() -> impl Strategy<Value = GaussianRational> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| qr(n, d))
}

fn small_poly() -> impl Strategy<Value = Polynomial<GaussianRational>> {
    prop::collection::vec(small_rational(), 1..6).prop_map(Polynomial::new)
}

proptest! {
    /// The constant jet coefficient of p evaluated on a jet equals a plain
    /// evaluation at the jet's base point.
    #[test]
    fn jet_constant_term_matches_direct_evaluation(p in small_poly(), z0 in small_rational()) {
        let jet = Jet::variable(z0.clone(), 3);
        let pj = p.eval_jet(&jet).unwrap();
        let direct = p.eval(&z0);
        prop_assert!(pj.coeff(0).sub(&direct).is_zero());
    }

    /// The linear jet coefficient is the derivative, matching p'.
    #[test]
    fn jet_linear_term_matches_derivative(p in small_poly(), z0 in small_rational()) {
        let jet = Jet::variable(z0.clone(), 3);
        let pj = p.eval_jet(&jet).unwrap();
        let direct = p.derivative().eval(&z0);
        prop_assert!(pj.coeff(1).sub(&direct).is_zero());
    }

    /// Jet multiplication agrees with multiplying the underlying
    /// polynomials before evaluation (truncated product rule).
    #[test]
    fn jet_product_is_truncated_series_product(
        p in small_poly(),
        q in small_poly(),
        z0 in small_rational(),
    ) {
        let jet = Jet::variable(z0.clone(), 4);
        let lhs = p.eval_jet(&jet).unwrap().mul(&q.eval_jet(&jet).unwrap()).unwrap();
        // oracle: coefficient k of (p*q)(z0 + e) via direct convolution of
        // the two full Taylor expansions
        let pe = p.eval_jet(&jet).unwrap();
        let qe = q.eval_jet(&jet).unwrap();
        for k in 0..=4usize {
            let mut acc = GaussianRational::from_int(0);
            for i in 0..=k {
                acc = acc.add(&pe.coeff(i).mul(qe.coeff(k - i)));
            }
            prop_assert!(lhs.coeff(k).sub(&acc).is_zero());
        }
    }

    /// Rational field arithmetic is exact: add/sub and mul/div round-trip.
    #[test]
    fn rational_ops_round_trip(a in small_rational(), b in small_rational()) {
        prop_assert!(a.add(&b).sub(&b).sub(&a).is_zero());
        if !b.is_zero() {
            prop_assert!(a.mul(&b).div(&b).unwrap().sub(&a).is_zero());
        }
    }

    /// Evaluating a skew-product orbit on the exact path and at 256-bit
    /// floating precision agrees to well below the float's rounding scale
    /// over a short orbit.
    #[test]
    fn exact_and_float_orbits_agree(
        z_num in -8i64..=8,
        t_num in -8i64..=8,
        steps in 1usize..=6,
    ) {
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let f = skewfatou::resonance::resonant_family(
            &p, &qr(1, 1), &qr(0, 1), &qr(-641, 4165),
        ).unwrap();
        let fb = f.to_big(256);
        let (mut te, mut ze) = (qr(t_num, 64), qr(z_num, 8));
        let (mut tf, mut zf) = (
            BigComplex::from_rat(te.as_real().unwrap(), 256),
            BigComplex::from_rat(ze.as_real().unwrap(), 256),
        );
        for _ in 0..steps {
            let (te2, ze2) = f.eval_map((&te, &ze));
            te = te2; ze = ze2;
            let (tf2, zf2) = fb.eval_map((&tf, &zf));
            tf = tf2; zf = zf2;
        }
        let zer = BigComplex::from_rat(ze.as_real().unwrap(), 256);
        let scale = zf.log2_abs().max(0.0);
        prop_assert!(zf.sub(&zer).log2_abs() < scale - 180.0,
            "drift {} at scale {}", zf.sub(&zer).log2_abs(), scale);
    }

    /// The chain rule: d/dz of g(t, p(z)) from jets equals
    /// g_z(t, p(z)) * p'(z) computed directly.
    #[test]
    fn jet_chain_rule_matches_product_of_derivatives(
        z0 in small_rational(),
        t0 in small_rational(),
    ) {
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let f: SkewProduct<GaussianRational> = skewfatou::resonance::resonant_family(
            &p, &qr(1, 1), &qr(0, 1), &qr(-641, 4165),
        ).unwrap();
        let inner = p.eval_jet(&Jet::variable(z0.clone(), 2)).unwrap();
        let tj = Jet::constant(t0.clone(), 2);
        let outer = f.eval_g_jet(&tj, &inner).unwrap();
        let expect = f.dg_dz(&t0, &p.eval(&z0)).mul(&p.derivative().eval(&z0));
        prop_assert!(outer.coeff(1).sub(&expect).is_zero());
    }
}
