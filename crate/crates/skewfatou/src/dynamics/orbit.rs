//! Orbit computation with running vertical-derivative products and distance
//! tracking.

use crate::dynamics::SkewProduct;
use crate::numerics::{Mag, Scalar};

/// A recorded orbit. points[j+1] = F(points[j]) to working precision;
/// vertical_products[j] = prod_{i<j} dg/dz(points[i]) (so index 0 holds the
/// empty product 1).
#[derive(Debug, Clone)]
pub struct OrbitRecord<S: Scalar> {
    pub points: Vec<(S, S)>,
    pub vertical_products: Vec<S>,
    pub distances_to_x0: Vec<Mag>,
    pub distances_to_fixed: Vec<Mag>,
    /// Step index at which |z| exceeded the bailout, if the orbit escaped.
    pub escaped: Option<usize>,
}

/// Reference points for the distance tracks.
#[derive(Debug, Clone)]
pub struct OrbitMarks<S: Scalar> {
    pub x0: S,
    pub fixed_point: S,
}

/// Iterate `steps` applications of F from `start`, recording derived
/// sequences. The orbit truncates with the Escaped flag when |z| exceeds
/// `bailout`.
pub fn orbit<S: Scalar>(
    f: &SkewProduct<S>,
    start: (S, S),
    steps: usize,
    bailout: f64,
    marks: Option<&OrbitMarks<S>>,
) -> OrbitRecord<S> {
    let log2_bailout = bailout.log2();
    let mut points = Vec::with_capacity(steps + 1);
    let mut vertical_products = Vec::with_capacity(steps + 1);
    let mut distances_to_x0 = Vec::new();
    let mut distances_to_fixed = Vec::new();
    let mut escaped = None;

    let mut t = start.0.clone();
    let mut z = start.1.clone();
    let mut prod = start.0.one_like();

    for j in 0..=steps {
        points.push((t.clone(), z.clone()));
        vertical_products.push(prod.clone());
        if let Some(m) = marks {
            distances_to_x0.push(Mag::from_log2(z.sub(&m.x0).log2_abs()));
            distances_to_fixed.push(Mag::from_log2(z.sub(&m.fixed_point).log2_abs()));
        }
        if z.log2_abs() > log2_bailout {
            escaped = Some(j);
            break;
        }
        if j == steps {
            break;
        }
        prod = prod.mul(&f.dg_dz(&t, &z));
        let (tn, zn) = f.eval_map((&t, &z));
        t = tn;
        z = zn;
    }

    OrbitRecord {
        points,
        vertical_products,
        distances_to_x0,
        distances_to_fixed,
        escaped,
    }
}

/// prod_{i in [from, to)} dg/dz at orbit point i. For split-form maps this
/// is the product of p'(z_i), the vertical derivative of the (to-from)-step
/// map along the orbit.
pub fn vertical_derivative_product<S: Scalar>(
    f: &SkewProduct<S>,
    record: &OrbitRecord<S>,
    from: usize,
    to: usize,
) -> S {
    assert!(from <= to && to < record.points.len() + 1);
    let mut acc = record.points[0].0.one_like();
    for i in from..to {
        let (t, z) = &record.points[i];
        acc = acc.mul(&f.dg_dz(t, z));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::parse::parse_poly_expr;
    use crate::dynamics::Polynomial;
    use crate::numerics::{GaussianRational, Rational};

    fn q(n: i64, d: i64) -> GaussianRational {
        GaussianRational::real(Rational::from((n, d)))
    }

    fn example() -> SkewProduct<GaussianRational> {
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let qp = Polynomial::new(vec![q(0, 1), q(1, 1), q(-641, 4165)]);
        SkewProduct::split(q(1, 8), &p, &qp).unwrap()
    }

    #[test]
    fn fixed_point_orbit_is_constant() {
        let f = example();
        let rec = orbit(&f, (q(0, 1), q(0, 1)), 5, f.default_bailout(), None);
        assert!(rec.escaped.is_none());
        for (t, z) in &rec.points {
            assert!(t.is_zero() && z.is_zero());
        }
    }

    #[test]
    fn critical_orbit_lands_on_zero() {
        let f = example();
        let rec = orbit(&f, (q(0, 1), q(-1, 1)), 3, f.default_bailout(), None);
        let zs: Vec<_> = rec.points.iter().map(|(_, z)| z.clone()).collect();
        assert_eq!(zs, vec![q(-1, 1), q(-2, 1), q(0, 1), q(0, 1)]);
    }

    #[test]
    fn far_start_escapes() {
        let f = example();
        let rec = orbit(&f, (q(0, 1), q(1_000_000, 1)), 2, f.default_bailout(), None);
        assert_eq!(rec.escaped, Some(0));
        assert_eq!(rec.points.len(), 1);
    }

    #[test]
    fn vertical_product_at_fixed_point_is_multiplier_power() {
        let f = example();
        let rec = orbit(&f, (q(0, 1), q(0, 1)), 6, f.default_bailout(), None);
        // p'(0) = 8, so the product over j steps is 8^j
        let prod = vertical_derivative_product(&f, &rec, 0, 6);
        assert_eq!(prod, q(8i64.pow(6), 1));
        assert_eq!(rec.vertical_products[6], q(8i64.pow(6), 1));
    }

    #[test]
    fn vertical_product_through_critical_point_vanishes() {
        let f = example();
        let rec = orbit(&f, (q(0, 1), q(-1, 1)), 3, f.default_bailout(), None);
        let prod = vertical_derivative_product(&f, &rec, 0, 2);
        assert!(prod.is_zero());
    }
}
