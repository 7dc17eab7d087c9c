//! Order-2 jet decomposition of the approximants in the resonant case
//! mu = 1/lambda, the closed-form constants of its linear and quadratic
//! coefficients, and the degeneracy condition X1 = 0 solved for b.
//!
//! Writing phi_{n,j}(w) = C_{n,j} w + D_{n,j} w^2 + E_{n,j}(w), the update
//! z -> g(t, z) along the orbit (with t = w/lambda^{n+j}) gives
//!   C_{n,j+1} = lambda C_{n,j} + a / lambda^{n+j}
//!   D_{n,j+1} = lambda D_{n,j} + gamma C_{n,j}^2 + tau C_{n,j}/lambda^{n+j}
//!               + b / lambda^{2n+2j}
//! once the constant term has vanished, i.e. for j >= k where p^k(x0) = 0.
//! The first k steps have no such closed form and are run by full jet
//! composition instead.

use crate::dynamics::critical::CriticalData;
use crate::dynamics::{Polynomial, SkewProduct};
use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use crate::numerics::linsolve::exact_solve_linear;
use crate::numerics::{Mag, Scalar};

/// Jet order used for propagation: coefficients of w^0..w^4, so the tail
/// bound sees two orders beyond the quadratic part.
pub const JET_ORDER: usize = 4;

/// Linear and quadratic coefficients of phi_{n,j} plus a tail bound.
#[derive(Debug, Clone)]
pub struct JetDecomposition<S: Scalar> {
    pub n: u64,
    pub j: u64,
    /// Coefficient of w.
    pub c_coeff: S,
    /// Coefficient of w^2.
    pub d_coeff: S,
    /// log2-magnitude bound for the orders >= 3 kept in the propagated jet.
    pub e_norm: Mag,
}

/// The seven constants of the closed forms
///   C_{n,j} = Y1 lambda^{-n+j} + Ym1 lambda^{-n-j}
///   D_{n,j} = X2 lambda^{-2n+2j} + X1 lambda^{-2n+j} + X0 lambda^{-2n}
///             + Xm1 lambda^{-2n-j} + Xm2 lambda^{-2n-2j}
/// (coefficients of w and w^2 respectively).
#[derive(Debug, Clone)]
pub struct CoefficientSolution<S: Scalar> {
    pub y1: S,
    pub ym1: S,
    pub x2: S,
    pub x1: S,
    pub x0: S,
    pub xm1: S,
    pub xm2: S,
    /// Prediction error at one held-out sample; exactly zero on the
    /// rational path when the ansatz holds.
    pub fit_residual: Mag,
}

fn require_resonant<S: Scalar>(f: &SkewProduct<S>) -> Result<()> {
    if !f.is_resonant() {
        return Err(Error::NotResonant);
    }
    Ok(())
}

/// Full order-JET_ORDER propagation of phi_{n,j} as a jet in w: the ground
/// truth the recursion path is checked against, and the source of the
/// initial condition at j = k.
pub fn brute_force_jet<S: Scalar>(
    f: &SkewProduct<S>,
    x0: &S,
    n: u64,
    j: u64,
) -> Result<Jet<S>> {
    let lam = f.lambda();
    let lam_n = lam.powi(n as i64)?;
    let mut z = Jet::constant(x0.clone(), JET_ORDER);
    for s in 0..j {
        // t at step s is w mu^s / lambda^n, linear in w with no constant part
        let t_lin = f.mu().powi(s as i64)?.div(&lam_n)?;
        let t = Jet::variable_scaled(x0.zero_like(), t_lin, JET_ORDER);
        z = f.eval_g_jet(&t, &z)?;
    }
    Ok(z)
}

/// C and D coefficients of phi_{n,j}: the first k steps by jet composition,
/// the remaining j - k by the closed recursion. The tail bound comes from a
/// full propagation run alongside.
pub fn jet_coefficients<S: Scalar>(
    f: &SkewProduct<S>,
    crit: &CriticalData<S>,
    n: u64,
    j: u64,
) -> Result<JetDecomposition<S>> {
    require_resonant(f)?;
    let k = crit.k as u64;
    if j < k {
        return Err(Error::Usage(format!(
            "recursion regime needs j >= k = {k}, got j = {j}"
        )));
    }
    let form = f.resonant_form()?;
    let lam = &form.lambda;

    let initial = brute_force_jet(f, &crit.x0, n, k)?;
    let mut c = initial.coeff(1).clone();
    let mut d = initial.coeff(2).clone();
    for s in k..j {
        let t_lin = lam.powi(-((n + s) as i64))?;
        let t_quad = lam.powi(-(2 * (n + s) as i64))?;
        let next_c = lam.mul(&c).add(&form.a.mul(&t_lin));
        let next_d = lam
            .mul(&d)
            .add(&form.gamma.mul(&c.mul(&c)))
            .add(&form.tau.mul(&c).mul(&t_lin))
            .add(&form.b.mul(&t_quad));
        c = next_c;
        d = next_d;
    }

    let full = brute_force_jet(f, &crit.x0, n, j)?;
    Ok(JetDecomposition {
        n,
        j,
        c_coeff: c,
        d_coeff: d,
        e_norm: Mag::from_log2(full.tail_log2(3)),
    })
}

/// Default sample set: the smallest well-conditioned Vandermonde past the
/// initial segment, n = k + 6 with j = k .. k+5.
pub fn default_samples<S: Scalar>(crit: &CriticalData<S>) -> Vec<(u64, u64)> {
    let k = crit.k as u64;
    (k..k + 6).map(|j| (k + 6, j)).collect()
}

/// Fit the seven closed-form constants from sampled (n, j) coefficients.
/// The first two samples determine (Y1, Ym1), the first five determine the
/// X constants, and the last sample (when a sixth is given) is held out for
/// the residual check.
pub fn fit_x<S: Scalar>(
    f: &SkewProduct<S>,
    crit: &CriticalData<S>,
    samples: &[(u64, u64)],
) -> Result<CoefficientSolution<S>> {
    require_resonant(f)?;
    if samples.len() < 5 {
        return Err(Error::DegenerateSamples);
    }
    let lam = f.lambda();
    let decomps = samples
        .iter()
        .map(|&(n, j)| jet_coefficients(f, crit, n, j))
        .collect::<Result<Vec<_>>>()?;

    // linear part: two unknowns from the first two samples
    let y_rows: Vec<Vec<S>> = decomps[..2]
        .iter()
        .map(|d| {
            Ok(vec![
                lam.powi(d.j as i64 - d.n as i64)?,
                lam.powi(-((d.n + d.j) as i64))?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let y_rhs: Vec<S> = decomps[..2].iter().map(|d| d.c_coeff.clone()).collect();
    let y = exact_solve_linear(&y_rows, &y_rhs)?;

    // quadratic part: five unknowns from the first five samples
    let x_rows: Vec<Vec<S>> = decomps[..5]
        .iter()
        .map(|d| x_design_row(&lam, d.n, d.j))
        .collect::<Result<Vec<_>>>()?;
    let x_rhs: Vec<S> = decomps[..5].iter().map(|d| d.d_coeff.clone()).collect();
    let x = exact_solve_linear(&x_rows, &x_rhs)?;

    let fit_residual = if decomps.len() > 5 {
        let held = &decomps[5];
        let row = x_design_row(&lam, held.n, held.j)?;
        let mut pred = row[0].mul(&x[0]);
        for i in 1..5 {
            pred = pred.add(&row[i].mul(&x[i]));
        }
        let c_pred = y[0]
            .mul(&lam.powi(held.j as i64 - held.n as i64)?)
            .add(&y[1].mul(&lam.powi(-((held.n + held.j) as i64))?));
        let rc = c_pred.sub(&held.c_coeff).mag();
        let rd = pred.sub(&held.d_coeff).mag();
        Mag::from_log2(rc.log2.max(rd.log2))
    } else {
        Mag::ZERO
    };

    let [x2, x1, x0, xm1, xm2] = match <[S; 5]>::try_from(x) {
        Ok(a) => a,
        Err(_) => unreachable!("solver returns dim entries"),
    };
    Ok(CoefficientSolution {
        y1: y[0].clone(),
        ym1: y[1].clone(),
        x2,
        x1,
        x0,
        xm1,
        xm2,
        fit_residual,
    })
}

/// Closed-form (C_nj, D_nj) predicted by fitted constants at any (n, j)
/// with j at or past the critical landing index.
pub fn predict_coefficients<S: Scalar>(
    f: &SkewProduct<S>,
    sol: &CoefficientSolution<S>,
    n: u64,
    j: u64,
) -> Result<(S, S)> {
    let lam = f.lambda();
    let c = sol
        .y1
        .mul(&lam.powi(j as i64 - n as i64)?)
        .add(&sol.ym1.mul(&lam.powi(-((n + j) as i64))?));
    let row = x_design_row(&lam, n, j)?;
    let xs = [&sol.x2, &sol.x1, &sol.x0, &sol.xm1, &sol.xm2];
    let mut d = row[0].mul(xs[0]);
    for i in 1..5 {
        d = d.add(&row[i].mul(xs[i]));
    }
    Ok((c, d))
}

fn x_design_row<S: Scalar>(lam: &S, n: u64, j: u64) -> Result<Vec<S>> {
    let n = n as i64;
    let j = j as i64;
    Ok(vec![
        lam.powi(-2 * n + 2 * j)?,
        lam.powi(-2 * n + j)?,
        lam.powi(-2 * n)?,
        lam.powi(-2 * n - j)?,
        lam.powi(-2 * n - 2 * j)?,
    ])
}

/// Build the resonant family F(t,z) = (t/lambda, p(z) + a t + tau t z + b t^2)
/// for a fiber polynomial p fixing 0 with multiplier lambda = p'(0).
pub fn resonant_family<S: Scalar>(
    p: &Polynomial<S>,
    a: &S,
    tau: &S,
    b: &S,
) -> Result<SkewProduct<S>> {
    if !p.eval(&a.zero_like()).is_zero() {
        return Err(Error::NotNormalized);
    }
    let lam = p.derivative().eval(&a.zero_like());
    let mu = a.one_like().div(&lam)?;
    let g = vec![
        p.coeffs().to_vec(),
        vec![a.clone(), tau.clone()],
        vec![b.clone()],
    ];
    SkewProduct::new(mu, g)
}

/// The unique b with X1(b) = 0. X1 is affine in b, so two trial values
/// pin it down; exact on the rational path.
pub fn solve_b<S: Scalar>(
    p: &Polynomial<S>,
    a: &S,
    tau: &S,
    crit: &CriticalData<S>,
) -> Result<S> {
    let zero = a.zero_like();
    let one = a.one_like();
    let x1_at = |b: &S| -> Result<S> {
        let f = resonant_family(p, a, tau, b)?;
        Ok(fit_x(&f, crit, &default_samples(crit))?.x1)
    };
    let x1_0 = x1_at(&zero)?;
    let x1_1 = x1_at(&one)?;
    let slope = x1_1.sub(&x1_0);
    if slope.is_zero() || (!S::EXACT && slope.log2_abs() < -f64::from(slope.precision() / 2)) {
        return Err(Error::NoDegenerateForm);
    }
    x1_0.neg().div(&slope)
}

/// Whether F is degenerate resonant (X1 = 0), together with the measured X1.
/// On the float path "zero" means |X1| below the 2^(16 - P/2) noise floor.
pub fn verify_degenerate<S: Scalar>(
    f: &SkewProduct<S>,
    crit: &CriticalData<S>,
) -> Result<(bool, S)> {
    let sol = fit_x(f, crit, &default_samples(crit))?;
    let x1 = sol.x1;
    let degenerate = if S::EXACT {
        x1.is_zero()
    } else {
        x1.log2_abs() < 16.0 - f64::from(x1.precision()) / 2.0
    };
    Ok((degenerate, x1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::critical::{critical_data, DEFAULT_K_MAX};
    use crate::dynamics::parse::parse_poly_expr;
    use crate::dynamics::test_maps::{example_family, qr};
    use crate::numerics::exact::GaussianRational;
    use crate::numerics::parse_rational;

    fn example_crit() -> CriticalData<GaussianRational> {
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        critical_data(&p, &qr(0, 1), DEFAULT_K_MAX).unwrap()
    }

    #[test]
    fn recursion_matches_brute_force_jet() {
        let crit = example_crit();
        let f = example_family(qr(1, 1), qr(2, 7));
        for n in [8u64, 9, 12] {
            for j in [2u64, 3, 5, 8] {
                let dec = jet_coefficients(&f, &crit, n, j).unwrap();
                let jet = brute_force_jet(&f, &crit.x0, n, j).unwrap();
                assert_eq!(&dec.c_coeff, jet.coeff(1), "C at n={n} j={j}");
                assert_eq!(&dec.d_coeff, jet.coeff(2), "D at n={n} j={j}");
            }
        }
    }

    #[test]
    fn linear_map_has_no_quadratic_part() {
        // g = lambda z + a t: D vanishes and all X constants are zero
        let zero = qr(0, 1);
        let f = SkewProduct::new(qr(1, 2), vec![vec![zero, qr(2, 1)], vec![qr(1, 1)]]).unwrap();
        let p = f.fiber_poly();
        let crit = CriticalData {
            x0: qr(0, 1),
            crit_order: 0,
            local_degree: 1,
            k: 0,
            fixed_point: qr(0, 1),
            multiplier: p.derivative().eval(&qr(0, 1)),
        };
        let dec = jet_coefficients(&f, &crit, 6, 4).unwrap();
        assert!(dec.d_coeff.is_zero());
        let sol = fit_x(&f, &crit, &default_samples(&crit)).unwrap();
        assert!(sol.x2.is_zero() && sol.x1.is_zero() && sol.x0.is_zero());
        assert!(sol.xm1.is_zero() && sol.xm2.is_zero());
        assert!(sol.fit_residual.is_zero());
    }

    #[test]
    fn a_zero_kills_linear_source() {
        let crit = example_crit();
        let f = example_family(qr(0, 1), qr(1, 3));
        let dec = jet_coefficients(&f, &crit, 8, 6).unwrap();
        assert!(dec.c_coeff.is_zero());
    }

    #[test]
    fn closed_form_reproduces_recursion_exactly() {
        let crit = example_crit();
        let f = example_family(qr(1, 1), qr(0, 1));
        let sol = fit_x(&f, &crit, &default_samples(&crit)).unwrap();
        assert!(sol.fit_residual.is_zero());
        // spot-check at a sample far from the fitting set
        let lam = f.lambda();
        let (n, j) = (11u64, 7u64);
        let dec = jet_coefficients(&f, &crit, n, j).unwrap();
        let c_pred = sol
            .y1
            .mul(&lam.powi(j as i64 - n as i64).unwrap())
            .add(&sol.ym1.mul(&lam.powi(-((n + j) as i64)).unwrap()));
        assert_eq!(c_pred, dec.c_coeff);
    }

    #[test]
    fn example_family_b_zero_is_not_degenerate() {
        let crit = example_crit();
        let f = example_family(qr(1, 1), qr(0, 1));
        let (deg, x1) = verify_degenerate(&f, &crit).unwrap();
        assert!(!deg);
        assert!(!x1.is_zero());
    }

    #[test]
    fn solved_b_is_degenerate_and_matches_expected_rational() {
        let crit = example_crit();
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let b = solve_b(&p, &qr(1, 1), &qr(0, 1), &crit).unwrap();
        let expect = GaussianRational::real(parse_rational("-641/4165").unwrap());
        assert_eq!(b, expect);
        let f = example_family(qr(1, 1), b);
        let (deg, x1) = verify_degenerate(&f, &crit).unwrap();
        assert!(deg, "X1 = {x1}");
    }

    #[test]
    fn solve_b_scales_quadratically_in_a() {
        // with tau = 0 the X1 sources are a^2 (through C^2) and b, so
        // doubling a multiplies the solved b by 4
        let crit = example_crit();
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let b1 = solve_b(&p, &qr(1, 1), &qr(0, 1), &crit).unwrap();
        let b2 = solve_b(&p, &qr(2, 1), &qr(0, 1), &crit).unwrap();
        assert_eq!(b2, qr(4, 1).mul(&b1));
    }

    #[test]
    fn solve_b_zero_sources_gives_zero() {
        let crit = example_crit();
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let b = solve_b(&p, &qr(0, 1), &qr(0, 1), &crit).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn solve_b_invariant_under_trial_and_samples() {
        // different sample set: n = k + 7, j = k+1 .. k+6
        let crit = example_crit();
        let f_b = |b: GaussianRational| example_family(qr(1, 1), b);
        let k = crit.k as u64;
        let alt: Vec<(u64, u64)> = (k + 1..k + 7).map(|j| (k + 7, j)).collect();
        let x1_alt = |b: GaussianRational| fit_x(&f_b(b), &crit, &alt).unwrap().x1;
        let x1_0 = x1_alt(qr(0, 1));
        let x1_m1 = x1_alt(qr(-1, 1));
        let slope = x1_0.sub(&x1_m1);
        let b_alt = x1_0.neg().div(&slope).unwrap();
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let b_default = solve_b(&p, &qr(1, 1), &qr(0, 1), &crit).unwrap();
        assert_eq!(b_alt, b_default);
    }
}
