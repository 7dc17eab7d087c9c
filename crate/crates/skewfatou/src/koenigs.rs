//! Skew-Koenigs approximants and their limit.
//!
//! The approximant of depth n is phi_n(w) = pi_2 F^n(w/lambda^n, x0); in the
//! attracting-fiber regime these converge to a map Phi with
//! Phi(lambda w) = p(Phi(w)). Everything here is measured rather than proved:
//! convergence rates come from successive differences and residuals from
//! direct evaluation of the functional equation.

use rayon::prelude::*;

use crate::dynamics::{Polynomial, SkewProduct};
use crate::error::{Error, Result};
use crate::numerics::{Mag, Scalar, PREC_EXACT};

/// Hard cap on the approximant depth searched by `koenigs_limit`.
pub const MAX_DEPTH: u64 = 512;

/// Maximal number of functional-equation pullbacks in `extend_global`.
pub const MAX_PULLBACKS: u32 = 64;

/// Sample radius for Phi: the smallness thresholds behind the construction
/// are non-constructive, so the default is empirical and callers shrink it
/// on non-convergence.
pub fn default_domain_radius(lambda_abs: f64) -> f64 {
    1.0 / (4.0 * lambda_abs)
}

/// Lift map and points to a working precision that absorbs the
/// cancellation loss of a depth-n evaluation: the orbit's landing step near
/// the critical value loses about n log2|lambda| bits to cancellation, so
/// results computed at the caller's precision would degrade with depth.
/// Identity on the exact path.
pub(crate) fn lifted<S: Scalar>(
    f: &SkewProduct<S>,
    x0: &S,
    w: &S,
    depth: u64,
) -> (SkewProduct<S>, S, S) {
    if S::EXACT {
        return (f.clone(), x0.clone(), w.clone());
    }
    let lam_log2 = f.lambda().log2_abs();
    let prec = w
        .precision()
        .min(x0.precision())
        .saturating_add((depth as f64 * lam_log2).ceil() as u32 + 32);
    let lift = |c: &S| c.with_precision(prec);
    (
        f.map_scalars(&lift).expect("lifting preserves validity"),
        lift(x0),
        lift(w),
    )
}

/// The j-step approximant at depth n: pi_2 F^j(w/lambda^n, x0).
pub fn phi_nj<S: Scalar>(f: &SkewProduct<S>, x0: &S, n: u64, j: u64, w: &S) -> Result<S> {
    let lam_n = f.lambda().powi(n as i64)?;
    let mut t = w.div(&lam_n)?;
    let mut z = x0.clone();
    let bailout_log2 = f.default_bailout().log2();
    for step in 0..j {
        let (t1, z1) = f.eval_map((&t, &z));
        t = t1;
        z = z1;
        if z.log2_abs() > bailout_log2 {
            return Err(Error::Escaped(step as usize + 1));
        }
    }
    Ok(z)
}

/// The diagonal approximant phi_n = phi_{n,n}, evaluated at internally
/// lifted precision and rounded back to the precision of w.
pub fn phi_n<S: Scalar>(f: &SkewProduct<S>, x0: &S, n: u64, w: &S) -> Result<S> {
    let prec = w.precision();
    let (fl, x0l, wl) = lifted(f, x0, w, n);
    Ok(phi_nj(&fl, &x0l, n, n, &wl)?.with_precision(prec))
}

/// Approximant values on a sample grid, for reports and cross-checks.
#[derive(Debug, Clone)]
pub struct KoenigsTable<S: Scalar> {
    pub n: u64,
    pub j: u64,
    pub x0: S,
    /// (w, phi_{n,j}(w)) pairs in input order.
    pub values: Vec<(S, S)>,
}

/// Evaluate phi_{n,j} on a grid of sample points, in parallel. The output
/// order matches the input order, so results are deterministic.
pub fn sample_table<S: Scalar>(
    f: &SkewProduct<S>,
    x0: &S,
    n: u64,
    j: u64,
    ws: &[S],
) -> Result<KoenigsTable<S>> {
    let values = ws
        .par_iter()
        .map(|w| phi_nj(f, x0, n, j, w).map(|v| (w.clone(), v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(KoenigsTable {
        n,
        j,
        x0: x0.clone(),
        values,
    })
}

/// A converged approximant: evaluating it runs phi_depth directly, so the
/// struct is a recipe rather than a table and stays valid on all of
/// |w| < domain_radius.
#[derive(Debug, Clone)]
pub struct KoenigsLimit<S: Scalar> {
    pub f: SkewProduct<S>,
    pub x0: S,
    pub depth: u64,
    pub domain_radius: f64,
    /// Geometric-tail bound on |phi_depth - Phi| at the probe point.
    pub error_bound: Mag,
}

impl<S: Scalar> KoenigsLimit<S> {
    pub fn eval(&self, w: &S) -> Result<S> {
        phi_n(&self.f, &self.x0, self.depth, w)
    }
}

/// Largest depth the precision of `w` supports (always generous on the
/// exact path). Depth-sensitive evaluations run above the caller's
/// precision internally, so differences remain meaningful somewhat below
/// 2^-P; the budget stops once even that headroom is spent.
fn depth_budget<S: Scalar>(w: &S, lambda_abs: f64) -> u64 {
    if S::EXACT || w.precision() == PREC_EXACT {
        return MAX_DEPTH;
    }
    let lam_log2 = lambda_abs.log2().max(1e-3);
    let n = ((f64::from(w.precision()) + 64.0) / (2.0 * lam_log2)).floor() as u64;
    n.clamp(1, MAX_DEPTH)
}

/// Increase the depth until successive diagonal differences fall below
/// `tol`; differences are measured at lifted precision so the caller's tol
/// can sit near 2^-P. Returns (value at input precision, tail bound, depth).
fn limit_search<S: Scalar>(
    f: &SkewProduct<S>,
    x0: &S,
    w: &S,
    tol: Mag,
) -> Result<(S, Mag, u64)> {
    let lambda_abs = f.lambda().log2_abs().exp2();
    let n_max = depth_budget(w, lambda_abs);
    let prec = w.precision();
    let (fl, x0l, wl) = lifted(f, x0, w, n_max);
    let mut prev = phi_nj(&fl, &x0l, 1, 1, &wl)?;
    let mut diffs_log2: Vec<f64> = Vec::new();
    for n in 2..=n_max {
        let cur = phi_nj(&fl, &x0l, n, n, &wl)?;
        let diff = cur.sub(&prev).mag();
        diffs_log2.push(diff.log2);
        if diff.log2 < tol.log2 {
            let tail = tail_bound(&diffs_log2);
            return Ok((cur.with_precision(prec), tail, n));
        }
        prev = cur;
    }
    Err(Error::NoConvergence { n_max, diffs_log2 })
}

/// Run the diagonal approximants at w until successive differences fall
/// below `tol`; returns the value together with a geometric-tail error
/// bound estimated from the measured difference ratio.
pub fn koenigs_limit<S: Scalar>(
    f: &SkewProduct<S>,
    x0: &S,
    w: &S,
    tol: Mag,
) -> Result<(S, Mag)> {
    limit_search(f, x0, w, tol).map(|(v, bound, _)| (v, bound))
}

/// Bound the remaining tail of a sequence whose consecutive differences
/// are `2^diffs_log2[i]`: assume the last measured ratio persists (clamped
/// to 0.9) and sum the geometric series.
fn tail_bound(diffs_log2: &[f64]) -> Mag {
    let last = match diffs_log2.last() {
        Some(&d) if d.is_finite() => d,
        _ => return Mag::ZERO,
    };
    let ratio_log2 = if diffs_log2.len() >= 2 {
        let prev = diffs_log2[diffs_log2.len() - 2];
        (last - prev).min(0.9f64.log2())
    } else {
        -1.0
    };
    let ratio = ratio_log2.exp2();
    Mag::from_log2(last + ratio_log2 - (1.0 - ratio).log2())
}

/// Build a reusable limit object, converging at a probe point on the
/// default domain circle.
pub fn koenigs_map<S: Scalar>(f: &SkewProduct<S>, x0: &S, tol: Mag) -> Result<KoenigsLimit<S>> {
    let lambda_abs = f.lambda().log2_abs().exp2();
    let delta = default_domain_radius(lambda_abs);
    // probe at a real point of modulus delta/2
    let half = S::from_i64(2, x0.precision());
    let probe = scale_to_radius::<S>(x0.precision(), delta)?.div(&half)?;
    let (_, bound, depth) = limit_search(f, x0, &probe, tol)?;
    Ok(KoenigsLimit {
        f: f.clone(),
        x0: x0.clone(),
        depth,
        domain_radius: delta,
        error_bound: bound,
    })
}

fn scale_to_radius<S: Scalar>(prec: u32, delta: f64) -> Result<S> {
    // delta is only a guideline, so a dyadic approximation is fine
    let num = (delta * 4096.0).round() as i64;
    S::from_i64(num, prec).div(&S::from_i64(4096, prec))
}

/// |Phi_hat(lambda w) - p(Phi_hat(w))| for the stored approximant, pulling
/// lambda w back into the domain through the functional equation if needed.
pub fn functional_residual<S: Scalar>(
    approx: &KoenigsLimit<S>,
    p: &Polynomial<S>,
    w: &S,
) -> Result<Mag> {
    let lam = approx.f.lambda();
    let lw = lam.mul(w);
    let lhs = extend_global(approx, &approx.f, &lw)?;
    let rhs = p.eval(&extend_global(approx, &approx.f, w)?);
    Ok(lhs.sub(&rhs).mag())
}

/// Residual of the depth-n approximant itself, |phi_n(lambda w) - p(phi_n(w))|.
/// Unlike `functional_residual` this pins the depth, so it is the quantity
/// whose decay in n tracks the convergence rate.
pub fn residual_at_depth<S: Scalar>(
    f: &SkewProduct<S>,
    x0: &S,
    n: u64,
    w: &S,
) -> Result<Mag> {
    let p = f.fiber_poly();
    let lw = f.lambda().mul(w);
    let lhs = phi_n(f, x0, n, &lw)?;
    let rhs = p.eval(&phi_n(f, x0, n, w)?);
    Ok(lhs.sub(&rhs).mag())
}

/// Evaluate Phi outside the sample domain via Phi(w) = p^k(Phi(w/lambda^k))
/// with minimal k.
pub fn extend_global<S: Scalar>(
    approx: &KoenigsLimit<S>,
    f: &SkewProduct<S>,
    w: &S,
) -> Result<S> {
    let lam = f.lambda();
    let lam_log2 = lam.log2_abs();
    let radius_log2 = approx.domain_radius.log2();
    let mut k = 0u32;
    let mut wl = w.log2_abs();
    while wl >= radius_log2 {
        k += 1;
        wl -= lam_log2;
        if k > MAX_PULLBACKS {
            return Err(Error::OutOfDomain);
        }
    }
    let pulled = w.div(&lam.powi(k as i64)?)?;
    let inner = approx.eval(&pulled)?;
    Ok(f.fiber_poly().iterate(&inner, k as usize))
}

/// Least-squares exponent rho of log|phi_{n+1}(w) - phi_n(w)| against
/// n log|lambda|, fitted on the last half of the depth range so transient
/// constants fall into the intercept.
pub fn convergence_slope<S: Scalar>(
    f: &SkewProduct<S>,
    x0: &S,
    w: &S,
    n_lo: u64,
    n_hi: u64,
) -> Result<f64> {
    if n_hi <= n_lo + 1 {
        return Err(Error::Usage("slope fit needs at least two depths".into()));
    }
    let lam_log2 = f.lambda().log2_abs();
    let values = (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| phi_n(f, x0, n, w))
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, pair) in values.windows(2).enumerate() {
        let n = n_lo + i as u64;
        let d = pair[1].sub(&pair[0]).mag();
        if !d.log2.is_finite() {
            return Err(Error::PrecisionExhausted);
        }
        // reject differences at the rounding floor of the working precision
        if !S::EXACT && d.log2 < w.log2_abs() - f64::from(w.precision()) + 8.0 {
            return Err(Error::PrecisionExhausted);
        }
        points.push((n as f64 * lam_log2, d.log2));
    }
    let half = points.len() / 2;
    Ok(least_squares_slope(&points[half..]))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::test_maps::qr;
    use crate::numerics::exact::GaussianRational;
    use crate::numerics::Mag;

    /// g(t,z) = lambda z + a t with horizontal contraction mu.
    fn linear_map(
        lambda: GaussianRational,
        mu: GaussianRational,
        a: GaussianRational,
    ) -> SkewProduct<GaussianRational> {
        let zero = qr(0, 1);
        SkewProduct::new(mu, vec![vec![zero, lambda], vec![a]]).unwrap()
    }

    #[test]
    fn phi_j_zero_is_base_point() {
        let f = linear_map(qr(2, 1), qr(1, 2), qr(1, 1));
        let x0 = qr(3, 7);
        let got = phi_nj(&f, &x0, 5, 0, &qr(9, 10)).unwrap();
        assert_eq!(got, x0);
    }

    #[test]
    fn phi_at_w_zero_follows_invariant_fiber() {
        // w = 0 stays on the fiber t = 0, so phi_{n,j}(0) = p^j(x0)
        let f = crate::dynamics::test_maps::example_family(qr(1, 1), qr(0, 1));
        let x0 = qr(-1, 1);
        let p = f.fiber_poly();
        for j in 0..5u64 {
            let got = phi_nj(&f, &x0, 8, j, &qr(0, 1)).unwrap();
            assert_eq!(got, p.iterate(&x0, j as usize));
        }
    }

    #[test]
    fn linear_diagonal_matches_geometric_sum() {
        // phi_nn(w) = a w (1 - (mu/lambda)^n) / (lambda - mu)
        let lambda = qr(2, 1);
        let mu = qr(1, 2);
        let a = qr(1, 1);
        let f = linear_map(lambda.clone(), mu.clone(), a.clone());
        let w = qr(1, 1);
        for n in 1..8u64 {
            let got = phi_n(&f, &qr(0, 1), n, &w).unwrap();
            let ratio = mu.div(&lambda).unwrap();
            let one = qr(1, 1);
            let expect = a
                .mul(&w)
                .mul(&one.sub(&ratio.powi(n as i64).unwrap()))
                .div(&lambda.sub(&mu))
                .unwrap();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn linear_limit_hits_closed_form() {
        // Phi(w) = a w / (lambda - mu) = 2/3 at w = 1
        let f = linear_map(qr(2, 1), qr(1, 2), qr(1, 1));
        let (val, bound) = koenigs_limit(&f, &qr(0, 1), &qr(1, 1), Mag::from_log2(-120.0)).unwrap();
        let expect = qr(2, 3);
        assert!(val.sub(&expect).mag().log2 < -118.0, "val = {val}");
        assert!(bound.log2 < -100.0);
    }

    #[test]
    fn linear_residual_is_zero() {
        let f = linear_map(qr(2, 1), qr(1, 2), qr(1, 1));
        let approx = koenigs_map(&f, &qr(0, 1), Mag::from_log2(-140.0)).unwrap();
        let p = f.fiber_poly();
        for w in [qr(1, 100), qr(1, 16), qr(-3, 50)] {
            let r = functional_residual(&approx, &p, &w).unwrap();
            assert!(r.log2 < -130.0, "residual {r} at w = {w}");
        }
    }

    #[test]
    fn extend_agrees_with_linear_closed_form_far_out() {
        let f = linear_map(qr(2, 1), qr(1, 2), qr(1, 1));
        let approx = koenigs_map(&f, &qr(0, 1), Mag::from_log2(-150.0)).unwrap();
        let w = qr(37, 1); // far outside delta = 1/8
        let got = extend_global(&approx, &f, &w).unwrap();
        let expect = qr(2, 3).mul(&w);
        assert!(got.sub(&expect).mag().log2 < -120.0);
    }

    #[test]
    fn linear_resonant_slope_is_minus_two() {
        // mu = 1/lambda: differences are (mu/lambda)^n = lambda^{-2n}
        let f = linear_map(qr(2, 1), qr(1, 2), qr(1, 1));
        let rho = convergence_slope(&f, &qr(0, 1), &qr(1, 8), 4, 20).unwrap();
        assert!((rho + 2.0).abs() < 1e-9, "rho = {rho}");
    }

    #[test]
    fn no_convergence_reports_diffs() {
        // mu at the edge: make tol unreachably tight for the float budget
        let f = linear_map(qr(2, 1), qr(1, 2), qr(1, 1)).to_big(64);
        let x0 = crate::numerics::complex::BigComplex::from_f64(0.0, 0.0, 64);
        let w = crate::numerics::complex::BigComplex::from_f64(1.0, 0.0, 64);
        let err = koenigs_limit(&f, &x0, &w, Mag::from_log2(-5000.0)).unwrap_err();
        match err {
            Error::NoConvergence { diffs_log2, .. } => assert!(!diffs_log2.is_empty()),
            other => panic!("unexpected error {other}"),
        }
    }
}
