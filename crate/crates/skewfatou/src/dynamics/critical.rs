//! Critical-orbit data: the multiple critical point x0, its order, and the
//! number of steps k until the orbit lands on the repelling fixed point.

use crate::dynamics::Polynomial;
use crate::error::{Error, Result};
use crate::numerics::{Rational, Scalar};

/// x0 with p'(x0) = 0 to order `crit_order` and p^k(x0) = fixed_point.
/// `local_degree` = crit_order + 1 is the vanishing order of p - p(x0);
/// both are kept since the two conventions differ by one.
#[derive(Debug, Clone)]
pub struct CriticalData<S: Scalar> {
    pub x0: S,
    pub crit_order: usize,
    pub local_degree: usize,
    pub k: usize,
    pub fixed_point: S,
    pub multiplier: S,
}

pub const DEFAULT_K_MAX: usize = 64;

/// Find the critical point of p whose forward orbit lands on the repelling
/// fixed point within `k_max` steps.
///
/// Roots of p' are located numerically (Durand-Kerner with cluster
/// detection); rational roots are reconstructed and verified exactly, so
/// multiplicities on the exact path come from exact zero tests of the
/// successive derivatives.
pub fn critical_data<S: Scalar>(
    p: &Polynomial<S>,
    fixed_point: &S,
    k_max: usize,
) -> Result<CriticalData<S>> {
    let pf = p.eval(fixed_point);
    if !close(&pf.sub(fixed_point), p, fixed_point) {
        return Err(Error::Usage("p(fixed_point) != fixed_point".into()));
    }
    let multiplier = p.derivative().eval(fixed_point);
    if multiplier.log2_abs() <= 0.0 {
        return Err(Error::NotRepelling);
    }

    let dp = p.derivative();
    let clusters = root_clusters(&dp)?;

    let mut best: Option<(usize, CriticalData<S>)> = None;
    for (root_re, root_im, mult) in clusters {
        let x0 = refine_root::<S>(p, root_re, root_im, mult)?;
        if S::EXACT && !dp.eval(&x0).is_zero() {
            // only exactly-representable critical points can be certified
            // on the rational path; a dyadic stand-in would also make the
            // exact forward orbit below blow up in representation size
            continue;
        }
        let crit_order = multiplicity(p, &x0, mult);
        // forward orbit landing check
        let escape_log2 = p.sum_abs_coeffs().log2().max(1.0) + 8.0;
        let mut v = x0.clone();
        for k in 1..=k_max {
            v = p.eval(&v);
            if v.log2_abs() > escape_log2 {
                break;
            }
            if close(&v.sub(fixed_point), p, fixed_point) {
                let cand = CriticalData {
                    x0: x0.clone(),
                    crit_order,
                    local_degree: crit_order + 1,
                    k,
                    fixed_point: fixed_point.clone(),
                    multiplier: multiplier.clone(),
                };
                if best.as_ref().map_or(true, |(bk, _)| k < *bk) {
                    best = Some((k, cand));
                }
                break;
            }
        }
    }
    best.map(|(_, c)| c).ok_or(Error::NotCriticallyFinite(k_max))
}

/// Exact-path equality, threshold on the floating path. The threshold is
/// relative, 2^(-P/2) against the coefficient scale.
fn close<S: Scalar>(dev: &S, p: &Polynomial<S>, at: &S) -> bool {
    if S::EXACT {
        dev.is_zero()
    } else {
        let scale = p.sum_abs_coeffs().log2().max(at.log2_abs()).max(0.0);
        dev.log2_abs() < scale - (at.precision() as f64) / 2.0
    }
}

/// Iterates of a multiple root under Durand-Kerner stagnate on a circle of
/// radius ~ (eps * scale)^(1/m) around it, about 1e-5 for a triple root, so
/// the merge threshold must sit above that. Genuinely distinct critical
/// points closer than 1e-4 are out of scope.
const CLUSTER_RADIUS: f64 = 1e-4;

/// Durand-Kerner on f64 complex arithmetic, then clustering: roots closer
/// than CLUSTER_RADIUS merge, cluster size = multiplicity estimate.
fn root_clusters<S: Scalar>(dp: &Polynomial<S>) -> Result<Vec<(f64, f64, usize)>> {
    let d = dp.degree();
    if d == 0 {
        return Err(Error::Usage("p' is constant; no critical points".into()));
    }
    let coeffs: Vec<(f64, f64)> = dp.coeffs().iter().map(|c| c.to_f64_parts()).collect();
    let lead = coeffs[d];
    let monic: Vec<(f64, f64)> = coeffs.iter().map(|c| cdiv(*c, lead)).collect();

    // starting points on a spiral
    let mut roots: Vec<(f64, f64)> = (0..d)
        .map(|k| cpow((0.4, 0.9), k as i32 + 1))
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..d {
            let num = poly_eval_f64(&monic, roots[i]);
            let mut den = (1.0, 0.0);
            for j in 0..d {
                if j != i {
                    den = cmul(den, csub(roots[i], roots[j]));
                }
            }
            if cabs(den) < 1e-300 {
                continue;
            }
            let step = cdiv(num, den);
            roots[i] = csub(roots[i], step);
            max_step = max_step.max(cabs(step));
        }
        if max_step < 1e-13 {
            break;
        }
    }

    let mut clusters: Vec<(f64, f64, usize)> = Vec::new();
    'outer: for r in roots {
        for c in clusters.iter_mut() {
            if cabs(csub((c.0, c.1), r)) < CLUSTER_RADIUS {
                // running mean keeps the centroid stable
                let n = c.2 as f64;
                c.0 = (c.0 * n + r.0) / (n + 1.0);
                c.1 = (c.1 * n + r.1) / (n + 1.0);
                c.2 += 1;
                continue 'outer;
            }
        }
        clusters.push((r.0, r.1, 1));
    }
    // deterministic order: by real part then imaginary
    clusters.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    Ok(clusters)
}

/// Rational reconstruction on the exact path, Newton polish on the floating
/// path. A root of p' of multiplicity m is a simple root of p'^(m).
fn refine_root<S: Scalar>(p: &Polynomial<S>, re: f64, im: f64, mult: usize) -> Result<S> {
    let prec = p.coeffs()[0].precision();
    // Durand-Kerner cluster centroids for multiple roots are only accurate
    // to ~eps^(1/mult); polish in f64 on p^(mult), where the root is simple,
    // before any exact work.
    let (re, im) = polish_f64(p, re, im, mult);
    if S::EXACT {
        if let (Some(qre), Some(qim)) = (rational_reconstruct(re), rational_reconstruct(im)) {
            let cand = S::from_parts(&qre, &qim, prec);
            if p.derivative().eval(&cand).is_zero() {
                return Ok(cand);
            }
        }
        // no exact representation found; fall through to the numeric value
    }
    let mut x = from_f64_parts::<S>(re, im, prec);
    if S::EXACT {
        // rational Newton doubles the representation size every step; keep
        // the polished dyadic value instead (multiplicity then falls back
        // to the cluster estimate)
        return Ok(x);
    }
    let target = p.nth_derivative(mult); // simple root of p'^(mult-1) = nth_derivative(mult)
    let dtarget = target.derivative();
    for _ in 0..64 {
        let fx = target.eval(&x);
        let dfx = dtarget.eval(&x);
        if dfx.is_zero() {
            break;
        }
        let step = fx.div(&dfx)?;
        x = x.sub(&step);
        if step.log2_abs() < -(prec as f64) {
            break;
        }
    }
    Ok(x)
}

/// Multiplicity of x0 as a root of p': exact zero tests on the exact path,
/// relative threshold 2^(-P/2) on the floating path.
fn multiplicity<S: Scalar>(p: &Polynomial<S>, x0: &S, estimate: usize) -> usize {
    let mut m = 0;
    let scale = p.sum_abs_coeffs().log2().max(0.0);
    for i in 1..=p.degree() {
        let v = p.nth_derivative(i).eval(x0);
        let vanishes = if S::EXACT {
            v.is_zero()
        } else {
            v.log2_abs() < scale - (x0.precision() as f64) / 2.0
        };
        if vanishes {
            m += 1;
        } else {
            break;
        }
    }
    if m == 0 {
        estimate
    } else {
        m
    }
}

fn from_f64_parts<S: Scalar>(re: f64, im: f64, prec: u32) -> S {
    // f64 values are dyadic, so this conversion is exact on both paths
    let rre = Rational::from_f64(re).unwrap_or_default();
    let rim = Rational::from_f64(im).unwrap_or_default();
    S::from_parts(&rre, &rim, prec)
}

/// Continued-fraction rational reconstruction with small denominators.
fn rational_reconstruct(v: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    let mut x = v;
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.round() as i64, 1i64);
    x -= x.round();
    for _ in 0..24 {
        let approx = p1 as f64 / q1 as f64;
        if (approx - v).abs() < 1e-9 * (1.0 + v.abs()) && q1.abs() < 1_000_000 {
            return Some(Rational::from((p1, q1)));
        }
        if x.abs() < 1e-12 {
            break;
        }
        x = 1.0 / x;
        let a = x.round() as i64;
        x -= x.round();
        let (p2, q2) = (a.checked_mul(p1)?.checked_add(p0)?, a.checked_mul(q1)?.checked_add(q0)?);
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

// f64 complex helpers for the coarse root stage
/// Newton in f64 on p^(mult), where the sought root is simple.
fn polish_f64<S: Scalar>(p: &Polynomial<S>, re: f64, im: f64, mult: usize) -> (f64, f64) {
    let target = p.nth_derivative(mult);
    let dtarget = target.derivative();
    let tc: Vec<(f64, f64)> = target.coeffs().iter().map(|c| c.to_f64_parts()).collect();
    let dc: Vec<(f64, f64)> = dtarget.coeffs().iter().map(|c| c.to_f64_parts()).collect();
    let mut z = (re, im);
    for _ in 0..64 {
        let fz = poly_eval_f64(&tc, z);
        let dfz = poly_eval_f64(&dc, z);
        if cabs(dfz) < 1e-300 {
            break;
        }
        let step = cdiv(fz, dfz);
        z = csub(z, step);
        if cabs(step) < 1e-15 * (1.0 + cabs(z)) {
            break;
        }
    }
    z
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}
fn csub(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 - b.0, a.1 - b.1)
}
fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}
fn cabs(a: (f64, f64)) -> f64 {
    a.0.hypot(a.1)
}
fn cpow(a: (f64, f64), e: i32) -> (f64, f64) {
    let mut acc = (1.0, 0.0);
    for _ in 0..e {
        acc = cmul(acc, a);
    }
    acc
}
fn poly_eval_f64(coeffs: &[(f64, f64)], z: (f64, f64)) -> (f64, f64) {
    let mut acc = *coeffs.last().unwrap();
    for c in coeffs.iter().rev().skip(1) {
        acc = cmul(acc, z);
        acc = (acc.0 + c.0, acc.1 + c.1);
    }
    acc
}
