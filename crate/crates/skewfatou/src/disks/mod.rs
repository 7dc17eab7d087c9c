//! Vertical disks in deep fibers: locating the parameter w0 with
//! Phi(w0) = x0, checking that F^n maps the disk D_n into D_2n, following
//! the disk centers toward (0, x0), backward-orbit omega-limit chains, and
//! derivative-growth evidence for Julia membership on nearby fibers.
//!
//! Everything here runs on `BigComplex`: the orbits are thousands of steps
//! deep, which rules out exact rationals (their representation size grows
//! geometrically) and fixes the precision policy to `precision_for_depth`.

pub mod checkpoint;

use std::path::Path;

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::dynamics::critical::CriticalData;
use crate::dynamics::SkewProduct;
use crate::error::{Error, Result};
use crate::koenigs::{extend_global, phi_n, KoenigsLimit};
use crate::numerics::complex::BigComplex;
use crate::numerics::jet::Jet;
use crate::numerics::{Mag, Scalar};

/// Default number of equi-angular boundary samples.
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 64;

/// The vertical disk D_n = { (w0/lambda^n, z) : |z - x0| < |lambda|^(-3n/4) }.
#[derive(Debug, Clone)]
pub struct DiskSpec {
    pub n: u64,
    pub w0: BigComplex,
    pub fiber_t: BigComplex,
    pub center_z: BigComplex,
    pub radius: Float,
    pub boundary_samples: usize,
}

/// Radius |lambda|^(-3n/4) at the precision of `lam_abs`.
fn disk_radius(lam_abs: &Float, n: u64) -> Float {
    let p = lam_abs.prec();
    let e = Float::with_val(p, n) * Float::with_val(p, -3) / Float::with_val(p, 4);
    lam_abs.clone().pow(e)
}

pub fn make_disk(
    n: u64,
    w0: &BigComplex,
    center_z: &BigComplex,
    lambda: &BigComplex,
    boundary_samples: usize,
) -> Result<DiskSpec> {
    if n == 0 {
        return Err(Error::Usage("disk index n must be >= 1".into()));
    }
    let fiber_t = w0.div(&lambda.powi(n as i64)?)?;
    Ok(DiskSpec {
        n,
        w0: w0.clone(),
        fiber_t,
        center_z: center_z.clone(),
        radius: disk_radius(&lambda.norm(), n),
        boundary_samples,
    })
}

impl DiskSpec {
    /// Center plus `boundary_samples` equi-angular points of the boundary
    /// circle. Index 0 is the center.
    pub fn sample_points(&self) -> Vec<BigComplex> {
        let p = self.radius.prec();
        let two_pi = Float::with_val(p, Constant::Pi) * 2u32;
        let mut pts = Vec::with_capacity(self.boundary_samples + 1);
        pts.push(self.center_z.clone());
        for j in 0..self.boundary_samples {
            let th = two_pi.clone() * Float::with_val(p, j as u64)
                / Float::with_val(p, self.boundary_samples as u64);
            let (sin, cos) = th.sin_cos(Float::new(p));
            let offset = BigComplex::new(cos * self.radius.clone(), sin * self.radius.clone());
            pts.push(self.center_z.add(&offset));
        }
        pts
    }
}

/// Search region for w0: a square grid in the w-plane.
#[derive(Debug, Clone)]
pub struct SearchRegion {
    pub center: (f64, f64),
    pub half_width: f64,
    pub grid: usize,
}

impl Default for SearchRegion {
    fn default() -> Self {
        SearchRegion {
            center: (0.0, 0.0),
            half_width: 16.0,
            grid: 64,
        }
    }
}

/// Outcome of the w0 search. w0 itself is the accepted candidate of
/// smallest modulus; all certified candidates are kept since w0 need not
/// be unique.
#[derive(Debug, Clone)]
pub struct W0Search {
    pub w0: BigComplex,
    pub candidates: Vec<BigComplex>,
    /// Forward-orbit certification residual |phi_depth(w0) - target|.
    pub residual: Mag,
    pub depth: u64,
}

/// phi_n as an order-`order` jet around the center point w_c.
fn phi_jet(
    f: &SkewProduct<BigComplex>,
    x0: &BigComplex,
    n: u64,
    w_c: &BigComplex,
    order: usize,
) -> Result<Jet<BigComplex>> {
    let prec = w_c.precision();
    // the critical-landing step loses about n log2|lambda| bits to
    // cancellation, so work above the caller's precision and round back
    let (f, x0, w_c) = crate::koenigs::lifted(f, x0, w_c, n);
    let lam_n = f.lambda().powi(n as i64)?;
    let mut scale = w_c.one_like().div(&lam_n)?;
    let mut z = Jet::constant(x0.clone(), order);
    let bailout_log2 = f.default_bailout().log2();
    for step in 0..n {
        let t = Jet::variable_scaled(w_c.mul(&scale), scale.clone(), order);
        z = f.eval_g_jet(&t, &z)?;
        if z.coeff(0).log2_abs() > bailout_log2 {
            return Err(Error::Escaped(step as usize + 1));
        }
        scale = scale.mul(f.mu());
    }
    Ok(Jet::new(
        z.coeffs().iter().map(|c| c.with_precision(prec)).collect(),
    ))
}

/// Find w with Phi(w) = target by grid scan plus Newton refinement, then
/// certify against the depth-`depth` forward orbit.
pub fn find_w0(
    f: &SkewProduct<BigComplex>,
    x0: &BigComplex,
    target: &BigComplex,
    region: &SearchRegion,
    depth: u64,
    tol: Mag,
) -> Result<W0Search> {
    let prec = x0.precision();
    let g = region.grid;
    let step = 2.0 * region.half_width / g as f64;
    let coarse_depth = depth.min(24);

    // grid of |phi(w) - target|, evaluated in parallel; escaped points are
    // simply not minima
    let scores: Vec<Option<f64>> = (0..(g + 1) * (g + 1))
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / (g + 1), idx % (g + 1));
            let w = BigComplex::from_f64(
                region.center.0 - region.half_width + i as f64 * step,
                region.center.1 - region.half_width + j as f64 * step,
                prec,
            );
            phi_n(f, x0, coarse_depth, &w)
                .ok()
                .map(|v| v.sub(target).log2_abs())
        })
        .collect();

    // local minima of the coarse score
    let at = |i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i > g as i64 || j > g as i64 {
            f64::INFINITY
        } else {
            scores[(i as usize) * (g + 1) + j as usize].unwrap_or(f64::INFINITY)
        }
    };
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    for i in 0..=g as i64 {
        for j in 0..=g as i64 {
            let v = at(i, j);
            if !v.is_finite() {
                continue;
            }
            let neighbors = [
                at(i - 1, j - 1), at(i - 1, j), at(i - 1, j + 1),
                at(i, j - 1), at(i, j + 1),
                at(i + 1, j - 1), at(i + 1, j), at(i + 1, j + 1),
            ];
            if neighbors.iter().all(|&nb| v <= nb) {
                seeds.push((i as usize, j as usize));
            }
        }
    }

    let mut candidates: Vec<BigComplex> = Vec::new();
    for (i, j) in seeds {
        let mut w = BigComplex::from_f64(
            region.center.0 - region.half_width + i as f64 * step,
            region.center.1 - region.half_width + j as f64 * step,
            prec,
        );
        // Newton on phi_depth(w) - target with a jet-computed derivative
        let mut ok = false;
        for _ in 0..80 {
            let jet = match phi_jet(f, x0, depth, &w, 1) {
                Ok(j) => j,
                Err(_) => break,
            };
            let fv = jet.coeff(0).sub(target);
            let dv = jet.coeff(1);
            if dv.is_zero() {
                break;
            }
            let delta = match fv.div(dv) {
                Ok(d) => d,
                Err(_) => break,
            };
            w = w.sub(&delta);
            // push the root to depth-limited accuracy, not just the
            // certification tolerance, so callers can reuse it deeper
            let lam_log2 = f.lambda().log2_abs();
            let stop = (-2.0 * depth as f64 * lam_log2 - 16.0).max(-((prec as f64) - 32.0));
            if delta.log2_abs() < stop.min(tol.log2 - 8.0) {
                ok = true;
                break;
            }
        }
        if !ok {
            continue;
        }
        let res = match phi_n(f, x0, depth, &w) {
            Ok(v) => v.sub(target).mag(),
            Err(_) => continue,
        };
        if res.log2 >= tol.log2 {
            continue;
        }
        if candidates.iter().all(|c| c.sub(&w).log2_abs() > -24.0) {
            candidates.push(w);
        }
    }

    if candidates.is_empty() {
        return Err(Error::NotFound);
    }
    // deterministic order, smallest modulus first
    candidates.sort_by(|a, b| {
        a.log2_abs()
            .partial_cmp(&b.log2_abs())
            .unwrap()
            .then_with(|| a.to_f64_parts().partial_cmp(&b.to_f64_parts()).unwrap())
    });
    let w0 = candidates[0].clone();
    let residual = phi_n(f, x0, depth, &w0)?.sub(target).mag();
    Ok(W0Search {
        w0,
        candidates,
        residual,
        depth,
    })
}

/// Result of the nesting check F^n(D_n) within D_2n.
#[derive(Debug, Clone)]
pub struct NestingReport {
    pub n: u64,
    /// Max over the center and boundary samples of |pi_2 F^n(sample) - x0|.
    pub max_image_distance: Mag,
    /// radius(D_2n) - max_image_distance, as plain numbers.
    pub margin: f64,
    /// 1 - max_image_distance / radius(D_2n): scale-free, so it stays
    /// informative when both terms underflow f64.
    pub relative_margin: f64,
    pub fiber_ok: bool,
    pub escaped: Option<usize>,
}

/// Iterate the center and boundary samples of D_n for n steps and compare
/// the image against D_2n. Containment of the full analytic image disk
/// follows from the boundary by the maximum principle.
pub fn verify_nesting(f: &SkewProduct<BigComplex>, disk: &DiskSpec) -> Result<NestingReport> {
    let n = disk.n;
    let lam = f.lambda();
    let bailout_log2 = f.default_bailout().log2();
    let results: Vec<std::result::Result<Mag, usize>> = disk
        .sample_points()
        .par_iter()
        .map(|z0| {
            let mut t = disk.fiber_t.clone();
            let mut z = z0.clone();
            for step in 0..n {
                let (t1, z1) = f.eval_map((&t, &z));
                t = t1;
                z = z1;
                if z.log2_abs() > bailout_log2 {
                    return Err(step as usize + 1);
                }
            }
            Ok(z.sub(&disk.center_z).mag())
        })
        .collect();

    let mut max_image_distance = Mag::ZERO;
    let mut escaped = None;
    for r in results {
        match r {
            Ok(d) => {
                if d.log2 > max_image_distance.log2 {
                    max_image_distance = d;
                }
            }
            Err(step) => escaped = Some(step),
        }
    }

    let radius2n_log2 = -0.75 * (2 * n) as f64 * lam.log2_abs();
    let (margin, relative_margin) = if escaped.is_some() {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    } else {
        (
            radius2n_log2.exp2() - max_image_distance.log2.exp2(),
            1.0 - (max_image_distance.log2 - radius2n_log2).exp2(),
        )
    };

    // t-dynamics is linear, so the image fiber must equal w0/lambda^2n on
    // the nose (exact when mu is dyadic, e.g. 1/8)
    let t_image = disk.fiber_t.mul(&f.mu().powi(n as i64)?);
    let t_expect = disk.w0.div(&lam.powi(2 * n as i64)?)?;
    let fiber_ok = t_image.sub(&t_expect).is_zero();

    Ok(NestingReport {
        n,
        max_image_distance,
        margin,
        relative_margin,
        fiber_ok,
        escaped,
    })
}

/// Distances of the iterated disk center to (0, x0) at the doubling steps
/// (2^l - 1) n.
#[derive(Debug, Clone)]
pub struct AccumulationReport {
    pub n: u64,
    pub levels: u32,
    /// distances[l-1] = ||F^((2^l-1)n)(center) - (0, x0)||, l = 1..levels.
    pub distances: Vec<Mag>,
    /// Whether the t-coordinate at every level equals w0/lambda^(2^l n)
    /// exactly.
    pub t_exact: bool,
    /// Step the run actually started from (nonzero when resumed).
    pub resumed_from: u64,
}

fn point_distance(t: &BigComplex, z: &BigComplex, x0: &BigComplex) -> Mag {
    let dt = t.mag();
    let dz = z.sub(x0).mag();
    // log-space hypot
    let (hi, lo) = if dt.log2 >= dz.log2 { (dt, dz) } else { (dz, dt) };
    if hi.is_zero() {
        return Mag::ZERO;
    }
    Mag::from_log2(hi.log2 + 0.5 * (1.0 + (2.0 * (lo.log2 - hi.log2)).exp2()).log2())
}

/// Follow the disk center for (2^levels - 1) n steps, recording distances
/// at the doubling schedule and checkpointing there when a directory is
/// given. A rerun resumes from the deepest checkpoint of compatible map
/// hash and precision.
pub fn accumulate(
    f: &SkewProduct<BigComplex>,
    disk: &DiskSpec,
    levels: u32,
    ckpt_dir: Option<&Path>,
) -> Result<AccumulationReport> {
    let n = disk.n;
    let lam = f.lambda();
    let bailout_log2 = f.default_bailout().log2();
    let schedule: Vec<u64> = (1..=levels).map(|l| ((1u64 << l) - 1) * n).collect();
    let total = *schedule.last().unwrap();
    let prec = disk.fiber_t.precision();

    let hash = checkpoint::map_hash(f);
    let resume = ckpt_dir.and_then(|d| checkpoint::find_resume(d, &hash, prec, &schedule));
    let (mut step, mut t, mut z) = match &resume {
        Some(cp) => (cp.step, cp.t.clone(), cp.z.clone()),
        None => (0, disk.fiber_t.clone(), disk.center_z.clone()),
    };
    let resumed_from = step;

    let mut by_step: Vec<(u64, BigComplex, BigComplex)> = Vec::new();
    if let Some(cp) = &resume {
        // earlier scheduled snapshots are needed for the distance table too
        let dir = ckpt_dir.expect("resume implies a checkpoint directory");
        for s in schedule.iter().filter(|s| **s <= cp.step) {
            let path = checkpoint::checkpoint_path(dir, *s);
            let earlier = checkpoint::load(&path)?;
            by_step.push((earlier.step, earlier.t, earlier.z));
        }
    }
    while step < total {
        let (t1, z1) = f.eval_map((&t, &z));
        t = t1;
        z = z1;
        step += 1;
        if z.log2_abs() > bailout_log2 {
            return Err(Error::Escaped(step as usize));
        }
        if schedule.contains(&step) {
            by_step.push((step, t.clone(), z.clone()));
            if let Some(dir) = ckpt_dir {
                checkpoint::save(
                    dir,
                    &checkpoint::Checkpoint {
                        map_hash: hash,
                        precision: prec,
                        step,
                        t: t.clone(),
                        z: z.clone(),
                    },
                )?;
            }
        }
    }

    let mut distances = Vec::with_capacity(levels as usize);
    let mut t_exact = true;
    for (l, sched) in schedule.iter().enumerate() {
        let (_, ts, zs) = by_step
            .iter()
            .find(|(s, _, _)| s == sched)
            .expect("schedule step recorded");
        distances.push(point_distance(ts, zs, &disk.center_z));
        let expo = (1i64 << (l as u32 + 1)) * n as i64;
        let expect = disk.w0.div(&lam.powi(expo)?)?;
        if !ts.sub(&expect).is_zero() {
            t_exact = false;
        }
    }

    Ok(AccumulationReport {
        n,
        levels,
        distances,
        t_exact,
        resumed_from,
    })
}

/// Backward p-orbit chain x_{-l} = Phi(w/lambda^l) together with its decay.
#[derive(Debug, Clone)]
pub struct OmegaLimit<S: Scalar> {
    /// x_{-l} for l = -k .. L, in that order.
    pub points: Vec<S>,
    /// Index offset: points[0] is l = -k.
    pub k: usize,
    pub convergence_tail: Mag,
    /// Max over l of |p(x_{-l}) - x_{-l+1}|.
    pub chain_residual: Mag,
}

/// Evaluate the chain through the limit map and verify it is a backward
/// orbit of p converging to the fixed point.
pub fn omega_limit<S: Scalar>(
    approx: &KoenigsLimit<S>,
    crit: &CriticalData<S>,
    w: &S,
    l_max: u32,
) -> Result<OmegaLimit<S>> {
    let f = &approx.f;
    let lam = f.lambda();
    let p = f.fiber_poly();
    let k = crit.k as i64;

    let mut points = Vec::new();
    for l in -k..=l_max as i64 {
        let arg = w.mul(&lam.powi(-l)?);
        points.push(extend_global(approx, f, &arg)?);
    }

    // chain verification: p advances the index by one
    // the chain can deviate by the approximant's own error, amplified by
    // one application of p, on top of plain rounding noise
    let threshold = if S::EXACT {
        approx.error_bound.log2 + 16.0
    } else {
        (approx.error_bound.log2 + 16.0).max(24.0 - f64::from(w.precision()))
    };
    let mut chain_residual = Mag::ZERO;
    for i in (1..points.len()).rev() {
        let dev = p.eval(&points[i]).sub(&points[i - 1]).mag();
        if dev.log2 > threshold {
            return Err(Error::InconsistentOrbit(i));
        }
        if dev.log2 > chain_residual.log2 {
            chain_residual = dev;
        }
    }

    let convergence_tail = points.last().unwrap().sub(&crit.fixed_point).mag();
    Ok(OmegaLimit {
        points,
        k: crit.k,
        convergence_tail,
        chain_residual,
    })
}

/// Per-doubling-level growth record for the Julia-membership evidence.
#[derive(Debug, Clone)]
pub struct JuliaEvidence {
    pub n: u64,
    pub levels: u32,
    pub v: BigComplex,
    pub z_start: BigComplex,
    /// log2 |prod dg/dz| over the block ending at absolute index 2^l n.
    pub block_log2_products: Vec<f64>,
    /// Running log2 of the vertical derivative at each level boundary.
    pub cumulative_log2: Vec<f64>,
    /// |z_{2^l n} - x0| at each level boundary.
    pub distances: Vec<Mag>,
    /// Reference lower-bound profile |lambda|^(-2^l n / s), s = local degree.
    pub profile: Vec<Mag>,
    /// True when every block multiplies the derivative by more than 1.
    pub positive: bool,
}

/// Escape step of the fiber orbit starting at (t0, z), capped at `horizon`.
fn escape_steps(
    f: &SkewProduct<BigComplex>,
    t0: &BigComplex,
    z0: &BigComplex,
    horizon: u64,
    bailout_log2: f64,
) -> u64 {
    let mut t = t0.clone();
    let mut z = z0.clone();
    for step in 0..horizon {
        if z.log2_abs() > bailout_log2 {
            return step;
        }
        let (t1, z1) = f.eval_map((&t, &z));
        t = t1;
        z = z1;
    }
    horizon
}

/// Find a start z near x0 whose orbit on the fiber t0 survives `horizon`
/// steps: grid scan of escape times on a real segment through x0, then
/// bisection toward the slowest-escaping side.
fn bounded_start(
    f: &SkewProduct<BigComplex>,
    t0: &BigComplex,
    x0: &BigComplex,
    horizon: u64,
) -> Result<BigComplex> {
    let bailout_log2 = f.default_bailout().log2();
    let prec = x0.precision();
    let m = 64usize;
    let offset = |i: usize| -> BigComplex {
        let s = -1.0 + 2.0 * i as f64 / m as f64;
        x0.add(&BigComplex::from_f64(s, 0.0, prec))
    };
    let times: Vec<u64> = (0..=m)
        .into_par_iter()
        .map(|i| escape_steps(f, t0, &offset(i), horizon, bailout_log2))
        .collect();
    let best = (0..=m).max_by_key(|&i| times[i]).unwrap();
    if times[best] >= horizon {
        return Ok(offset(best));
    }
    // bisect between the best point and its slower-escaping neighbor
    let other = if best > 0 && (best == m || times[best - 1] >= times[best + 1]) {
        best - 1
    } else {
        best + 1
    };
    let mut a = offset(best);
    let mut b = offset(other);
    for _ in 0..4 * prec as usize {
        let mid = a.add(&b).div(&BigComplex::from_f64(2.0, 0.0, prec))?;
        let ta = escape_steps(f, t0, &a, horizon, bailout_log2);
        if ta >= horizon {
            return Ok(a);
        }
        let tm = escape_steps(f, t0, &mid, horizon, bailout_log2);
        if tm >= horizon {
            return Ok(mid);
        }
        if tm >= ta {
            b = a;
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::EscapedOrbit)
}

/// Track the vertical derivative product along the orbit of (v/lambda^n, z)
/// in doubling blocks. Absolute indices follow the convention that the
/// start carries index n, so level l sits at absolute index 2^l n after
/// (2^l - 1) n applications of F.
pub fn julia_evidence(
    f: &SkewProduct<BigComplex>,
    disk: &DiskSpec,
    crit: &CriticalData<BigComplex>,
    v: &BigComplex,
    levels: u32,
) -> Result<JuliaEvidence> {
    let n = disk.n;
    let x0 = &disk.center_z;
    let lam_log2 = f.lambda().log2_abs();
    let t0 = v.div(&f.lambda().powi(n as i64)?)?;
    let total = ((1u64 << levels) - 1) * n;
    let bailout_log2 = f.default_bailout().log2();

    let on_center_fiber = v.sub(&disk.w0).is_zero();
    let z_start = if on_center_fiber {
        // the disk-center orbit is the object of interest here; no search
        x0.clone()
    } else {
        bounded_start(f, &t0, x0, total)?
    };

    let schedule: Vec<u64> = (1..=levels).map(|l| ((1u64 << l) - 1) * n).collect();
    let mut t = t0.clone();
    let mut z = z_start.clone();
    let mut cum = 0.0f64;
    let mut block = 0.0f64;
    let mut block_log2_products = Vec::new();
    let mut cumulative_log2 = Vec::new();
    let mut distances = Vec::new();
    let mut profile = Vec::new();
    for step in 1..=total {
        block += f.dg_dz(&t, &z).log2_abs();
        let (t1, z1) = f.eval_map((&t, &z));
        t = t1;
        z = z1;
        if z.log2_abs() > bailout_log2 {
            return Err(Error::Escaped(step as usize));
        }
        if let Some(pos) = schedule.iter().position(|&s| s == step) {
            let l = pos as u32 + 1;
            cum += block;
            block_log2_products.push(block);
            cumulative_log2.push(cum);
            block = 0.0;
            distances.push(z.sub(x0).mag());
            let abs_index = (1u64 << l) * n;
            profile.push(Mag::from_log2(
                -(abs_index as f64) * lam_log2 / crit.local_degree as f64,
            ));
        }
    }

    let positive = block_log2_products.iter().all(|&b| b > 0.0);
    Ok(JuliaEvidence {
        n,
        levels,
        v: v.clone(),
        z_start,
        block_log2_products,
        cumulative_log2,
        distances,
        profile,
        positive,
    })
}

/// Normality proxy for the disk family: all boundary orbits stay bounded
/// over the doubling horizon, and the sampled image diameter shrinks from
/// level to level.
#[derive(Debug, Clone)]
pub struct FatouProxy {
    pub n: u64,
    pub levels: u32,
    /// Max pairwise distance of sampled images at each doubling step.
    pub diameters: Vec<Mag>,
    pub bounded: bool,
}

pub fn fatou_disk_proxy(
    f: &SkewProduct<BigComplex>,
    disk: &DiskSpec,
    levels: u32,
) -> Result<FatouProxy> {
    let n = disk.n;
    let schedule: Vec<u64> = (1..=levels).map(|l| ((1u64 << l) - 1) * n).collect();
    let total = *schedule.last().unwrap();
    let bailout_log2 = f.default_bailout().log2();

    // per-sample orbits with snapshots at the scheduled steps
    let orbits: Vec<Option<Vec<BigComplex>>> = disk
        .sample_points()
        .par_iter()
        .map(|z0| {
            let mut t = disk.fiber_t.clone();
            let mut z = z0.clone();
            let mut snaps = Vec::new();
            for step in 1..=total {
                let (t1, z1) = f.eval_map((&t, &z));
                t = t1;
                z = z1;
                if z.log2_abs() > bailout_log2 {
                    return None;
                }
                if schedule.contains(&step) {
                    snaps.push(z.clone());
                }
            }
            Some(snaps)
        })
        .collect();

    let bounded = orbits.iter().all(|o| o.is_some());
    let mut diameters = Vec::new();
    if bounded {
        for l in 0..levels as usize {
            let pts: Vec<&BigComplex> = orbits
                .iter()
                .map(|o| &o.as_ref().unwrap()[l])
                .collect();
            let mut diam = Mag::ZERO;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let d = pts[i].sub(pts[j]).mag();
                    if d.log2 > diam.log2 {
                        diam = d;
                    }
                }
            }
            diameters.push(diam);
        }
    }
    Ok(FatouProxy {
        n,
        levels,
        diameters,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::critical::{critical_data, DEFAULT_K_MAX};
    use crate::dynamics::test_maps::{example_family, qr};
    use crate::koenigs::koenigs_map;
    use crate::numerics::{parse_rational, precision_for_depth, DEFAULT_GUARD_BITS};

    fn tuned_big(prec: u32) -> SkewProduct<BigComplex> {
        let b = crate::numerics::exact::GaussianRational::real(
            parse_rational("-641/4165").unwrap(),
        );
        example_family(qr(1, 1), b).to_big(prec)
    }

    fn x0_big(prec: u32) -> BigComplex {
        BigComplex::from_f64(-1.0, 0.0, prec)
    }

    /// w0 refined well past f64 accuracy; deeper searches give a root good
    /// to about |lambda|^(-2 depth), which orbit-distance tests need.
    fn w0_big(f: &SkewProduct<BigComplex>, x0: &BigComplex, depth: u64) -> BigComplex {
        let region = SearchRegion {
            center: (10.7, 0.0),
            half_width: 0.5,
            grid: 8,
        };
        find_w0(f, x0, x0, &region, depth, Mag::from_f64(1e-12))
            .unwrap()
            .w0
    }

    #[test]
    fn disk_radius_formula() {
        let lam = BigComplex::from_f64(8.0, 0.0, 96);
        let w0 = BigComplex::from_f64(10.7, 0.0, 96);
        let d8 = make_disk(8, &w0, &x0_big(96), &lam, 16).unwrap();
        let expect = Float::with_val(96, 8).pow(-6i32);
        assert!((d8.radius.clone() - expect).is_zero());
        let d4 = make_disk(4, &w0, &x0_big(96), &lam, 16).unwrap();
        let expect4 = Float::with_val(96, 8).pow(-3i32);
        assert!((d4.radius.clone() - expect4).is_zero());
        // doubling n squares the radius
        let r2 = d4.radius.clone() * d4.radius.clone();
        assert!((d8.radius.clone() - r2).is_zero());
    }

    #[test]
    fn linear_map_w0_matches_closed_form() {
        // Phi(w) = a w / (lambda - mu), so target y pulls back to
        // w = y (lambda - mu) / a
        let zero = qr(0, 1);
        let f = SkewProduct::new(qr(1, 2), vec![vec![zero, qr(2, 1)], vec![qr(1, 1)]])
            .unwrap()
            .to_big(192);
        let x0 = BigComplex::from_f64(0.0, 0.0, 192);
        let target = BigComplex::from_f64(0.25, 0.0, 192);
        let region = SearchRegion {
            center: (0.0, 0.0),
            half_width: 2.0,
            grid: 16,
        };
        let got = find_w0(&f, &x0, &target, &region, 40, Mag::from_log2(-80.0)).unwrap();
        let expect = BigComplex::from_f64(0.375, 0.0, 192);
        assert!(got.w0.sub(&expect).log2_abs() < -70.0);
    }

    #[test]
    fn example_w0_is_certified_by_deep_orbit() {
        let prec = precision_for_depth(40, 8.0, DEFAULT_GUARD_BITS);
        let f = tuned_big(prec);
        let x0 = x0_big(prec);
        let region = SearchRegion {
            center: (10.0, 0.0),
            half_width: 4.0,
            grid: 32,
        };
        let got = find_w0(&f, &x0, &x0, &region, 40, Mag::from_f64(1e-20)).unwrap();
        // reference value from an independent high-precision run
        let expect = BigComplex::from_f64(10.717885192130808, 0.0, prec);
        assert!(got.w0.sub(&expect).log2_abs() < -40.0, "w0 = {}", got.w0.fmt_value());
        assert!(got.residual.log2 < (1e-20f64).log2());
    }

    #[test]
    fn nesting_positive_at_moderate_n() {
        let n = 8u64;
        let prec = precision_for_depth(2 * n, 8.0, DEFAULT_GUARD_BITS);
        let f = tuned_big(prec);
        let lam = f.lambda();
        let w0 = BigComplex::from_f64(10.717885192130808, 0.0, prec);
        let disk = make_disk(n, &w0, &x0_big(prec), &lam, 16).unwrap();
        let rep = verify_nesting(&f, &disk).unwrap();
        assert!(rep.escaped.is_none());
        assert!(rep.margin > 0.0, "margin = {}", rep.margin);
        assert!(rep.relative_margin > 0.0);
        assert!(rep.fiber_ok);
    }

    #[test]
    fn accumulation_distances_decrease() {
        let n = 8u64;
        let levels = 3u32;
        let prec = precision_for_depth((1 << levels) * n, 8.0, DEFAULT_GUARD_BITS);
        let f = tuned_big(prec);
        let w0 = w0_big(&f, &x0_big(prec), 40);
        let disk = make_disk(n, &w0, &x0_big(prec), &f.lambda(), 16).unwrap();
        let rep = accumulate(&f, &disk, levels, None).unwrap();
        assert_eq!(rep.distances.len(), levels as usize);
        for pair in rep.distances.windows(2) {
            assert!(pair[1].log2 < pair[0].log2, "{:?}", rep.distances);
        }
        assert!(rep.t_exact);
    }

    #[test]
    fn accumulation_resumes_from_checkpoint() {
        let n = 4u64;
        let levels = 3u32;
        let prec = precision_for_depth((1 << levels) * n, 8.0, DEFAULT_GUARD_BITS);
        let f = tuned_big(prec);
        let w0 = w0_big(&f, &x0_big(prec), 24);
        let disk = make_disk(n, &w0, &x0_big(prec), &f.lambda(), 16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let first = accumulate(&f, &disk, levels, Some(dir.path())).unwrap();
        assert_eq!(first.resumed_from, 0);
        let second = accumulate(&f, &disk, levels, Some(dir.path())).unwrap();
        assert_eq!(second.resumed_from, ((1u64 << levels) - 1) * n);
        for (a, b) in first.distances.iter().zip(&second.distances) {
            assert_eq!(a.log2, b.log2);
        }
    }

    #[test]
    fn omega_chain_is_backward_orbit() {
        let prec = 256u32;
        let f = tuned_big(prec);
        let x0 = x0_big(prec);
        let p = f.fiber_poly();
        let crit = critical_data(&p, &BigComplex::from_f64(0.0, 0.0, prec), DEFAULT_K_MAX).unwrap();
        let approx = koenigs_map(&f, &x0, Mag::from_log2(-(prec as f64) + 48.0)).unwrap();
        let w = w0_big(&f, &x0, 24);
        let om = omega_limit(&approx, &crit, &w, 12).unwrap();
        // points[0] is l = -k; the chain passes through Phi(w) = x0 at
        // index k and decays toward the fixed point afterwards
        assert_eq!(om.k, 2);
        assert!(om.points[om.k].sub(&x0).log2_abs() < -40.0);
        let tail: Vec<f64> = om.points[om.k + 2..].iter().map(|p| p.log2_abs()).collect();
        for pair in tail.windows(2) {
            assert!(pair[1] < pair[0], "tail not decreasing: {tail:?}");
        }
        assert!(om.convergence_tail.log2 < -20.0);
    }

    #[test]
    fn omega_chain_at_w_zero_is_fixed_point() {
        let prec = 128u32;
        let f = tuned_big(prec);
        let x0 = x0_big(prec);
        let p = f.fiber_poly();
        let crit = critical_data(&p, &BigComplex::from_f64(0.0, 0.0, prec), DEFAULT_K_MAX).unwrap();
        let approx = koenigs_map(&f, &x0, Mag::from_log2(-90.0)).unwrap();
        let w = BigComplex::from_f64(0.0, 0.0, prec);
        let om = omega_limit(&approx, &crit, &w, 6).unwrap();
        for pt in &om.points {
            assert!(pt.log2_abs() < -80.0);
        }
    }

    #[test]
    fn julia_blocks_grow_off_center_and_decay_on_center() {
        let n = 8u64;
        let levels = 3u32;
        let prec = precision_for_depth((1 << levels) * n, 8.0, DEFAULT_GUARD_BITS);
        let f = tuned_big(prec);
        let x0 = x0_big(prec);
        let p = f.fiber_poly();
        let crit = critical_data(&p, &BigComplex::from_f64(0.0, 0.0, prec), DEFAULT_K_MAX).unwrap();
        let w0 = w0_big(&f, &x0, 40);
        let disk = make_disk(n, &w0, &x0, &f.lambda(), 16).unwrap();

        let v = w0.add(&BigComplex::from_f64(0.25, 0.0, prec));
        let ev = julia_evidence(&f, &disk, &crit, &v, levels).unwrap();
        assert!(ev.positive, "blocks: {:?}", ev.block_log2_products);
        for pair in ev.cumulative_log2.windows(2) {
            assert!(pair[1] > pair[0]);
        }

        let center = julia_evidence(&f, &disk, &crit, &w0, levels).unwrap();
        for pair in center.distances.windows(2) {
            assert!(pair[1].log2 < pair[0].log2, "{:?}", center.distances);
        }
    }

    #[test]
    fn fatou_proxy_bounded_with_shrinking_diameter() {
        let n = 8u64;
        let levels = 3u32;
        let prec = precision_for_depth((1 << levels) * n, 8.0, DEFAULT_GUARD_BITS);
        let f = tuned_big(prec);
        let w0 = BigComplex::from_f64(10.717885192130808, 0.0, prec);
        let disk = make_disk(n, &w0, &x0_big(prec), &f.lambda(), 12).unwrap();
        let proxy = fatou_disk_proxy(&f, &disk, levels).unwrap();
        assert!(proxy.bounded);
        for pair in proxy.diameters.windows(2) {
            assert!(pair[1].log2 < pair[0].log2, "{:?}", proxy.diameters);
        }
    }
}
