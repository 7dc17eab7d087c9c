//! Escape-time rendering of filled-Julia-set slices in vertical fibers.
//!
//! A fiber {t = t0} is sampled on a pixel grid in z; each pixel iterates
//! (t, z) -> (mu t, g(t, z)) until |z| exceeds the bailout radius or the
//! iteration budget runs out. Bounded pixels approximate the fiber slice of
//! the filled Julia set.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::SkewProduct;
use crate::error::{Error, Result};
use crate::numerics::complex::BigComplex;
use crate::numerics::Scalar;

/// Marker for a pixel that never escaped within the budget.
pub const BOUNDED: u32 = u32::MAX;

/// Everything needed to render one fiber slice deterministically.
#[derive(Debug, Clone)]
pub struct RenderJob {
    pub f: SkewProduct<BigComplex>,
    pub fiber_t: BigComplex,
    /// Window center in the z-plane.
    pub center_z: (f64, f64),
    /// Half the window width; the height scales by the aspect ratio.
    pub half_width: f64,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub bailout: f64,
}

impl RenderJob {
    /// Window and budget defaults with the map's own escape bound.
    pub fn new(f: SkewProduct<BigComplex>, fiber_t: BigComplex) -> Self {
        let bailout = f.default_bailout();
        RenderJob {
            f,
            fiber_t,
            center_z: (0.0, 0.0),
            half_width: 2.0,
            width: 512,
            height: 512,
            max_iter: 2000,
            bailout,
        }
    }

    fn pixel_z(&self, row: usize, col: usize) -> (f64, f64) {
        let half_height = self.half_width * self.height as f64 / self.width as f64;
        let step_x = 2.0 * self.half_width / self.width as f64;
        let step_y = 2.0 * half_height / self.height as f64;
        (
            self.center_z.0 - self.half_width + (col as f64 + 0.5) * step_x,
            self.center_z.1 + half_height - (row as f64 + 0.5) * step_y,
        )
    }
}

/// Per-pixel escape steps (BOUNDED for pixels that never escaped), plus a
/// copy of the job parameters that produced them.
#[derive(Debug, Clone)]
pub struct EscapeGrid {
    pub width: usize,
    pub height: usize,
    /// Row-major escape steps.
    pub steps: Vec<u32>,
    pub max_iter: u32,
}

impl EscapeGrid {
    pub fn step(&self, row: usize, col: usize) -> u32 {
        self.steps[row * self.width + col]
    }

    /// Fraction of bounded pixels inside the pixel rectangle
    /// [x0, x0+w) x [y0, y0+h); the full grid when `sub` is None.
    pub fn bounded_fraction(&self, sub: Option<(usize, usize, usize, usize)>) -> Result<f64> {
        let (x0, y0, w, h) = sub.unwrap_or((0, 0, self.width, self.height));
        if x0 + w > self.width || y0 + h > self.height || w == 0 || h == 0 {
            return Err(Error::OutOfDomain);
        }
        let mut bounded = 0usize;
        for row in y0..y0 + h {
            for col in x0..x0 + w {
                if self.step(row, col) == BOUNDED {
                    bounded += 1;
                }
            }
        }
        Ok(bounded as f64 / (w * h) as f64)
    }

    /// 8-bit grayscale: bounded pixels black, escape steps log-mapped so
    /// early escapes are bright.
    pub fn to_gray(&self) -> Vec<u8> {
        let denom = ((self.max_iter as f64) + 1.0).ln();
        self.steps
            .iter()
            .map(|&s| {
                if s == BOUNDED {
                    0u8
                } else {
                    let shade = (s as f64 + 1.0).ln() / denom;
                    255u8.saturating_sub((shade * 191.0) as u8 + 32)
                }
            })
            .collect()
    }

    /// Binary PPM (P6) bytes of the grayscale image.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for g in self.to_gray() {
            out.extend_from_slice(&[g, g, g]);
        }
        out
    }

    pub fn write_ppm(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_ppm())?;
        Ok(())
    }

    pub fn write_png(&self, path: &std::path::Path) -> Result<()> {
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.to_gray())
            .expect("gray buffer has width*height pixels");
        img.save(path)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(())
    }
}

/// JSON sidecar describing a rendered grid.
#[derive(Debug, Clone, Serialize)]
pub struct RenderSidecar {
    pub map: String,
    pub fiber_t: String,
    pub center_z: (f64, f64),
    pub half_width: f64,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub bailout: f64,
    pub precision_bits: u32,
    pub bounded_fraction: f64,
}

impl RenderSidecar {
    pub fn from_grid(job: &RenderJob, grid: &EscapeGrid) -> Result<Self> {
        Ok(RenderSidecar {
            map: job.f.canonical_string(),
            fiber_t: job.fiber_t.fmt_value(),
            center_z: job.center_z,
            half_width: job.half_width,
            width: job.width,
            height: job.height,
            max_iter: job.max_iter,
            bailout: job.bailout,
            precision_bits: job.fiber_t.precision(),
            bounded_fraction: grid.bounded_fraction(None)?,
        })
    }
}

#[derive(Clone, Copy)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    fn mul(self, o: C64) -> C64 {
        C64 {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
    fn add(self, o: C64) -> C64 {
        C64 {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
    fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

fn to_c64(v: &BigComplex) -> C64 {
    let (re, im) = v.to_f64_parts();
    C64 { re, im }
}

/// g(t, z) with f64 rows: Horner in t over z-polynomial rows.
fn eval_g_f64(rows: &[Vec<C64>], t: C64, z: C64) -> C64 {
    let eval_row = |row: &[C64]| {
        let mut acc = C64 { re: 0.0, im: 0.0 };
        for c in row.iter().rev() {
            acc = acc.mul(z).add(*c);
        }
        acc
    };
    let mut acc = eval_row(rows.last().unwrap());
    for row in rows.iter().rev().skip(1) {
        acc = acc.mul(t).add(eval_row(row));
    }
    acc
}

fn escape_step_f64(rows: &[Vec<C64>], mu: C64, t0: C64, z0: C64, max_iter: u32, r_sq: f64) -> u32 {
    let mut t = t0;
    let mut z = z0;
    for step in 0..=max_iter {
        if z.norm_sq() > r_sq {
            return step;
        }
        z = eval_g_f64(rows, t, z);
        t = t.mul(mu);
    }
    BOUNDED
}

fn escape_step_big(
    f: &SkewProduct<BigComplex>,
    t0: &BigComplex,
    z0: &BigComplex,
    max_iter: u32,
    bailout_log2: f64,
) -> u32 {
    let mut t = t0.clone();
    let mut z = z0.clone();
    for step in 0..=max_iter {
        if z.log2_abs() > bailout_log2 {
            return step;
        }
        let (t1, z1) = f.eval_map((&t, &z));
        t = t1;
        z = z1;
    }
    BOUNDED
}

/// Whether the f64 fast path represents the fiber faithfully: the t-value
/// must convert to a finite f64 without flushing a nonzero value to zero.
fn f64_path_ok(t: &BigComplex) -> bool {
    let (re, im) = t.to_f64_parts();
    if !re.is_finite() || !im.is_finite() {
        return false;
    }
    if t.is_zero() {
        return true;
    }
    re != 0.0 || im != 0.0
}

/// Render one fiber slice. Rows are computed in parallel; the result is a
/// deterministic function of the job regardless of thread schedule.
pub fn render_fiber(job: &RenderJob) -> Result<EscapeGrid> {
    if job.width == 0 || job.height == 0 {
        return Err(Error::OutOfDomain);
    }
    let fast = f64_path_ok(&job.fiber_t);
    let rows_f64: Vec<Vec<C64>> = job
        .f
        .g_rows()
        .iter()
        .map(|row| row.iter().map(to_c64).collect())
        .collect();
    let mu = to_c64(job.f.mu());
    let t0 = to_c64(&job.fiber_t);
    let r_sq = job.bailout * job.bailout;
    let bailout_log2 = job.bailout.log2();
    let prec = job.fiber_t.precision();

    let steps: Vec<u32> = (0..job.height)
        .into_par_iter()
        .flat_map_iter(|row| {
            let job = job.clone();
            let rows_f64 = rows_f64.clone();
            (0..job.width).map(move |col| {
                let (zr, zi) = job.pixel_z(row, col);
                if fast {
                    escape_step_f64(
                        &rows_f64,
                        mu,
                        t0,
                        C64 { re: zr, im: zi },
                        job.max_iter,
                        r_sq,
                    )
                } else {
                    let z = BigComplex::from_f64(zr, zi, prec);
                    escape_step_big(&job.f, &job.fiber_t, &z, job.max_iter, bailout_log2)
                }
            })
        })
        .collect();

    Ok(EscapeGrid {
        width: job.width,
        height: job.height,
        steps,
        max_iter: job.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::test_maps::{example_family, qr};
    use crate::numerics::exact::parse_rational;

    fn tuned(prec: u32) -> SkewProduct<BigComplex> {
        let b = crate::numerics::exact::GaussianRational::real(
            parse_rational("-641/4165").unwrap(),
        );
        example_family(qr(1, 1), b).to_big(prec)
    }

    fn small_job(f: SkewProduct<BigComplex>, t: BigComplex) -> RenderJob {
        let mut job = RenderJob::new(f, t);
        job.width = 32;
        job.height = 32;
        job.max_iter = 200;
        job
    }

    #[test]
    fn far_pixel_escapes_immediately() {
        let f = tuned(64);
        let mut job = small_job(f.clone(), BigComplex::from_f64(0.0, 0.0, 64));
        job.center_z = (1.0e6, 0.0);
        job.half_width = 1.0;
        job.bailout = 1.0e3;
        let grid = render_fiber(&job).unwrap();
        assert!(grid.steps.iter().all(|&s| s <= 1));
        assert_eq!(grid.bounded_fraction(None).unwrap(), 0.0);
    }

    #[test]
    fn fixed_point_stays_bounded() {
        // z = 0 is fixed for g(0, z); the pixel containing it never escapes
        let f = tuned(64);
        let mut job = small_job(f, BigComplex::from_f64(0.0, 0.0, 64));
        job.center_z = (0.0, 0.0);
        job.half_width = 0.01;
        job.width = 3;
        job.height = 3;
        let grid = render_fiber(&job).unwrap();
        assert!(grid.bounded_fraction(None).unwrap() > 0.0);
    }

    #[test]
    fn raising_max_iter_preserves_escape_steps() {
        let f = tuned(64);
        let mut lo = small_job(f.clone(), BigComplex::from_f64(0.0, 0.0, 64));
        lo.max_iter = 50;
        let mut hi = lo.clone();
        hi.max_iter = 100;
        let g_lo = render_fiber(&lo).unwrap();
        let g_hi = render_fiber(&hi).unwrap();
        for (a, b) in g_lo.steps.iter().zip(&g_hi.steps) {
            if *a != BOUNDED {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn deep_fiber_falls_back_to_big_path() {
        // |t| below the f64 subnormal range must still render, matching the
        // invariant-fiber image at this resolution
        let prec = 1280u32;
        let f = tuned(prec);
        let lam = f.lambda();
        let t_deep = BigComplex::from_f64(10.7, 0.0, prec)
            .div(&lam.powi(400).unwrap())
            .unwrap();
        assert!(!f64_path_ok(&t_deep));
        let deep = render_fiber(&small_job(f.clone(), t_deep)).unwrap();
        let base = render_fiber(&small_job(f, BigComplex::from_f64(0.0, 0.0, prec))).unwrap();
        assert_eq!(deep.steps, base.steps);
    }

    #[test]
    fn grid_is_identical_across_thread_counts() {
        let f = tuned(64);
        let job = small_job(f, BigComplex::from_f64(0.001, 0.0, 64));
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| render_fiber(&job).unwrap())
        };
        assert_eq!(run(1).steps, run(8).steps);
    }

    #[test]
    fn subwindow_fraction_and_ppm_header() {
        let f = tuned(64);
        let mut job = small_job(f, BigComplex::from_f64(0.0, 0.0, 64));
        // tight window at the repelling fixed point z = 0: escape takes
        // about log_8(hw^-1) steps, past this budget
        job.half_width = 1.0e-30;
        job.max_iter = 30;
        let grid = render_fiber(&job).unwrap();
        let full = grid.bounded_fraction(None).unwrap();
        let sub = grid.bounded_fraction(Some((8, 8, 16, 16))).unwrap();
        assert!(full > 0.0 && sub >= 0.0);
        assert!(grid.bounded_fraction(Some((30, 30, 8, 8))).is_err());
        let ppm = grid.to_ppm();
        assert!(ppm.starts_with(b"P6\n32 32\n255\n"));
        assert_eq!(ppm.len(), 13 + 3 * 32 * 32);
    }
}
