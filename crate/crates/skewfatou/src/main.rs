//! Command-line entry point: one subcommand per pipeline stage plus a full
//! reproduction recipe. Exit codes: 0 success, 1 computational failure,
//! 2 usage error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use skewfatou::config::Config;
use skewfatou::disks::{
    accumulate, fatou_disk_proxy, find_w0, julia_evidence, make_disk, omega_limit, verify_nesting,
    SearchRegion,
};
use skewfatou::dynamics::critical::{critical_data, DEFAULT_K_MAX};
use skewfatou::dynamics::{parse_poly_expr, SkewProduct};
use skewfatou::error::Error;
use skewfatou::koenigs::{convergence_slope, koenigs_limit, koenigs_map};
use skewfatou::numerics::complex::BigComplex;
use skewfatou::numerics::exact::{parse_rational, GaussianRational};
use skewfatou::numerics::{precision_for_depth, Mag, Scalar};
use skewfatou::render::{render_fiber, RenderJob, RenderSidecar};
use skewfatou::report::{write_json, RunManifest};
use skewfatou::resonance::{default_samples, fit_x, resonant_family, solve_b, verify_degenerate};

#[derive(Parser)]
#[command(
    name = "skewfatou",
    about = "Numerical laboratory for polynomial skew-products with an attracting invariant fiber"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Working precision in bits (default: per-stage policy).
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// Convergence tolerance, e.g. 1e-30.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for JSON reports, images, and checkpoints.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (falls back to SKEWFATOU_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Configuration file with [section] blocks per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Prefer the exact rational path where the stage supports it.
    #[arg(long, global = true)]
    exact: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the skew-Koenigs limit at a point.
    Koenigs(KoenigsArgs),
    /// Fit the convergence rate of the diagonal approximants.
    Slope(SlopeArgs),
    /// Report the closed-form linear/quadratic coefficient constants.
    Resonance(FamilyArgs),
    /// Solve the degeneracy condition X1 = 0 for b.
    SolveB(FamilyArgs),
    /// Locate w0 with Phi(w0) equal to a target value.
    FindW0(FindW0Args),
    /// Check the vertical-disk nesting F^n(D_n) inside D_2n.
    VerifyDisk(DiskArgs),
    /// Track disk centers along the doubling schedule toward (0, x0).
    Accumulate(DiskArgs),
    /// Compute the backward-orbit omega-limit chain.
    Omega(OmegaArgs),
    /// Measure vertical derivative growth off the distinguished fiber.
    JuliaEvidence(DiskArgs),
    /// Render an escape-time image of one vertical fiber.
    Render(RenderArgs),
    /// Run the whole example-family pipeline and write all artifacts.
    Pipeline(PipelineArgs),
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Fiber polynomial, e.g. "2*(z+1)^4-2".
    #[arg(long, default_value = "2*(z+1)^4-2")]
    p: String,
    /// Linear t-coefficient a (rational).
    #[arg(long, default_value = "1")]
    a: String,
    /// Cross-term coefficient tau (rational).
    #[arg(long, default_value = "0")]
    tau: String,
    /// Quadratic t-coefficient b (rational); solved when omitted.
    #[arg(long)]
    b: Option<String>,
}

#[derive(Args, Clone)]
struct KoenigsArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Use the linear model g = lambda z + a t instead of --p.
    #[arg(long)]
    linear: bool,
    /// Multiplier lambda for --linear (rational).
    #[arg(long)]
    lambda: Option<String>,
    /// Base contraction mu for --linear (rational).
    #[arg(long)]
    mu: Option<String>,
    /// Evaluation point w (rational or decimal, optionally "re,im").
    #[arg(long, default_value = "1/32")]
    w: String,
}

#[derive(Args, Clone)]
struct SlopeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Evaluation point w.
    #[arg(long, default_value = "1/32")]
    w: String,
    /// First depth of the fit range.
    #[arg(long, default_value_t = 16)]
    n_lo: u64,
    /// Last depth of the fit range.
    #[arg(long, default_value_t = 40)]
    n_hi: u64,
}

#[derive(Args, Clone)]
struct FindW0Args {
    #[command(flatten)]
    family: FamilyArgs,
    /// Target value for Phi (default: the critical point x0).
    #[arg(long)]
    target: Option<String>,
    /// Search square center, "re,im".
    #[arg(long, default_value = "10.0,0.0")]
    center: String,
    /// Search square half-width.
    #[arg(long, default_value_t = 4.0)]
    half_width: f64,
    /// Grid subdivisions per axis for the coarse scan.
    #[arg(long, default_value_t = 32)]
    grid: usize,
    /// Orbit depth for refinement and certification.
    #[arg(long, default_value_t = 40)]
    depth: u64,
}

#[derive(Args, Clone)]
struct DiskArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Disk index n.
    #[arg(long, default_value_t = 8)]
    n: u64,
    /// Doubling levels to follow.
    #[arg(long, default_value_t = 3)]
    levels: u32,
    /// Offset added to w0 for the off-fiber test point.
    #[arg(long, default_value_t = 0.25)]
    offset: f64,
}

#[derive(Args, Clone)]
struct OmegaArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Base point w (default: computed w0).
    #[arg(long)]
    w: Option<String>,
    /// Backward chain length beyond the branch threshold.
    #[arg(long, default_value_t = 12)]
    levels: u32,
}

#[derive(Args, Clone)]
struct RenderArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Fiber t-value: a number, "w0", or "w0+<offset>".
    #[arg(long, default_value = "w0")]
    fiber: String,
    /// Window center in z, "re,im".
    #[arg(long, default_value = "-1.0,0.0")]
    center: String,
    /// Window half-width in z.
    #[arg(long, default_value_t = 2.5)]
    half_width: f64,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long, default_value_t = 2000)]
    max_iter: u32,
    /// Output image stem (writes <stem>.ppm, <stem>.png, <stem>.json).
    #[arg(long, default_value = "fiber")]
    stem: String,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Disk index for the disk/accumulation/Julia stage.
    #[arg(long, default_value_t = 8)]
    n: u64,
    #[arg(long, default_value_t = 3)]
    levels: u32,
    /// Image resolution for the two fiber renders.
    #[arg(long, default_value_t = 512)]
    resolution: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Parameters shared by every stage after merging flags over the config
/// file.
struct Ctx {
    precision: Option<u32>,
    tol: Option<f64>,
    out_dir: PathBuf,
    config_path: Option<String>,
    config: Config,
    started: Instant,
}

impl Ctx {
    fn new(common: &Common, section: &str) -> Result<Ctx, Error> {
        let config = match &common.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let get_num = |key: &str| -> Option<f64> {
            config.get(section, key).and_then(|v| v.parse().ok())
        };
        let precision = common
            .precision_bits
            .or_else(|| get_num("precision-bits").map(|v| v as u32));
        let tol = common.tol.or_else(|| get_num("tol"));
        let out_dir = common
            .out_dir
            .clone()
            .or_else(|| config.get(section, "out-dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let threads = common
            .threads
            .or_else(|| get_num("threads").map(|v| v as usize))
            .or_else(|| {
                std::env::var("SKEWFATOU_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            });
        if let Some(t) = threads {
            // a second invocation in-process would fail; the global pool is
            // set once per CLI run
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
        std::fs::create_dir_all(&out_dir)?;
        Ok(Ctx {
            precision,
            tol,
            out_dir,
            config_path: common.config.as_ref().map(|p| p.display().to_string()),
            config,
            started: Instant::now(),
        })
    }

    fn precision_or(&self, default: u32) -> u32 {
        self.precision.unwrap_or(default)
    }

    fn tol_mag(&self, default_log2: f64) -> Mag {
        match self.tol {
            Some(t) if t > 0.0 => Mag::from_f64(t),
            _ => Mag::from_log2(default_log2),
        }
    }

    fn finish(
        &self,
        subcommand: &str,
        precision: u32,
        params: BTreeMap<String, String>,
        outputs: &[PathBuf],
    ) -> Result<(), Error> {
        let mut manifest = RunManifest::new(subcommand);
        manifest.config_path = self.config_path.clone();
        manifest.parameters = self.config.resolved(subcommand);
        manifest.parameters.extend(params);
        manifest.precision_bits = precision;
        for p in outputs {
            manifest.record_output(p);
        }
        manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        manifest.write(&self.out_dir)?;
        Ok(())
    }
}

/// The exact-rational skew-product for a family, solving for b when the
/// flag is omitted.
fn family_exact(
    args: &FamilyArgs,
) -> Result<(SkewProduct<GaussianRational>, GaussianRational), Error> {
    let p = parse_poly_expr(&args.p)?;
    let a = GaussianRational::real(parse_rational(&args.a)?);
    let tau = GaussianRational::real(parse_rational(&args.tau)?);
    let b = match &args.b {
        Some(s) => GaussianRational::real(parse_rational(s)?),
        None => {
            let crit = critical_data(&p, &GaussianRational::from_int(0), DEFAULT_K_MAX)?;
            solve_b(&p, &a, &tau, &crit)?
        }
    };
    Ok((resonant_family(&p, &a, &tau, &b)?, b))
}

fn parse_big(s: &str, prec: u32) -> Result<BigComplex, Error> {
    let parse_part = |part: &str| -> Result<rug::Float, Error> {
        if let Ok(q) = parse_rational(part.trim()) {
            return Ok(rug::Float::with_val(prec, q));
        }
        rug::Float::parse(part.trim())
            .map(|v| rug::Float::with_val(prec, v))
            .map_err(|_| Error::Usage(format!("cannot parse number {part:?}")))
    };
    match s.split_once(',') {
        Some((re, im)) => Ok(BigComplex {
            re: parse_part(re)?,
            im: parse_part(im)?,
        }),
        None => Ok(BigComplex {
            re: parse_part(s)?,
            im: rug::Float::with_val(prec, 0),
        }),
    }
}

fn rational_string(v: &GaussianRational) -> String {
    match v.as_real() {
        Some(q) => q.to_string(),
        None => v.fmt_value(),
    }
}

/// The distinguished base point w0 with Phi(w0) = x0 for a family.
fn compute_w0(
    f: &SkewProduct<BigComplex>,
    x0: &BigComplex,
    depth: u64,
) -> Result<BigComplex, Error> {
    let region = SearchRegion {
        center: (10.0, 0.0),
        half_width: 4.0,
        grid: 32,
    };
    Ok(find_w0(f, x0, x0, &region, depth, Mag::from_f64(1e-18))?.w0)
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.cmd {
        Cmd::SolveB(args) => cmd_solve_b(&cli.common, args),
        Cmd::Resonance(args) => cmd_resonance(&cli.common, args),
        Cmd::Koenigs(args) => cmd_koenigs(&cli.common, args),
        Cmd::Slope(args) => cmd_slope(&cli.common, args),
        Cmd::FindW0(args) => cmd_find_w0(&cli.common, args),
        Cmd::VerifyDisk(args) => cmd_verify_disk(&cli.common, args),
        Cmd::Accumulate(args) => cmd_accumulate(&cli.common, args),
        Cmd::Omega(args) => cmd_omega(&cli.common, args),
        Cmd::JuliaEvidence(args) => cmd_julia(&cli.common, args),
        Cmd::Render(args) => cmd_render(&cli.common, args),
        Cmd::Pipeline(args) => cmd_pipeline(&cli.common, args),
    }
}

fn cmd_solve_b(common: &Common, args: &FamilyArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "solve-b")?;
    let p = parse_poly_expr(&args.p)?;
    let a = GaussianRational::real(parse_rational(&args.a)?);
    let tau = GaussianRational::real(parse_rational(&args.tau)?);
    let crit = critical_data(&p, &GaussianRational::from_int(0), DEFAULT_K_MAX)?;
    let b = solve_b(&p, &a, &tau, &crit)?;
    println!("{}", rational_string(&b));

    let f = resonant_family(&p, &a, &tau, &b)?;
    let sol = fit_x(&f, &crit, &default_samples(&crit))?;
    let decimal = BigComplex::from_rat(b.as_real().unwrap(), 128).fmt_value();
    let report = json!({
        "p": args.p,
        "a": rational_string(&a),
        "tau": rational_string(&tau),
        "b": rational_string(&b),
        "b_decimal": decimal,
        "constants": {
            "Y1": rational_string(&sol.y1),
            "Ym1": rational_string(&sol.ym1),
            "X2": rational_string(&sol.x2),
            "X1": rational_string(&sol.x1),
            "X0": rational_string(&sol.x0),
            "Xm1": rational_string(&sol.xm1),
            "Xm2": rational_string(&sol.xm2),
        },
    });
    let out = ctx.out_dir.join("solve_b.json");
    write_json(&out, &report)?;
    let params = BTreeMap::from([
        ("p".to_string(), args.p.clone()),
        ("a".to_string(), args.a.clone()),
        ("tau".to_string(), args.tau.clone()),
    ]);
    ctx.finish("solve-b", 0, params, &[out])
}

fn cmd_resonance(common: &Common, args: &FamilyArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "resonance")?;
    let (f, b) = family_exact(args)?;
    let crit = critical_data(
        &f.fiber_poly(),
        &GaussianRational::from_int(0),
        DEFAULT_K_MAX,
    )?;
    let sol = fit_x(&f, &crit, &default_samples(&crit))?;
    let (degenerate, x1) = verify_degenerate(&f, &crit)?;
    println!(
        "X1 = {}; degenerate: {degenerate}",
        rational_string(&x1)
    );
    let report = json!({
        "b": rational_string(&b),
        "degenerate": degenerate,
        "fit_residual_log2": sol.fit_residual.log2,
        "constants": {
            "Y1": rational_string(&sol.y1),
            "Ym1": rational_string(&sol.ym1),
            "X2": rational_string(&sol.x2),
            "X1": rational_string(&sol.x1),
            "X0": rational_string(&sol.x0),
            "Xm1": rational_string(&sol.xm1),
            "Xm2": rational_string(&sol.xm2),
        },
    });
    let out = ctx.out_dir.join("resonance.json");
    write_json(&out, &report)?;
    ctx.finish("resonance", 0, BTreeMap::new(), &[out])
}

fn cmd_koenigs(common: &Common, args: &KoenigsArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "koenigs")?;
    let prec = ctx.precision_or(256);
    let tol = ctx.tol_mag(-(prec as f64) + 48.0);

    let (f, x0) = if args.linear {
        let lam = parse_rational(args.lambda.as_deref().unwrap_or("2"))?;
        let mu = parse_rational(args.mu.as_deref().unwrap_or("1/2"))?;
        let a = parse_rational(&args.family.a)?;
        let zero = GaussianRational::from_int(0);
        let g = vec![
            vec![zero.clone(), GaussianRational::real(lam)],
            vec![GaussianRational::real(a)],
        ];
        (
            SkewProduct::new(GaussianRational::real(mu), g)?.to_big(prec),
            BigComplex::from_f64(0.0, 0.0, prec),
        )
    } else {
        let (f, _) = family_exact(&args.family)?;
        (f.to_big(prec), BigComplex::from_f64(-1.0, 0.0, prec))
    };

    let w = parse_big(&args.w, prec)?;
    let (value, bound) = koenigs_limit(&f, &x0, &w, tol)?;
    println!("{}", value.fmt_value());

    let report = json!({
        "w": w.fmt_value(),
        "value": value.fmt_value(),
        "error_bound_log2": bound.log2,
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("koenigs.json");
    write_json(&out, &report)?;
    let params = BTreeMap::from([("w".to_string(), args.w.clone())]);
    ctx.finish("koenigs", prec, params, &[out])
}

fn cmd_slope(common: &Common, args: &SlopeArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "slope")?;
    let (f, b) = family_exact(&args.family)?;
    let lam_abs = f.lambda().log2_abs().exp2();
    let prec = ctx.precision_or(precision_for_depth(args.n_hi, lam_abs, 64));
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let w = parse_big(&args.w, prec)?;
    let slope = convergence_slope(&fb, &x0, &w, args.n_lo, args.n_hi)?;
    println!("{slope:.4}");
    let report = json!({
        "b": rational_string(&b),
        "w": w.fmt_value(),
        "n_lo": args.n_lo,
        "n_hi": args.n_hi,
        "slope": slope,
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("slope.json");
    write_json(&out, &report)?;
    ctx.finish("slope", prec, BTreeMap::new(), &[out])
}

fn cmd_find_w0(common: &Common, args: &FindW0Args) -> Result<(), Error> {
    let ctx = Ctx::new(common, "find-w0")?;
    let (f, _) = family_exact(&args.family)?;
    let lam_abs = f.lambda().log2_abs().exp2();
    let prec = ctx.precision_or(precision_for_depth(args.depth, lam_abs, 64));
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let target = match &args.target {
        Some(s) => parse_big(s, prec)?,
        None => x0.clone(),
    };
    let (cr, ci) = parse_big(&args.center, 64)?.to_f64_parts();
    let region = SearchRegion {
        center: (cr, ci),
        half_width: args.half_width,
        grid: args.grid,
    };
    let tol = ctx.tol_mag(-60.0);
    let search = find_w0(&fb, &x0, &target, &region, args.depth, tol)?;
    println!("{}", search.w0.fmt_value());
    let report = json!({
        "w0": search.w0.fmt_value(),
        "candidates": search.candidates.iter().map(|c| c.fmt_value()).collect::<Vec<_>>(),
        "residual_log2": search.residual.log2,
        "depth": search.depth,
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("find_w0.json");
    write_json(&out, &report)?;
    ctx.finish("find-w0", prec, BTreeMap::new(), &[out])
}

fn cmd_verify_disk(common: &Common, args: &DiskArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "verify-disk")?;
    let (f, _) = family_exact(&args.family)?;
    let lam_abs = f.lambda().log2_abs().exp2();
    let prec = ctx.precision_or(precision_for_depth(2 * args.n, lam_abs, 64));
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let w0 = compute_w0(&fb, &x0, 40)?;
    let disk = make_disk(args.n, &w0, &x0, &fb.lambda(), 64)?;
    let rep = verify_nesting(&fb, &disk)?;
    println!(
        "n = {}: margin {:.6e} (relative {:.4})",
        rep.n, rep.margin, rep.relative_margin
    );
    let report = json!({
        "n": rep.n,
        "max_image_distance_log2": rep.max_image_distance.log2,
        "margin": rep.margin,
        "relative_margin": rep.relative_margin,
        "fiber_ok": rep.fiber_ok,
        "escaped": rep.escaped,
        "w0": w0.fmt_value(),
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("verify_disk.json");
    write_json(&out, &report)?;
    ctx.finish("verify-disk", prec, BTreeMap::new(), &[out])
}

fn cmd_accumulate(common: &Common, args: &DiskArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "accumulate")?;
    let (f, _) = family_exact(&args.family)?;
    let lam_abs = f.lambda().log2_abs().exp2();
    let depth_total = (1u64 << args.levels) * args.n;
    let prec = ctx.precision_or(precision_for_depth(depth_total, lam_abs, 64));
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let w0 = compute_w0(&fb, &x0, 40)?;
    let disk = make_disk(args.n, &w0, &x0, &fb.lambda(), 64)?;
    let ckpt = ctx.out_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt)?;
    let rep = accumulate(&fb, &disk, args.levels, Some(&ckpt))?;
    for (l, d) in rep.distances.iter().enumerate() {
        println!("level {}: distance 2^{:.2}", l + 1, d.log2);
    }
    let report = json!({
        "n": rep.n,
        "levels": rep.levels,
        "distances_log2": rep.distances.iter().map(|d| d.log2).collect::<Vec<_>>(),
        "t_exact": rep.t_exact,
        "resumed_from": rep.resumed_from,
        "w0": w0.fmt_value(),
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("accumulate.json");
    write_json(&out, &report)?;
    ctx.finish("accumulate", prec, BTreeMap::new(), &[out])
}

fn cmd_omega(common: &Common, args: &OmegaArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "omega")?;
    let (f, _) = family_exact(&args.family)?;
    let prec = ctx.precision_or(256);
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let crit = critical_data(
        &fb.fiber_poly(),
        &BigComplex::from_f64(0.0, 0.0, prec),
        DEFAULT_K_MAX,
    )?;
    let w = match &args.w {
        Some(s) => parse_big(s, prec)?,
        None => compute_w0(&fb, &x0, 24)?,
    };
    let tol = ctx.tol_mag(-(prec as f64) + 48.0);
    let approx = koenigs_map(&fb, &x0, tol)?;
    let om = omega_limit(&approx, &crit, &w, args.levels)?;
    println!(
        "chain of {} points, residual 2^{:.2}, tail 2^{:.2}",
        om.points.len(),
        om.chain_residual.log2,
        om.convergence_tail.log2
    );
    let report = json!({
        "w": w.fmt_value(),
        "k": om.k,
        "points": om.points.iter().map(|p| p.fmt_value()).collect::<Vec<_>>(),
        "chain_residual_log2": om.chain_residual.log2,
        "convergence_tail_log2": om.convergence_tail.log2,
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("omega.json");
    write_json(&out, &report)?;
    ctx.finish("omega", prec, BTreeMap::new(), &[out])
}

fn cmd_julia(common: &Common, args: &DiskArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "julia-evidence")?;
    let (f, _) = family_exact(&args.family)?;
    let lam_abs = f.lambda().log2_abs().exp2();
    let depth_total = (1u64 << args.levels) * args.n;
    let prec = ctx.precision_or(precision_for_depth(depth_total, lam_abs, 64));
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let crit = critical_data(
        &fb.fiber_poly(),
        &BigComplex::from_f64(0.0, 0.0, prec),
        DEFAULT_K_MAX,
    )?;
    let w0 = compute_w0(&fb, &x0, 40)?;
    let disk = make_disk(args.n, &w0, &x0, &fb.lambda(), 64)?;
    let v = w0.add(&BigComplex::from_f64(args.offset, 0.0, prec));
    let ev = julia_evidence(&fb, &disk, &crit, &v, args.levels)?;
    let center = julia_evidence(&fb, &disk, &crit, &w0, args.levels)?;
    let proxy = fatou_disk_proxy(&fb, &disk, args.levels)?;
    println!(
        "off-fiber blocks {:?} (positive: {}); on-fiber distances decay: {}",
        ev.block_log2_products,
        ev.positive,
        center
            .distances
            .windows(2)
            .all(|p| p[1].log2 < p[0].log2)
    );
    let report = json!({
        "n": args.n,
        "levels": args.levels,
        "v": v.fmt_value(),
        "off_fiber": {
            "block_log2_products": ev.block_log2_products,
            "cumulative_log2": ev.cumulative_log2,
            "positive": ev.positive,
        },
        "on_fiber": {
            "distances_log2": center.distances.iter().map(|d| d.log2).collect::<Vec<_>>(),
            "profile": center.profile,
        },
        "fatou_proxy": {
            "bounded": proxy.bounded,
            "diameters_log2": proxy.diameters.iter().map(|d| d.log2).collect::<Vec<_>>(),
        },
        "w0": w0.fmt_value(),
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("julia_evidence.json");
    write_json(&out, &report)?;
    ctx.finish("julia-evidence", prec, BTreeMap::new(), &[out])
}

fn resolve_fiber_t(
    spec: &str,
    fb: &SkewProduct<BigComplex>,
    x0: &BigComplex,
    prec: u32,
) -> Result<BigComplex, Error> {
    if let Some(rest) = spec.strip_prefix("w0") {
        let w0 = compute_w0(fb, x0, 40)?;
        if rest.is_empty() {
            return Ok(w0);
        }
        let off = parse_big(rest.trim_start_matches('+'), prec)?;
        return Ok(w0.add(&off));
    }
    parse_big(spec, prec)
}

fn cmd_render(common: &Common, args: &RenderArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "render")?;
    let (f, _) = family_exact(&args.family)?;
    let prec = ctx.precision_or(256);
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let t = resolve_fiber_t(&args.fiber, &fb, &x0, prec)?;
    let (cr, ci) = parse_big(&args.center, 64)?.to_f64_parts();
    let mut job = RenderJob::new(fb, t);
    job.center_z = (cr, ci);
    job.half_width = args.half_width;
    job.width = args.width;
    job.height = args.height;
    job.max_iter = args.max_iter;
    let grid = render_fiber(&job)?;
    let frac = grid.bounded_fraction(None)?;
    println!("bounded fraction {frac:.6}");

    let ppm = ctx.out_dir.join(format!("{}.ppm", args.stem));
    let png = ctx.out_dir.join(format!("{}.png", args.stem));
    let sidecar_path = ctx.out_dir.join(format!("{}.json", args.stem));
    grid.write_ppm(&ppm)?;
    grid.write_png(&png)?;
    write_json(&sidecar_path, &RenderSidecar::from_grid(&job, &grid)?)?;
    ctx.finish("render", prec, BTreeMap::new(), &[ppm, png, sidecar_path])
}

fn cmd_pipeline(common: &Common, args: &PipelineArgs) -> Result<(), Error> {
    let ctx = Ctx::new(common, "pipeline")?;
    let p = parse_poly_expr(&args.family.p)?;
    let a = GaussianRational::real(parse_rational(&args.family.a)?);
    let tau = GaussianRational::real(parse_rational(&args.family.tau)?);
    let crit_exact = critical_data(&p, &GaussianRational::from_int(0), DEFAULT_K_MAX)?;
    let b = solve_b(&p, &a, &tau, &crit_exact)?;
    println!("b = {}", rational_string(&b));
    let f = resonant_family(&p, &a, &tau, &b)?;

    let lam_abs = f.lambda().log2_abs().exp2();
    let depth_total = (1u64 << args.levels) * args.n;
    let prec = ctx.precision_or(precision_for_depth(depth_total.max(40), lam_abs, 64));
    let fb = f.to_big(prec);
    let x0 = BigComplex::from_f64(-1.0, 0.0, prec);
    let crit = critical_data(
        &fb.fiber_poly(),
        &BigComplex::from_f64(0.0, 0.0, prec),
        DEFAULT_K_MAX,
    )?;

    let w = parse_big("1/32", prec)?;
    let slope_tuned = convergence_slope(&fb, &x0, &w, 16, 40)?;
    let f0 = resonant_family(&p, &a, &tau, &GaussianRational::from_int(0))?.to_big(prec);
    let slope_generic = convergence_slope(&f0, &x0, &w, 16, 40)?;
    println!("slopes: tuned {slope_tuned:.3}, b=0 {slope_generic:.3}");

    let w0 = compute_w0(&fb, &x0, 40)?;
    println!("w0 = {}", w0.fmt_value());
    let disk = make_disk(args.n, &w0, &x0, &fb.lambda(), 64)?;
    let nesting = verify_nesting(&fb, &disk)?;
    let ckpt = ctx.out_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt)?;
    let acc = accumulate(&fb, &disk, args.levels, Some(&ckpt))?;
    let approx = koenigs_map(&fb, &x0, Mag::from_log2(-(prec as f64) + 48.0))?;
    let om = omega_limit(&approx, &crit, &w0, 12)?;
    let ev = julia_evidence(
        &fb,
        &disk,
        &crit,
        &w0.add(&BigComplex::from_f64(0.25, 0.0, prec)),
        args.levels,
    )?;
    let center_ev = julia_evidence(&fb, &disk, &crit, &w0, args.levels)?;

    // side-by-side renders: the fiber through w0 and a nearby one
    let mut outputs = Vec::new();
    for (stem, t) in [
        ("fiber_critical", w0.clone()),
        (
            "fiber_offset",
            w0.add(&BigComplex::from_f64(1.0e-3, 0.0, prec)),
        ),
    ] {
        let mut job = RenderJob::new(fb.clone(), t);
        job.center_z = (-1.0, 0.0);
        job.half_width = 2.5;
        job.width = args.resolution;
        job.height = args.resolution;
        let grid = render_fiber(&job)?;
        let ppm = ctx.out_dir.join(format!("{stem}.ppm"));
        grid.write_ppm(&ppm)?;
        let sidecar = ctx.out_dir.join(format!("{stem}.json"));
        write_json(&sidecar, &RenderSidecar::from_grid(&job, &grid)?)?;
        println!(
            "{stem}: bounded fraction {:.6}",
            grid.bounded_fraction(None)?
        );
        outputs.push(ppm);
        outputs.push(sidecar);
    }

    let report = json!({
        "b": rational_string(&b),
        "slope_tuned": slope_tuned,
        "slope_generic": slope_generic,
        "w0": w0.fmt_value(),
        "nesting": {
            "n": nesting.n,
            "margin": nesting.margin,
            "relative_margin": nesting.relative_margin,
            "fiber_ok": nesting.fiber_ok,
        },
        "accumulation_distances_log2": acc.distances.iter().map(|d| d.log2).collect::<Vec<_>>(),
        "omega_chain_residual_log2": om.chain_residual.log2,
        "julia_off_fiber_positive": ev.positive,
        "julia_on_fiber_distances_log2": center_ev.distances.iter().map(|d| d.log2).collect::<Vec<_>>(),
        "precision_bits": prec,
    });
    let out = ctx.out_dir.join("report.json");
    write_json(&out, &report)?;
    outputs.push(out);
    ctx.finish("pipeline", prec, BTreeMap::new(), &outputs)
}
