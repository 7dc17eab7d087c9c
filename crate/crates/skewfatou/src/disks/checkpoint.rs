//! Orbit checkpoints for the deep accumulation runs.
//!
//! Binary layout, little-endian:
//!   magic    8 bytes  "SKFDCK1\0"
//!   map_hash 32 bytes  sha256 of the map's canonical string
//!   prec     u32       working precision in bits
//!   step     u64       orbit step index
//!   payload  4 scalars (t.re, t.im, z.re, z.im), each a u32 length
//!            followed by that many bytes of radix-16 mantissa-exponent
//!            text as printed by MPFR (exact round-trip at equal precision)
//!
//! Files are written whole and never appended to, so concurrent readers are
//! safe; the name encodes the step, making the store append-only at the
//! directory level.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rug::Float;
use sha2::{Digest, Sha256};

use crate::dynamics::SkewProduct;
use crate::error::{Error, Result};
use crate::numerics::complex::BigComplex;
use crate::numerics::Scalar;

const MAGIC: &[u8; 8] = b"SKFDCK1\0";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub map_hash: [u8; 32],
    pub precision: u32,
    pub step: u64,
    pub t: BigComplex,
    pub z: BigComplex,
}

/// Identity of the map for checkpoint compatibility checks.
pub fn map_hash<S: Scalar>(f: &SkewProduct<S>) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(f.canonical_string().as_bytes());
    h.finalize().into()
}

/// File name for the checkpoint of a given orbit step.
pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("orbit-{step:012}.ckpt"))
}

fn write_float(out: &mut Vec<u8>, v: &Float) {
    let s = v.to_string_radix(16, None);
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn read_float(buf: &[u8], pos: &mut usize, prec: u32) -> Result<Float> {
    let bad = || Error::Usage("corrupt checkpoint payload".into());
    let len_bytes: [u8; 4] = buf
        .get(*pos..*pos + 4)
        .ok_or_else(bad)?
        .try_into()
        .map_err(|_| bad())?;
    *pos += 4;
    let len = u32::from_le_bytes(len_bytes) as usize;
    let text = std::str::from_utf8(buf.get(*pos..*pos + len).ok_or_else(bad)?)
        .map_err(|_| bad())?;
    *pos += len;
    let parsed = Float::parse_radix(text, 16).map_err(|_| bad())?;
    Ok(Float::with_val(prec, parsed))
}

pub fn save(dir: &Path, cp: &Checkpoint) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&cp.map_hash);
    out.extend_from_slice(&cp.precision.to_le_bytes());
    out.extend_from_slice(&cp.step.to_le_bytes());
    write_float(&mut out, &cp.t.re);
    write_float(&mut out, &cp.t.im);
    write_float(&mut out, &cp.z.re);
    write_float(&mut out, &cp.z.im);
    let path = checkpoint_path(dir, cp.step);
    // write-then-rename keeps partially written files invisible to readers
    let tmp = path.with_extension("ckpt.tmp");
    std::fs::File::create(&tmp)?.write_all(&out)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < 52 || &buf[..8] != MAGIC {
        return Err(Error::Usage(format!(
            "not a checkpoint file: {}",
            path.display()
        )));
    }
    let map_hash: [u8; 32] = buf[8..40].try_into().unwrap();
    let precision = u32::from_le_bytes(buf[40..44].try_into().unwrap());
    let step = u64::from_le_bytes(buf[44..52].try_into().unwrap());
    let mut pos = 52;
    let t_re = read_float(&buf, &mut pos, precision)?;
    let t_im = read_float(&buf, &mut pos, precision)?;
    let z_re = read_float(&buf, &mut pos, precision)?;
    let z_im = read_float(&buf, &mut pos, precision)?;
    Ok(Checkpoint {
        map_hash,
        precision,
        step,
        t: BigComplex::new(t_re, t_im),
        z: BigComplex::new(z_re, z_im),
    })
}

/// Latest usable checkpoint at or below `max_step`: same map, at least the
/// requested precision, step exactly one of the scheduled indices.
pub fn find_resume(
    dir: &Path,
    hash: &[u8; 32],
    min_precision: u32,
    scheduled: &[u64],
) -> Option<Checkpoint> {
    let mut best: Option<Checkpoint> = None;
    for &step in scheduled {
        let path = checkpoint_path(dir, step);
        if !path.exists() {
            continue;
        }
        if let Ok(cp) = load(&path) {
            if &cp.map_hash == hash
                && cp.precision >= min_precision
                && best.as_ref().map_or(true, |b| cp.step > b.step)
            {
                best = Some(cp);
            }
        }
    }
    best
}
