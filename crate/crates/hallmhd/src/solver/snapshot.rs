//! Binary checkpoint format: a little-endian header followed by raw
//! coefficient blocks. Bytes round-trip bit-exactly, so a resumed run
//! continues on the identical trajectory.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex;

use crate::data::ModelParams;
use crate::error::{Error, Result};
use crate::spectral::{Grid, VectorField};

type C64 = Complex<f64>;

const MAGIC: &[u8; 4] = b"HMHD";
const VERSION: u32 = 1;

/// Everything a resume needs besides the coefficients themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub n: usize,
    pub period: f64,
    pub params: ModelParams,
    pub rng_seed: u64,
    pub t: f64,
    pub step_count: u64,
    pub dt_last: f64,
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn take_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn take_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn take_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Write `fields` (all on one grid) under `header` to `path`.
pub fn write_snapshot(
    path: &Path,
    header: &SnapshotHeader,
    fields: &[&VectorField],
) -> Result<()> {
    for f in fields {
        if f.grid().n() != header.n {
            return Err(Error::GridMismatch(f.grid().n(), header.n));
        }
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u64(&mut w, header.n as u64)?;
    put_f64(&mut w, header.period)?;
    let p = &header.params;
    for v in [p.nu, p.mu, p.eta, p.delta, p.m0, p.m1, p.m2, p.alpha1, p.alpha2] {
        put_f64(&mut w, v)?;
    }
    put_u64(&mut w, header.rng_seed)?;
    put_f64(&mut w, header.t)?;
    put_u64(&mut w, header.step_count)?;
    put_f64(&mut w, header.dt_last)?;
    put_u32(&mut w, fields.len() as u32)?;
    for f in fields {
        for c in 0..3 {
            for z in f.comp(c) {
                put_f64(&mut w, z.re)?;
                put_f64(&mut w, z.im)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot back; the grid is rebuilt from the stored `n`, period.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<VectorField>)> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::SnapshotFormat(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = take_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n = take_u64(&mut r)? as usize;
    let period = take_f64(&mut r)?;
    let mut raw = [0.0f64; 9];
    for v in raw.iter_mut() {
        *v = take_f64(&mut r)?;
    }
    let params = ModelParams {
        nu: raw[0],
        mu: raw[1],
        eta: raw[2],
        delta: raw[3],
        m0: raw[4],
        m1: raw[5],
        m2: raw[6],
        alpha1: raw[7],
        alpha2: raw[8],
    };
    let rng_seed = take_u64(&mut r)?;
    let t = take_f64(&mut r)?;
    let step_count = take_u64(&mut r)?;
    let dt_last = take_f64(&mut r)?;
    let n_fields = take_u32(&mut r)? as usize;
    let grid = Grid::new(n, period)?;
    let mut fields = Vec::with_capacity(n_fields);
    for _ in 0..n_fields {
        let mut f = VectorField::zeros(grid.clone());
        for c in 0..3 {
            for z in f.comp_mut(c) {
                let re = take_f64(&mut r)?;
                let im = take_f64(&mut r)?;
                *z = C64::new(re, im);
            }
        }
        fields.push(f);
    }
    let mut tail = [0u8; 1];
    match r.read(&mut tail)? {
        0 => {}
        _ => {
            return Err(Error::SnapshotFormat(
                "trailing bytes after the last coefficient block".into(),
            ))
        }
    }
    let header = SnapshotHeader {
        n,
        period,
        params,
        rng_seed,
        t,
        step_count,
        dt_last,
    };
    Ok((header, fields))
}
