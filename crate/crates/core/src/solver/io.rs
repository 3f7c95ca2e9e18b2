//! Run-artifact serialization: a binary path-array format and CSV.
//!
//! Binary layout, little-endian: magic `PFE1`, `u32` dim, `u64` n_steps,
//! `f64` horizon, `u64` n_paths, weights (`n_paths` doubles), then each path's
//! points row-major. Round-trips are bit-exact.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::ensemble::PathEnsemble;
use crate::model::grid::TimeGrid;
use crate::model::path::Path;

const MAGIC: &[u8; 4] = b"PFE1";

pub fn write_binary<W: Write>(ens: &PathEnsemble, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(ens.dim() as u32).to_le_bytes())?;
    w.write_all(&(ens.grid().n_steps() as u64).to_le_bytes())?;
    w.write_all(&ens.grid().t_end().to_le_bytes())?;
    w.write_all(&(ens.len() as u64).to_le_bytes())?;
    for i in 0..ens.len() {
        w.write_all(&ens.weight(i).to_le_bytes())?;
    }
    for i in 0..ens.len() {
        for v in ens.path(i).values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<PathEnsemble> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidInput("bad magic in path-array stream".into()));
    }
    let dim = read_u32(r)? as usize;
    let n_steps = read_u64(r)? as usize;
    let t_end = read_f64(r)?;
    let n_paths = read_u64(r)? as usize;
    let grid = TimeGrid::new(t_end, n_steps)?;
    let mut weights = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        weights.push(read_f64(r)?);
    }
    let mut paths = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let mut values = Vec::with_capacity(grid.n_points() * dim);
        for _ in 0..grid.n_points() * dim {
            values.push(read_f64(r)?);
        }
        paths.push(Path::from_values(grid, dim, values)?);
    }
    PathEnsemble::weighted(paths, weights)
}

/// One row per particle per grid index: `particle,k,t,x0..x{d-1}`.
pub fn write_csv<W: Write>(ens: &PathEnsemble, w: &mut W) -> Result<()> {
    write!(w, "particle,k,t")?;
    for c in 0..ens.dim() {
        write!(w, ",x{c}")?;
    }
    writeln!(w)?;
    for i in 0..ens.len() {
        for k in 0..ens.grid().n_points() {
            write!(w, "{i},{k},{}", ens.grid().time(k))?;
            for v in ens.path(i).point(k) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
