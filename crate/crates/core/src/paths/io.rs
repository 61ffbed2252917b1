//! Ensemble serialization.
//!
//! Binary layout (little endian):
//!
//! ```text
//! magic      8 bytes   b"FWDCENS1"
//! id_len     u32
//! id         id_len bytes, UTF-8 generator id
//! seed       u64
//! n_steps    u64
//! n_paths    u64
//! values     n_paths * (n_steps + 1) f64, path-major
//! ```

use std::io::{Read, Write};

use super::{PathEnsemble, SamplePath, TimeGrid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"FWDCENS1";

pub fn write_binary<W: Write>(ensemble: &PathEnsemble, mut w: W) -> Result<()> {
    let id = ensemble.generator_id().as_bytes();
    w.write_all(MAGIC)?;
    w.write_all(&(id.len() as u32).to_le_bytes())?;
    w.write_all(id)?;
    w.write_all(&ensemble.seed().to_le_bytes())?;
    w.write_all(&(ensemble.grid().n_steps() as u64).to_le_bytes())?;
    w.write_all(&(ensemble.len() as u64).to_le_bytes())?;
    for p in ensemble.paths() {
        for v in p.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<PathEnsemble> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not an ensemble file".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut id = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut id)?;
    let id = String::from_utf8(id).map_err(|e| Error::Io(e.to_string()))?;
    let seed = read_u64(&mut r)?;
    let n_steps = read_u64(&mut r)? as usize;
    let n_paths = read_u64(&mut r)? as usize;
    let grid = TimeGrid::new(n_steps)?;
    let mut paths = Vec::with_capacity(n_paths);
    let mut buf = vec![0u8; 8 * grid.len()];
    for _ in 0..n_paths {
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        paths.push(SamplePath::new(grid, values)?);
    }
    PathEnsemble::new(grid, paths, seed, id)
}

/// One row per node, one column per path: `t,path_0,path_1,...`.
pub fn to_csv(ensemble: &PathEnsemble) -> String {
    let grid = ensemble.grid();
    let mut out = String::from("t");
    for j in 0..ensemble.len() {
        out.push_str(&format!(",path_{j}"));
    }
    out.push('\n');
    for i in 0..grid.len() {
        out.push_str(&grid.time(i).to_string());
        for p in ensemble.paths() {
            out.push(',');
            out.push_str(&p.value(i).to_string());
        }
        out.push('\n');
    }
    out
}
