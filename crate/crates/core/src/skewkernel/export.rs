//! KernelBundle files: CSV for inspection, a little-endian binary grid for reuse.
//!
//! Binary layout: magic `RMTKB\0\0\x01`, u32 version, u8 scale tag
//! (0 native, 1 edge), f64 γ, u64 n, u64 nx, u64 ny, the grids, then
//! K, S, D, I in row-major order.

use super::{KernelBundle, Scale};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"RMTKB\0\0\x01";
const VERSION: u32 = 1;

pub fn write_bundle_csv(b: &KernelBundle, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,y,K,S,D,I")?;
    for (i, x) in b.grid_x.iter().enumerate() {
        for (j, y) in b.grid_y.iter().enumerate() {
            writeln!(
                out,
                "{x:e},{y:e},{:e},{:e},{:e},{:e}",
                b.k[(i, j)],
                b.s[(i, j)],
                b.d[(i, j)],
                b.i[(i, j)]
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_bundle(b: &KernelBundle, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let (tag, gamma, n) = match b.scale {
        Scale::Native => (0u8, 0.0, 0u64),
        Scale::Edge { gamma, n } => (1u8, gamma, n as u64),
    };
    buf.push(tag);
    buf.extend_from_slice(&gamma.to_le_bytes());
    for v in [n, b.grid_x.len() as u64, b.grid_y.len() as u64] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in b.grid_x.iter().chain(&b.grid_y) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for m in [&b.k, &b.s, &b.d, &b.i] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                buf.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_bundle(path: &Path) -> Result<KernelBundle> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a kernel bundle file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported bundle version {version}"
        )));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let mut b8 = [0u8; 8];
    let mut f64_ = |r: &mut dyn Read| -> Result<f64> {
        r.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let gamma = f64_(&mut r)?;
    let mut u = [0u64; 3];
    for v in u.iter_mut() {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *v = u64::from_le_bytes(b);
    }
    let (n, nx, ny) = (u[0] as usize, u[1] as usize, u[2] as usize);
    let scale = match tag[0] {
        0 => Scale::Native,
        1 => Scale::Edge { gamma, n },
        t => return Err(Error::Format(format!("unknown scale tag {t}"))),
    };
    let mut read_vec = |len: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; 8 * len];
        r.read_exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let grid_x = read_vec(nx)?;
    let grid_y = read_vec(ny)?;
    let mut mats = Vec::with_capacity(4);
    for _ in 0..4 {
        let v = read_vec(nx * ny)?;
        mats.push(DMatrix::from_row_slice(nx, ny, &v));
    }
    let i = mats.pop().unwrap();
    let d = mats.pop().unwrap();
    let s = mats.pop().unwrap();
    let k = mats.pop().unwrap();
    Ok(KernelBundle {
        grid_x,
        grid_y,
        k,
        s,
        d,
        i,
        scale,
    })
}
