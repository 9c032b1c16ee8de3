//! Operator dump formats.
//!
//! Binary: magic `DLOP`, then little-endian `u32` version, `u64` dim,
//! `u32` role code, `u64` grid hash (0 when absent), followed by `dim*dim`
//! pairs of `f64` (re, im) in row-major order.
//!
//! CSV: a header line `# dim=<n>,role=<role>,grid_hash=<hex>` and then one
//! row per matrix row, `re,im` pairs separated by commas.

use std::io::{Read, Write};

use super::operator::{HermitianOperator, Role};
use crate::error::{LabError, Result};
use crate::linalg::{CMatrix, C64};

pub const DUMP_MAGIC: &[u8; 4] = b"DLOP";
pub const DUMP_VERSION: u32 = 1;

pub fn write_binary<W: Write>(op: &HermitianOperator, mut w: W) -> Result<()> {
    let m = op.dense();
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&(op.dim() as u64).to_le_bytes())?;
    w.write_all(&op.role().code().to_le_bytes())?;
    w.write_all(&op.grid_hash().unwrap_or(0).to_le_bytes())?;
    for z in m.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<HermitianOperator> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(LabError::InvalidInput("not an operator dump".into()));
    }
    let version = read_u32(&mut r)?;
    if version != DUMP_VERSION {
        return Err(LabError::InvalidInput(format!("unsupported dump version {version}")));
    }
    let dim = read_u64(&mut r)? as usize;
    let role = Role::from_code(read_u32(&mut r)?).ok_or_else(|| LabError::InvalidInput("bad role code".into()))?;
    let hash = read_u64(&mut r)?;
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re = f64::from_le_bytes(read_arr(&mut r)?);
        let im = f64::from_le_bytes(read_arr(&mut r)?);
        data.push(C64::new(re, im));
    }
    let m = CMatrix::from_shape_vec((dim, dim), data).expect("dim*dim entries");
    HermitianOperator::from_dense(role, m, (hash != 0).then_some(hash))
}

pub fn write_csv<W: Write>(op: &HermitianOperator, mut w: W) -> Result<()> {
    let m = op.dense();
    writeln!(w, "# dim={},role={:?},grid_hash={:016x}", op.dim(), op.role(), op.grid_hash().unwrap_or(0))?;
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn read_arr<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_arr(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_arr(r)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::grid::{build_grid, Geometry};
    use crate::forge::operator::assemble_dilation;

    #[test]
    fn binary_round_trip() {
        let g = build_grid(Geometry::Line1d, 9, 1.0).unwrap();
        let a = assemble_dilation(&g);
        let mut buf = Vec::new();
        write_binary(&a, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 4 + 8 + 81 * 16);
        let back = read_binary(&buf[..]).unwrap();
        assert_eq!(back.role(), Role::Conjugate);
        assert_eq!(back.grid_hash(), Some(g.hash()));
        assert_eq!(*back.dense(), *a.dense());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = build_grid(Geometry::Line1d, 8, 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&assemble_dilation(&g), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# dim=8,role=Conjugate,grid_hash="));
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[1].split(',').count(), 16);
    }
}
