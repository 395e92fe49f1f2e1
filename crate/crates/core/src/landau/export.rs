//! Offline dumps of the assembled operator.
//!
//! Binary layout (little endian):
//!
//! ```text
//! magic      8 bytes  "RVMLOP01"
//! n_per_axis u64
//! p_max      f64
//! nodes      u64, then 3 f64 per node
//! dim        u64, then dim * dim f64 (row-major L)
//! head       u64, then that many f64 (smallest eigenvalues)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::operator::LinearizedOperator;
use super::spectrum::GapReport;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"RVMLOP01";

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDump {
    pub n_per_axis: usize,
    pub p_max: f64,
    pub nodes: Vec<[f64; 3]>,
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub matrix: Vec<f64>,
    pub eigen_head: Vec<f64>,
}

pub fn write_operator_dump(path: &Path, op: &LinearizedOperator, eigen_head: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let grid = op.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(grid.n_per_axis() as u64).to_le_bytes())?;
    w.write_all(&grid.p_max().to_le_bytes())?;
    w.write_all(&(grid.len() as u64).to_le_bytes())?;
    for p in grid.nodes() {
        for c in p.iter() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    let dim = op.dim();
    w.write_all(&(dim as u64).to_le_bytes())?;
    for i in 0..dim {
        for j in 0..dim {
            w.write_all(&op.entry(i, j).to_le_bytes())?;
        }
    }
    w.write_all(&(eigen_head.len() as u64).to_le_bytes())?;
    for v in eigen_head {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_count(r: &mut impl Read, limit: u64, what: &str) -> Result<usize> {
    let n = read_u64(r)?;
    if n > limit {
        return Err(Error::config(format!(
            "operator dump declares {n} {what}, more than {limit}"
        )));
    }
    Ok(n as usize)
}

pub fn read_operator_dump(path: &Path) -> Result<OperatorDump> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::config(format!("{} is not an operator dump", path.display())));
    }
    let n_per_axis = read_count(&mut r, 1 << 10, "points per axis")?;
    let p_max = read_f64(&mut r)?;
    let count = read_count(&mut r, 1 << 30, "nodes")?;
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        nodes.push([read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?]);
    }
    let dim = read_count(&mut r, 1 << 16, "rows")?;
    let mut matrix = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        matrix.push(read_f64(&mut r)?);
    }
    let head = read_count(&mut r, dim as u64, "eigenvalues")?;
    let mut eigen_head = Vec::with_capacity(head);
    for _ in 0..head {
        eigen_head.push(read_f64(&mut r)?);
    }
    Ok(OperatorDump {
        n_per_axis,
        p_max,
        nodes,
        dim,
        matrix,
        eigen_head,
    })
}

/// `index,eigenvalue,relative` rows for the reported head of the spectrum.
pub fn write_spectrum_csv(path: &Path, report: &GapReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,eigenvalue,relative")?;
    for (i, v) in report.smallest.iter().enumerate() {
        writeln!(w, "{i},{v:e},{:e}", v / report.norm_l)?;
    }
    writeln!(
        w,
        "deflated,{:e},{:e}",
        report.delta_hat,
        report.delta_hat / report.norm_l
    )?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::PlasmaPair;
    use crate::kernel::KernelParams;
    use crate::landau::{assemble_l, AssemblyOptions};
    use crate::vgrid::VelocityGrid;

    #[test]
    fn dump_round_trips() {
        let g = VelocityGrid::centered(4, 3.0).unwrap();
        let op = assemble_l(
            &g,
            &g.staggered_companion(),
            PlasmaPair::default(),
            KernelParams::default(),
            &AssemblyOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.bin");
        write_operator_dump(&path, &op, &[0.0, 1.5]).unwrap();
        let d = read_operator_dump(&path).unwrap();
        assert_eq!(d.n_per_axis, 4);
        assert_eq!(d.dim, 128);
        assert_eq!(d.eigen_head, vec![0.0, 1.5]);
        assert_eq!(d.matrix[5 * 128 + 7], op.entry(5, 7));
        assert_eq!(d.nodes[3], [g.nodes()[3].x, g.nodes()[3].y, g.nodes()[3].z]);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        std::fs::write(&path, b"not a dump at all").unwrap();
        assert!(matches!(read_operator_dump(&path), Err(Error::Config(_))));
    }
}
