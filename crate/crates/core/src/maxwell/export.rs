//! Snapshot dumps and diagnostics time series.
//!
//! A snapshot is a flat little-endian `f64` file holding `E_x, E_y, E_z,
//! B_x, B_y, B_z, rho` back to back, plus a JSON sidecar (`<path>.json`)
//! naming each array with its shape and offset.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Array3, EMFieldState, MaxwellDiagnostics};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayEntry {
    pub name: String,
    pub dims: [usize; 3],
    /// Offset in values, not bytes.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub cells: [usize; 3],
    pub lengths: [f64; 3],
    pub spacing: [f64; 3],
    pub time: f64,
    pub dt: f64,
    pub steps: usize,
    pub arrays: Vec<ArrayEntry>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_snapshot(path: &Path, state: &EMFieldState) -> Result<SnapshotMeta> {
    let g = state.geometry();
    let named: Vec<(&str, &Array3)> = vec![
        ("E_x", &state.e.comp[0]),
        ("E_y", &state.e.comp[1]),
        ("E_z", &state.e.comp[2]),
        ("B_x", &state.b.comp[0]),
        ("B_y", &state.b.comp[1]),
        ("B_z", &state.b.comp[2]),
        ("rho", &state.rho),
    ];
    let mut w = BufWriter::new(File::create(path)?);
    let mut arrays = Vec::new();
    let mut offset = 0;
    for (name, a) in named {
        for v in a.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        arrays.push(ArrayEntry {
            name: name.into(),
            dims: a.dims(),
            offset,
        });
        offset += a.as_slice().len();
    }
    w.flush()?;
    let meta = SnapshotMeta {
        cells: g.cells,
        lengths: g.lengths,
        spacing: g.spacing(),
        time: state.time(),
        dt: state.dt(),
        steps: state.steps(),
        arrays,
    };
    std::fs::write(sidecar(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

/// Reads a snapshot back as its sidecar plus the flat value array.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotMeta, Vec<f64>)> {
    let text = std::fs::read_to_string(sidecar(path))?;
    let meta: SnapshotMeta = serde_json::from_str(&text)?;
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let expected: usize = meta.arrays.iter().map(|a| a.dims.iter().product::<usize>()).sum();
    if bytes.len() != 8 * expected {
        return Err(Error::config(format!(
            "snapshot {} holds {} bytes, sidecar describes {}",
            path.display(),
            bytes.len(),
            8 * expected
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((meta, values))
}

pub fn write_diagnostics_csv(path: &Path, series: &[MaxwellDiagnostics]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,energy,px,py,pz,Lz,gauss_res,divB_res")?;
    for d in series {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            d.t,
            d.energy,
            d.momentum[0],
            d.momentum[1],
            d.momentum[2],
            d.angular_momentum_z,
            d.gauss_residual,
            d.div_b_residual
        )?;
    }
    w.flush()?;
    Ok(())
}
