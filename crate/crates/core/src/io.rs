//! Field snapshots as little-endian `f64` arrays with a JSON sidecar.
//!
//! `<stem>.bin` holds the snapshots one after another; within a snapshot
//! nodes run row by row (`x` fastest) and each node stores `(u1, u2)`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, VectorField2D};
use crate::linalg::Point;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub schema_version: u32,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub times: Vec<f64>,
    pub eps: f64,
    pub potential: String,
    pub domain: Domain,
    pub components: usize,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn write_snapshots(stem: &Path, fields: &[VectorField2D], eps: f64, potential: &str, domain: &Domain) -> Result<()> {
    let first = fields.first().ok_or_else(|| Error::InvalidArgument("no snapshots".into()))?;
    let grid = first.grid;
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::ShapeMismatch("snapshots on different grids".into()));
    }
    let (bin, json) = paths(stem);
    let mut out = std::io::BufWriter::new(std::fs::File::create(bin)?);
    for f in fields {
        for p in &f.values {
            out.write_all(&p.x.to_le_bytes())?;
            out.write_all(&p.y.to_le_bytes())?;
        }
    }
    out.flush()?;
    let header = SnapshotHeader {
        schema_version: SCHEMA_VERSION,
        nx: grid.n,
        ny: grid.n,
        x0: grid.x0,
        y0: grid.x0,
        h: grid.h,
        times: fields.iter().map(|f| f.time).collect(),
        eps,
        potential: potential.to_string(),
        domain: *domain,
        components: 2,
    };
    std::fs::write(json, serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

pub fn read_snapshots(stem: &Path) -> Result<(SnapshotHeader, Vec<VectorField2D>)> {
    let (bin, json) = paths(stem);
    let header: SnapshotHeader = serde_json::from_str(&std::fs::read_to_string(json)?)?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidArgument(format!("schema version {}", header.schema_version)));
    }
    if header.nx != header.ny || header.x0 != header.y0 || header.components != 2 {
        return Err(Error::ShapeMismatch("only square two-component grids are supported".into()));
    }
    let grid = Grid { n: header.nx, x0: header.x0, h: header.h };
    let mut bytes = Vec::new();
    std::fs::File::open(bin)?.read_to_end(&mut bytes)?;
    let per = grid.len() * 16;
    if bytes.len() != per * header.times.len() {
        return Err(Error::ShapeMismatch(format!("{} bytes for {} snapshots of {} nodes", bytes.len(), header.times.len(), grid.len())));
    }
    let word = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let fields = header
        .times
        .iter()
        .enumerate()
        .map(|(s, &t)| {
            let values = (0..grid.len()).map(|k| Point::new(word(s * per + 16 * k), word(s * per + 16 * k + 8))).collect();
            VectorField2D { grid, values, time: t }
        })
        .collect();
    Ok((header, fields))
}
