//! Well classification of a field and the diffuse interface it leaves.

use crate::error::{Error, Result};
use crate::grid::VectorField2D;
use crate::linalg::Point;
use crate::potential::ThreeWellPotential;

#[derive(Clone, Debug, PartialEq)]
pub struct Interface {
    /// Nearest well where the field is within the threshold of it, `None`
    /// on the interface band and off the mask.
    pub labels: Vec<Option<usize>>,
    /// Nodes of the band.
    pub band: Vec<Point>,
    /// Sub-cell points where the nearest well changes along a grid edge;
    /// the sharp midline of the band.
    pub crossings: Vec<Point>,
}

impl Interface {
    pub fn points(&self) -> Vec<Point> {
        self.band.iter().chain(&self.crossings).copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.band.is_empty() && self.crossings.is_empty()
    }
}

/// Classifies every node (of `mask`, when given) by its nearest well.
pub fn interface_extract(
    field: &VectorField2D,
    w: &ThreeWellPotential,
    threshold: f64,
    mask: Option<&[bool]>,
) -> Result<Interface> {
    let sep = w.min_well_separation();
    if !(threshold > 0.0 && threshold < 0.5 * sep) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} outside (0, {})", 0.5 * sep)));
    }
    let g = &field.grid;
    if mask.is_some_and(|m| m.len() != g.len()) {
        return Err(Error::ShapeMismatch("mask length".into()));
    }
    let inside = |k: usize| mask.map_or(true, |m| m[k]);
    let nearest: Vec<(usize, f64)> = field.values.iter().map(|u| w.nearest_well(u)).collect();
    let mut labels = vec![None; g.len()];
    let mut band = Vec::new();
    for k in 0..g.len() {
        if !inside(k) {
            continue;
        }
        let (i, d) = nearest[k];
        if d <= threshold {
            labels[k] = Some(i);
        } else {
            band.push(g.point_at(k));
        }
    }
    let mut crossings = Vec::new();
    let n = g.n;
    for k in 0..g.len() {
        let (i, j) = g.coords(k);
        for nb in [if i + 1 < n { Some(k + 1) } else { None }, if j + 1 < n { Some(k + n) } else { None }] {
            let Some(q) = nb else { continue };
            if !inside(k) || !inside(q) || nearest[k].0 == nearest[q].0 {
                continue;
            }
            let (a, b) = (nearest[k].0, nearest[q].0);
            let f = |u: &Point| (u - w.wells[a]).norm() - (u - w.wells[b]).norm();
            let (f0, f1) = (f(&field.values[k]), f(&field.values[q]));
            let s = if f0 != f1 { (f0 / (f0 - f1)).clamp(0.0, 1.0) } else { 0.5 };
            crossings.push(g.point_at(k) + (g.point_at(q) - g.point_at(k)) * s);
        }
    }
    Ok(Interface { labels, band, crossings })
}
