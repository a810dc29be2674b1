//! Domains, uniform grids and vector fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pt, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Domain {
    /// Disk centred at the origin.
    Disk { radius: f64 },
    /// Axis-aligned square `[-half, half]²`.
    Square { half: f64 },
}

impl Domain {
    pub fn unit_disk() -> Self {
        Domain::Disk { radius: 1.0 }
    }

    pub fn unit_square() -> Self {
        Domain::Square { half: 0.5 }
    }

    /// Half side of the bounding box.
    pub fn half_extent(&self) -> f64 {
        match *self {
            Domain::Disk { radius } => radius,
            Domain::Square { half } => half,
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        match *self {
            Domain::Disk { radius } => radius - p.norm(),
            Domain::Square { half } => (half - p.x.abs()).min(half - p.y.abs()),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.boundary_distance(p) > 0.0
    }

    /// Point where the ray from `from` in direction `dir` leaves the domain.
    pub fn ray_exit(&self, from: &Point, dir: &Point) -> Point {
        let d = dir.normalize();
        match *self {
            Domain::Disk { radius } => {
                let b = from.dot(&d);
                let c = from.norm_squared() - radius * radius;
                let s = -b + (b * b - c).max(0.0).sqrt();
                from + d * s
            }
            Domain::Square { half } => {
                let mut s = f64::INFINITY;
                for k in 0..2 {
                    if d[k] > 0.0 {
                        s = s.min((half - from[k]) / d[k]);
                    } else if d[k] < 0.0 {
                        s = s.min((-half - from[k]) / d[k]);
                    }
                }
                from + d * s
            }
        }
    }
}

/// Square node grid `x0 + i h`, `i = 0..n` in both directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub x0: f64,
    pub h: f64,
}

impl Grid {
    /// Grid with `cells` cells across the bounding box of the domain.
    pub fn cover(domain: &Domain, cells: usize) -> Self {
        let half = domain.half_extent();
        Grid { n: cells + 1, x0: -half, h: 2.0 * half / cells as f64 }
    }

    pub fn centered(half: f64, cells: usize) -> Self {
        Grid { n: cells + 1, x0: -half, h: 2.0 * half / cells as f64 }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        pt(self.x0 + i as f64 * self.h, self.x0 + j as f64 * self.h)
    }

    pub fn point_at(&self, k: usize) -> Point {
        let (i, j) = self.coords(k);
        self.point(i, j)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2D {
    pub grid: Grid,
    pub values: Vec<Point>,
    pub time: f64,
}

impl VectorField2D {
    pub fn new(grid: Grid, values: Vec<Point>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        Ok(VectorField2D { grid, values, time })
    }

    pub fn constant(grid: Grid, value: Point, time: f64) -> Self {
        VectorField2D { grid, values: vec![value; grid.len()], time }
    }

    pub fn at(&self, i: usize, j: usize) -> Point {
        self.values[self.grid.index(i, j)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid, time: f64) -> Self {
        ScalarField2D { grid, values: vec![0.0; grid.len()], time }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, &b| a.max(b.abs()))
    }
}

impl Grid {
    /// Nodes of the domain whose axis stencil of half-width `reach` stays inside it.
    pub fn mask(&self, domain: &Domain, reach: usize) -> Vec<bool> {
        let m = reach as f64 * self.h;
        (0..self.len())
            .map(|k| {
                let (i, j) = self.coords(k);
                i >= reach
                    && j >= reach
                    && i + reach < self.n
                    && j + reach < self.n
                    && domain.contains(&self.point(i, j))
                    && domain.boundary_distance(&self.point(i, j)) >= m
            })
            .collect()
    }
}
