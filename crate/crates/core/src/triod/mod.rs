//! Triods: three polylines joined at a junction, and their trajectories.

mod flow;

pub use flow::{
    evolve, evolve_closed, rescale_blowup, rescale_blowup_at, self_similar_expander, stable_dt, step, step_closed,
    FlowOptions,
};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::Polyline;
use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::linalg::{cross, unit, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleMode {
    /// Unit tangents at the junction sum to zero.
    Balanced,
    /// Opening angles `alpha[i]` between curve `i − 1` and curve `i`.
    Fixed([f64; 3]),
}

impl AngleMode {
    pub fn alphas(&self) -> [f64; 3] {
        match *self {
            AngleMode::Balanced => [std::f64::consts::TAU / 3.0; 3],
            AngleMode::Fixed(a) => a,
        }
    }

    /// Weights `w_i` with `Σ w_i τ_i = 0` for unit tangents at the prescribed angles.
    pub fn fermat_weights(&self) -> [f64; 3] {
        let a = self.alphas();
        [a[2].sin(), a[0].sin(), a[1].sin()]
    }
}

/// Curve `i` runs from the junction (node 0) to its fixed endpoint (last
/// node); curves are ordered counter-clockwise around the junction.
#[derive(Clone, Debug, PartialEq)]
pub struct Triod {
    pub curves: [Vec<Point>; 3],
    pub angle_mode: AngleMode,
    pub time: f64,
}

impl Triod {
    pub fn from_curves(curves: [Vec<Point>; 3], angle_mode: AngleMode) -> Result<Self> {
        if curves.iter().any(|c| c.len() < 3) {
            return Err(Error::InvalidArgument("each curve needs at least 3 nodes".into()));
        }
        let o = curves[0][0];
        if curves.iter().any(|c| (c[0] - o).norm() > 1e-12) {
            return Err(Error::InvalidArgument("curves do not share the junction node".into()));
        }
        let mut curves = curves;
        for c in curves.iter_mut() {
            c[0] = o;
        }
        let t = Triod { curves, angle_mode, time: 0.0 };
        t.check_regular()?;
        Ok(t)
    }

    /// Straight segments from `junction` in the given directions, each
    /// ending where it leaves `domain`.
    pub fn straight(junction: Point, directions: [f64; 3], domain: &Domain, nodes: usize) -> Result<Self> {
        let ends = directions.map(|a| domain.ray_exit(&junction, &unit(a)));
        Self::segments(junction, ends, nodes, AngleMode::Balanced)
    }

    pub fn segments(junction: Point, ends: [Point; 3], nodes: usize, mode: AngleMode) -> Result<Self> {
        let curves = ends.map(|e| {
            (0..nodes)
                .map(|k| junction + (e - junction) * (k as f64 / (nodes - 1) as f64))
                .collect::<Vec<_>>()
        });
        Self::from_curves(curves, mode)
    }

    /// Three rays of length `radius` from the origin, sorted counter-clockwise.
    pub fn rays(directions: [f64; 3], radius: f64, nodes: usize) -> Result<Self> {
        let mut d = directions.map(|a| a.rem_euclid(std::f64::consts::TAU));
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self::segments(Point::zeros(), d.map(|a| unit(a) * radius), nodes, AngleMode::Balanced)
    }

    pub fn junction(&self) -> Point {
        self.curves[0][0]
    }

    pub fn endpoint(&self, i: usize) -> Point {
        *self.curves[i].last().unwrap()
    }

    pub fn nodes(&self, i: usize) -> usize {
        self.curves[i].len()
    }

    /// Direction of the first segment of curve `i`.
    pub fn tangent(&self, i: usize) -> Point {
        (self.curves[i][1] - self.curves[i][0]).normalize()
    }

    pub fn tangent_angle(&self, i: usize) -> f64 {
        let t = self.tangent(i);
        t.y.atan2(t.x)
    }

    /// Opening angles between consecutive curves at the junction.
    pub fn opening_angles(&self) -> [f64; 3] {
        let th = [self.tangent_angle(0), self.tangent_angle(1), self.tangent_angle(2)];
        let tau = std::f64::consts::TAU;
        [
            (th[0] - th[2]).rem_euclid(tau),
            (th[1] - th[0]).rem_euclid(tau),
            (th[2] - th[1]).rem_euclid(tau),
        ]
    }

    /// Largest violation of the angle condition of the triod's mode.
    pub fn angle_residual(&self) -> f64 {
        let a = self.opening_angles();
        let target = self.angle_mode.alphas();
        (0..3).map(|i| (a[i] - target[i]).abs()).fold(0.0, f64::max)
    }

    pub fn length(&self, i: usize) -> f64 {
        self.curves[i].windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn total_length(&self) -> f64 {
        (0..3).map(|i| self.length(i)).sum()
    }

    pub fn polyline(&self, i: usize) -> Polyline {
        Polyline::new(self.curves[i].clone(), false)
    }

    pub fn min_segment(&self) -> f64 {
        self.curves
            .iter()
            .flat_map(|c| c.windows(2).map(|w| (w[1] - w[0]).norm()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed curvature of curve `i` at the node nearest to parameter `lambda ∈ (0, 1)`,
    /// with the convention of [`Polyline::vertex_curvature`].
    pub fn curvature(&self, i: usize, lambda: f64) -> Result<f64> {
        let n = self.curves[i].len();
        let k = (lambda * (n - 1) as f64).round() as usize;
        if k == 0 || k + 1 >= n {
            return Err(Error::InvalidArgument(format!("λ = {lambda} is not interior")));
        }
        node_curvature(&self.curves[i], k).ok_or(Error::DegenerateStencil)
    }

    /// Max |curvature| over interior nodes of all curves.
    pub fn max_abs_curvature(&self) -> f64 {
        self.curves
            .iter()
            .flat_map(|c| (1..c.len() - 1).filter_map(move |k| node_curvature(c, k)))
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Triod {
        Triod {
            curves: self.curves.clone().map(|c| c.into_iter().map(|p| p * s).collect()),
            angle_mode: self.angle_mode,
            time: self.time,
        }
    }

    pub(crate) fn check_regular(&self) -> Result<()> {
        for c in &self.curves {
            for w in c.windows(2) {
                let d = (w[1] - w[0]).norm();
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::FlowSingular { time: self.time, reason: "degenerate segment".into() });
                }
            }
        }
        Ok(())
    }

    /// Checks that no two segments intersect except neighbours sharing a
    /// node and the first segments at the junction.
    pub fn check_embedded(&self) -> Result<()> {
        let mut segs: Vec<(usize, usize, Point, Point)> = Vec::new();
        for (i, c) in self.curves.iter().enumerate() {
            for k in 0..c.len() - 1 {
                segs.push((i, k, c[k], c[k + 1]));
            }
        }
        let (mut lo, mut hi) = (segs[0].2, segs[0].2);
        for s in &segs {
            lo = lo.inf(&s.2).inf(&s.3);
            hi = hi.sup(&s.2).sup(&s.3);
        }
        let nb = ((segs.len() as f64).sqrt() as usize).max(1);
        let cell = ((hi - lo).max() / nb as f64).max(1e-12);
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); nb * nb];
        let b = |v: f64| ((v / cell).floor().max(0.0) as usize).min(nb - 1);
        for (idx, s) in segs.iter().enumerate() {
            let (a, c) = (s.2.inf(&s.3) - lo, s.2.sup(&s.3) - lo);
            for j in b(a.y)..=b(c.y) {
                for i in b(a.x)..=b(c.x) {
                    bins[j * nb + i].push(idx);
                }
            }
        }
        for bin in &bins {
            for x in 0..bin.len() {
                for y in x + 1..bin.len() {
                    let (s, t) = (&segs[bin[x]], &segs[bin[y]]);
                    if s.0 == t.0 && (s.1 as isize - t.1 as isize).abs() <= 1 {
                        continue;
                    }
                    if s.0 != t.0 && s.1 == 0 && t.1 == 0 {
                        continue;
                    }
                    if segments_intersect(&s.2, &s.3, &t.2, &t.3) {
                        return Err(Error::FlowSingular {
                            time: self.time,
                            reason: format!("curves {} and {} intersect", s.0, t.0),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes `curve,lambda,x,y` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "curve,lambda,x,y")?;
        for (i, c) in self.curves.iter().enumerate() {
            for (k, p) in c.iter().enumerate() {
                writeln!(f, "{},{:.17e},{:.17e},{:.17e}", i, k as f64 / (c.len() - 1) as f64, p.x, p.y)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn node_curvature(c: &[Point], k: usize) -> Option<f64> {
    let (a, b, d) = (c[k - 1], c[k], c[k + 1]);
    let den = (b - a).norm() * (d - b).norm() * (d - a).norm();
    if den == 0.0 {
        None
    } else {
        Some(-2.0 * cross(&(b - a), &(d - b)) / den)
    }
}

fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = cross(&(b - a), &(c - a));
    let o2 = cross(&(b - a), &(d - a));
    let o3 = cross(&(d - c), &(a - c));
    let o4 = cross(&(d - c), &(b - c));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Snapshots of a triod at increasing times; all snapshots share node counts.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub triods: Vec<Triod>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    times: Vec<f64>,
    angle_mode: AngleMode,
    nodes_per_curve: [usize; 3],
    files: Vec<String>,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &Triod {
        self.triods.last().unwrap()
    }

    /// Linear interpolation of node positions in time.
    pub fn at(&self, t: f64) -> Result<Triod> {
        let (t0, t1) = (self.t_start(), self.t_end());
        let slack = 1e-12 * (1.0 + t1.abs());
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::TimeOutOfRange(t, t0, t1));
        }
        if self.times.len() == 1 {
            return Ok(self.triods[0].clone());
        }
        let k = self.times.partition_point(|&s| s < t).clamp(1, self.times.len() - 1);
        let (a, b) = (&self.triods[k - 1], &self.triods[k]);
        let span = self.times[k] - self.times[k - 1];
        let f = if span > 0.0 { ((t - self.times[k - 1]) / span).clamp(0.0, 1.0) } else { 1.0 };
        let mut curves = a.curves.clone();
        for (i, c) in curves.iter_mut().enumerate() {
            for (p, q) in c.iter_mut().zip(&b.curves[i]) {
                *p = *p * (1.0 - f) + q * f;
            }
        }
        Ok(Triod { curves, angle_mode: a.angle_mode, time: t })
    }

    /// One CSV per snapshot plus `manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (k, tr) in self.triods.iter().enumerate() {
            let name = format!("triod_{k:05}.csv");
            tr.write_csv(&dir.join(&name))?;
            files.push(name);
        }
        let first = &self.triods[0];
        let m = Manifest {
            schema_version: 1,
            times: self.times.clone(),
            angle_mode: first.angle_mode,
            nodes_per_curve: [first.nodes(0), first.nodes(1), first.nodes(2)],
            files,
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
        Ok(())
    }
}
