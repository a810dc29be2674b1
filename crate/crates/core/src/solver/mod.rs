//! Time stepping for `∂_t u = Δu − ∇W(u)/ε²` on a domain with Dirichlet
//! data, the Duhamel fixed-point iteration, and interface extraction.
//!
//! Nodes strictly inside the domain are unknowns; every other node of the
//! covering grid carries the boundary data (a staircase approximation of
//! the boundary).

pub mod duhamel;
pub mod interface;

use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, VectorField2D};
use crate::linalg::{conjugate_gradient, Point};
use crate::par::Exec;
use crate::potential::ThreeWellPotential;
use crate::triod::Trajectory;

pub use duhamel::{duhamel_iterate, DuhamelRun};
pub use interface::{interface_extract, Interface};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Implicit Laplacian, explicit nonlinearity.
    SemiImplicit,
    Explicit,
    /// Implicit Laplacian and implicit `Λu/ε²`, explicit `∇W(u) − Λu`.
    ConvexSplit,
    /// Picard sweeps of the Duhamel formula (square domains only).
    DuhamelIteration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub domain: Domain,
    /// Cells across the bounding box.
    pub resolution: usize,
    pub eps: f64,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    /// Time step; the stability bound of the scheme when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    pub scheme: Scheme,
    /// Output times in `[t_start, t_end]`; `t_end` alone when empty.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_sweep_tol")]
    pub sweep_tol: f64,
}

fn default_sweeps() -> usize {
    40
}

fn default_sweep_tol() -> f64 {
    1e-10
}

impl SolveConfig {
    pub fn new(domain: Domain, resolution: usize, eps: f64, t_end: f64, scheme: Scheme) -> Self {
        SolveConfig {
            domain,
            resolution,
            eps,
            t_start: 0.0,
            t_end,
            dt: None,
            scheme,
            snapshots: Vec::new(),
            sweeps: default_sweeps(),
            sweep_tol: default_sweep_tol(),
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::cover(&self.domain, self.resolution)
    }

    fn validate(&self) -> Result<Vec<f64>> {
        if self.resolution < 4 {
            return Err(Error::InvalidArgument(format!("resolution {}", self.resolution)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps = {}", self.eps)));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::InvalidArgument(format!("empty time interval [{}, {}]", self.t_start, self.t_end)));
        }
        let mut snaps = if self.snapshots.is_empty() { vec![self.t_end] } else { self.snapshots.clone() };
        snaps.sort_by(f64::total_cmp);
        snaps.dedup();
        if snaps[0] < self.t_start || *snaps.last().unwrap() > self.t_end {
            return Err(Error::InvalidArgument("snapshot times outside [t_start, t_end]".into()));
        }
        Ok(snaps)
    }

    /// Largest admissible step for the configured scheme given the Hessian bound `lam`.
    pub fn stability_bound(&self, lam: f64) -> f64 {
        let h = self.grid().h;
        let reaction = self.eps * self.eps / (2.0 * lam.max(1e-12));
        match self.scheme {
            Scheme::Explicit => reaction.min(h * h / 4.0),
            Scheme::SemiImplicit | Scheme::ConvexSplit | Scheme::DuhamelIteration => reaction,
        }
    }
}

/// Space-time data sampled at many points at once.
pub trait FieldData: Sync {
    fn sample(&self, points: &[Point], t: f64, exec: Exec) -> Result<Vec<Point>>;
}

impl<F> FieldData for F
where
    F: Fn(&Point, f64) -> Point + Sync,
{
    fn sample(&self, points: &[Point], t: f64, exec: Exec) -> Result<Vec<Point>> {
        Ok(exec.map(points.len(), |k| self(&points[k], t)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzField {
    /// `φ_ε`, the boundary datum.
    Boundary,
    /// `φ^η_ε`, the boundary datum cut off near the junction.
    Lift,
    /// `v_ε`; at the initial time this is `ψ_ε`.
    Glued,
}

/// One of the ansatz fields along a triod trajectory.
#[derive(Clone, Copy, Debug)]
pub struct AnsatzData<'a> {
    pub ansatz: Ansatz<'a>,
    pub traj: &'a Trajectory,
    pub field: AnsatzField,
}

impl<'a> FieldData for AnsatzData<'a> {
    fn sample(&self, points: &[Point], t: f64, exec: Exec) -> Result<Vec<Point>> {
        let fr = self.ansatz.frame_at(self.traj, t.clamp(self.traj.t_start(), self.traj.t_end()))?;
        exec.map(points.len(), |k| match self.field {
            AnsatzField::Boundary => fr.phi(&points[k]),
            AnsatzField::Lift => fr.phi_eta(&points[k]),
            AnsatzField::Glued => fr.v(&points[k]),
        })
        .into_iter()
        .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDiagnostics {
    pub time: f64,
    /// `∫ ½|∇u|² + W(u)/ε²` over edges and nodes touching the unknowns.
    pub energy: f64,
    pub sup_norm: f64,
    /// `max(sup|ψ|, sup|boundary data so far|, R_W)`.
    pub max_bound: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub snapshots: Vec<VectorField2D>,
    pub diagnostics: Vec<SnapshotDiagnostics>,
    /// Nodes strictly inside the domain.
    pub unknown: Vec<bool>,
    pub dt: f64,
    pub steps: usize,
}

/// Unknown/Dirichlet split of the covering grid.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub grid: Grid,
    pub unknown: Vec<bool>,
    /// Dirichlet nodes with an unknown neighbour.
    pub ring: Vec<usize>,
    /// All Dirichlet nodes.
    pub fixed: Vec<usize>,
}

impl Layout {
    pub fn new(domain: &Domain, grid: Grid) -> Self {
        let n = grid.n;
        let unknown: Vec<bool> = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                i > 0 && j > 0 && i + 1 < n && j + 1 < n && domain.contains(&grid.point_at(k))
            })
            .collect();
        let fixed: Vec<usize> = (0..grid.len()).filter(|&k| !unknown[k]).collect();
        let ring = fixed
            .iter()
            .copied()
            .filter(|&k| {
                let (i, j) = grid.coords(k);
                (i > 0 && unknown[k - 1])
                    || (i + 1 < n && unknown[k + 1])
                    || (j > 0 && unknown[k - n])
                    || (j + 1 < n && unknown[k + n])
            })
            .collect();
        Layout { grid, unknown, ring, fixed }
    }

    pub fn points(&self, nodes: &[usize]) -> Vec<Point> {
        nodes.iter().map(|&k| self.grid.point_at(k)).collect()
    }

    /// 5-point Laplacian at the unknown nodes, zero elsewhere.
    pub fn laplacian(&self, u: &[Point], exec: Exec) -> Vec<Point> {
        let n = self.grid.n;
        let ih2 = 1.0 / (self.grid.h * self.grid.h);
        let mut out = vec![Point::zeros(); u.len()];
        exec.chunks_mut(&mut out, n, |j, row| {
            for (i, slot) in row.iter_mut().enumerate() {
                let k = j * n + i;
                if self.unknown[k] {
                    *slot = (u[k - 1] + u[k + 1] + u[k - n] + u[k + n] - u[k] * 4.0) * ih2;
                }
            }
        });
        out
    }

    pub fn energy(&self, w: &ThreeWellPotential, u: &[Point], eps: f64) -> f64 {
        let n = self.grid.n;
        let h2 = self.grid.h * self.grid.h;
        let mut e = 0.0;
        for k in 0..u.len() {
            let (i, j) = self.grid.coords(k);
            if self.unknown[k] {
                e += h2 * w.eval(&u[k]) / (eps * eps);
            }
            // each edge once, when it touches an unknown
            if i + 1 < n && (self.unknown[k] || self.unknown[k + 1]) {
                e += 0.5 * (u[k + 1] - u[k]).norm_squared();
            }
            if j + 1 < n && (self.unknown[k] || self.unknown[k + n]) {
                e += 0.5 * (u[k + n] - u[k]).norm_squared();
            }
        }
        e
    }

    pub fn diagnostics(&self, w: &ThreeWellPotential, u: &[Point], eps: f64, t: f64, max_bound: f64) -> SnapshotDiagnostics {
        let sup = self.sup_unknown(u);
        SnapshotDiagnostics {
            time: t,
            energy: self.energy(w, u, eps),
            sup_norm: sup,
            max_bound,
            within_bound: sup <= max_bound * (1.0 + 1e-9),
        }
    }

    pub fn sup_unknown(&self, u: &[Point]) -> f64 {
        u.iter()
            .zip(&self.unknown)
            .filter(|(_, &m)| m)
            .fold(0.0, |a: f64, (p, _)| if p.iter().all(|v| v.is_finite()) { a.max(p.norm()) } else { f64::INFINITY })
    }

    /// Solves `(a I − dt Δ) x = rhs` on the unknowns; Dirichlet entries of
    /// `x` are read as data and left untouched.
    pub fn implicit_solve(&self, a: f64, dt: f64, rhs: &[Point], x: &mut [Point], exec: Exec) -> Result<()> {
        let n = self.grid.n;
        let r = dt / (self.grid.h * self.grid.h);
        // move the Dirichlet neighbours to the right-hand side
        let mut b = vec![0.0; 2 * x.len()];
        let mut x0 = vec![0.0; 2 * x.len()];
        for k in 0..x.len() {
            if !self.unknown[k] {
                continue;
            }
            let mut v = rhs[k];
            for nb in [k - 1, k + 1, k - n, k + n] {
                if !self.unknown[nb] {
                    v += x[nb] * r;
                }
            }
            b[2 * k] = v.x;
            b[2 * k + 1] = v.y;
            x0[2 * k] = x[k].x;
            x0[2 * k + 1] = x[k].y;
        }
        let unknown = &self.unknown;
        let apply = |p: &[f64], y: &mut [f64]| {
            exec.chunks_mut(y, 2 * n, |j, row| {
                for i in 0..n {
                    let k = j * n + i;
                    for c in 0..2 {
                        row[2 * i + c] = if unknown[k] {
                            let mut acc = (a + 4.0 * r) * p[2 * k + c];
                            for nb in [k - 1, k + 1, k - n, k + n] {
                                if unknown[nb] {
                                    acc -= r * p[2 * nb + c];
                                }
                            }
                            acc
                        } else {
                            p[2 * k + c]
                        };
                    }
                }
            });
        };
        conjugate_gradient(apply, &b, &mut x0, 1e-12, 10_000)?;
        for k in 0..x.len() {
            if self.unknown[k] {
                x[k] = Point::new(x0[2 * k], x0[2 * k + 1]);
            }
        }
        Ok(())
    }
}

/// Range of the data, used for the Hessian bound and the blow-up test.
pub(crate) fn data_range(w: &ThreeWellPotential, init: &[Point], bdry: &[Point]) -> f64 {
    init.iter().chain(bdry).map(|p| p.norm()).fold(w.max_well_norm(), f64::max)
}

pub(crate) fn time_levels(t_start: f64, snaps: &[f64], dt: f64) -> Vec<f64> {
    // uniform steps, shortened to land on every snapshot
    let mut out = vec![t_start];
    let mut t = t_start;
    for &s in snaps {
        while s - t > 1e-12 * dt.max(s.abs()) {
            let m = ((s - t) / dt - 1e-9).ceil().max(1.0);
            let step = (s - t) / m;
            t = if m == 1.0 { s } else { t + step };
            out.push(t);
        }
    }
    out
}

/// Solves the parabolic system from `initial` with Dirichlet data `boundary`.
pub fn solve(
    config: &SolveConfig,
    w: &ThreeWellPotential,
    boundary: &dyn FieldData,
    initial: &dyn FieldData,
    exec: Exec,
) -> Result<Solution> {
    if config.scheme == Scheme::DuhamelIteration {
        return duhamel_iterate(config, w, boundary, initial, None, config.sweeps, exec).map(|r| r.solution);
    }
    let snaps = config.validate()?;
    let grid = config.grid();
    let layout = Layout::new(&config.domain, grid);
    let all_pts: Vec<Point> = (0..grid.len()).map(|k| grid.point_at(k)).collect();
    let ring_pts = layout.points(&layout.ring);
    let fixed_pts = layout.points(&layout.fixed);

    let t0 = config.t_start;
    let mut u = initial.sample(&all_pts, t0, exec)?;
    let ring0 = boundary.sample(&ring_pts, t0, exec)?;
    let range = data_range(w, &u, &ring0);
    for (q, &k) in layout.ring.iter().enumerate() {
        if (u[k] - ring0[q]).norm() > 1e-6 * (1.0 + range) {
            let p = grid.point_at(k);
            return Err(Error::InvalidArgument(format!(
                "initial and boundary data differ at ({:.4}, {:.4}) by {:.3e}",
                p.x,
                p.y,
                (u[k] - ring0[q]).norm()
            )));
        }
    }
    for (q, &k) in layout.ring.iter().enumerate() {
        u[k] = ring0[q];
    }
    let lam = w.max_hessian_eigenvalue(1.1 * range);
    let bound = config.stability_bound(lam);
    let dt = match config.dt {
        Some(d) if !(d > 0.0) => return Err(Error::InvalidArgument(format!("dt = {d}"))),
        Some(d) if d > bound * (1.0 + 1e-12) && config.scheme != Scheme::ConvexSplit => {
            return Err(Error::InvalidArgument(format!("dt = {d} above the stability bound {bound:.3e}")));
        }
        Some(d) => d,
        None => bound,
    };
    let ie2 = 1.0 / (config.eps * config.eps);
    let r_w = w.coercivity_radius();
    let psi_sup = layout.sup_unknown(&u);
    let mut data_sup = ring0.iter().map(|p| p.norm()).fold(0.0, f64::max);

    let levels = time_levels(t0, &snaps, dt);
    let mut snapshots = Vec::with_capacity(snaps.len());
    let mut diagnostics = Vec::with_capacity(snaps.len());
    let mut record = |u: &[Point], t: f64, data_sup: f64| -> Result<()> {
        let mut field = u.to_vec();
        for (q, v) in boundary.sample(&fixed_pts, t, exec)?.into_iter().enumerate() {
            field[layout.fixed[q]] = v;
        }
        diagnostics.push(layout.diagnostics(w, &field, config.eps, t, psi_sup.max(data_sup).max(r_w)));
        snapshots.push(VectorField2D::new(grid, field, t)?);
        Ok(())
    };
    let mut next_snap = 0;
    if (snaps[0] - t0).abs() <= 1e-12 {
        record(&u, t0, data_sup)?;
        next_snap = 1;
    }
    let mut steps = 0;
    for win in levels.windows(2) {
        let (ta, tb) = (win[0], win[1]);
        let step = tb - ta;
        let ring = boundary.sample(&ring_pts, tb, exec)?;
        data_sup = ring.iter().map(|p| p.norm()).fold(data_sup, f64::max);
        let grad: Vec<Point> = exec.map(u.len(), |k| if layout.unknown[k] { w.gradient(&u[k]) } else { Point::zeros() });
        match config.scheme {
            Scheme::Explicit => {
                let lap = layout.laplacian(&u, exec);
                for k in 0..u.len() {
                    if layout.unknown[k] {
                        u[k] += (lap[k] - grad[k] * ie2) * step;
                    }
                }
                for (q, &k) in layout.ring.iter().enumerate() {
                    u[k] = ring[q];
                }
            }
            Scheme::SemiImplicit | Scheme::ConvexSplit => {
                let split = if config.scheme == Scheme::ConvexSplit { lam } else { 0.0 };
                let rhs: Vec<Point> = (0..u.len())
                    .map(|k| {
                        if layout.unknown[k] {
                            u[k] - (grad[k] - u[k] * split) * (step * ie2)
                        } else {
                            Point::zeros()
                        }
                    })
                    .collect();
                for (q, &k) in layout.ring.iter().enumerate() {
                    u[k] = ring[q];
                }
                layout.implicit_solve(1.0 + split * step * ie2, step, &rhs, &mut u, exec)?;
            }
            Scheme::DuhamelIteration => unreachable!(),
        }
        steps += 1;
        let sup = layout.sup_unknown(&u);
        if !(sup <= 10.0 * range) {
            return Err(Error::Instability { time: tb, magnitude: sup });
        }
        while next_snap < snaps.len() && (snaps[next_snap] - tb).abs() <= 1e-12 * (1.0 + tb.abs()) {
            record(&u, tb, data_sup)?;
            next_snap += 1;
        }
    }
    Ok(Solution { snapshots, diagnostics, unknown: layout.unknown, dt, steps })
}

/// Largest pointwise distance between two snapshot sequences, optionally
/// restricted to a node mask.
pub fn sup_distance(a: &[VectorField2D], b: &[VectorField2D], mask: Option<&[bool]>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} snapshots", a.len(), b.len())));
    }
    let mut best: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.grid != y.grid || (x.time - y.time).abs() > 1e-9 * (1.0 + x.time.abs()) {
            return Err(Error::ShapeMismatch(format!("snapshots at t = {} and {} differ in grid or time", x.time, y.time)));
        }
        if let Some(m) = mask {
            if m.len() != x.grid.len() {
                return Err(Error::ShapeMismatch("mask length".into()));
            }
        }
        for k in 0..x.values.len() {
            if mask.map_or(true, |m| m[k]) {
                best = best.max((x.values[k] - y.values[k]).norm());
            }
        }
    }
    Ok(best)
}
