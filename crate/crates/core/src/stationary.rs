//! The stationary triple junction `Δu = ∇W(u)` on the whole plane,
//! computed on a large disk with glued far-field data.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::cutoff::AngularPartition;
use crate::error::{Error, Result};
use crate::geometry::DELTA_INT_FRACTION;
use crate::grid::Grid;
use crate::heteroclinic::HeteroclinicProfile;
use crate::linalg::{conjugate_gradient, cross, rotate, unit, Point};
use crate::par::Exec;
use crate::potential::{AngleTriple, ThreeWellPotential};

/// Sector constants blended with straight-edge heteroclinics by the
/// angular partition; the far-field model of the junction.
#[derive(Clone, Debug)]
pub struct GluedModel {
    pub partition: AngularPartition,
    pub profiles: [HeteroclinicProfile; 3],
    pub wells: [Point; 3],
}

impl GluedModel {
    pub fn new(w: &ThreeWellPotential, profiles: &[HeteroclinicProfile; 3], angles: &AngleTriple) -> Self {
        GluedModel {
            partition: AngularPartition::new(angles.theta, DELTA_INT_FRACTION * angles.min_alpha()),
            profiles: profiles.clone(),
            wells: w.wells,
        }
    }

    pub fn eval(&self, y: &Point) -> Point {
        let phi = y.y.atan2(y.x);
        let (e, rest, s) = self.partition.weights(phi);
        let mut out = self.wells[s] * rest;
        for i in 0..3 {
            if e[i] > 0.0 {
                let d = cross(&unit(self.partition.theta[i]), y);
                out += self.profiles[i].eval_smooth(d) * e[i];
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct StationaryTriple {
    pub radius: f64,
    pub resolution: usize,
    pub grid: Grid,
    pub values: Vec<Point>,
    pub angles: AngleTriple,
    pub model: GluedModel,
    /// Max-norm of `Δ_h u − ∇W(u)` over interior nodes.
    pub residual: f64,
    /// Cubic B-spline coefficients interpolating `values`.
    coeffs: Vec<Point>,
}

#[derive(Serialize)]
struct Header<'a> {
    radius: f64,
    resolution: usize,
    nodes: usize,
    x0: f64,
    h: f64,
    alpha: [f64; 3],
    theta: [f64; 3],
    delta_int: f64,
    residual: f64,
    potential: &'a str,
}

fn laplacian_residual(w: &ThreeWellPotential, g: &Grid, u: &[Point], interior: &[bool], out: &mut [Point], exec: Exec) {
    let n = g.n;
    let ih2 = 1.0 / (g.h * g.h);
    exec.chunks_mut(out, n, |j, row| {
        for i in 0..n {
            let k = j * n + i;
            row[i] = if interior[k] {
                (u[k - 1] + u[k + 1] + u[k - n] + u[k + n] - u[k] * 4.0) * ih2 - w.gradient(&u[k])
            } else {
                Point::zeros()
            };
        }
    });
}

/// Relaxes the glued field to a solution of `Δu = ∇W(u)` in the disk of
/// radius `radius`, with the glued field as Dirichlet data outside it.
///
/// Explicit gradient-flow steps (time step below both the diffusive and
/// the reaction limit) bring the residual down, then Newton steps with
/// conjugate-gradient inner solves finish.
pub fn compute_stationary_triple(
    w: &ThreeWellPotential,
    profiles: &[HeteroclinicProfile; 3],
    angles: &AngleTriple,
    radius: f64,
    resolution: usize,
    tol: f64,
) -> Result<StationaryTriple> {
    compute_stationary_triple_with(w, profiles, angles, radius, resolution, tol, Exec::default())
}

pub fn compute_stationary_triple_with(
    w: &ThreeWellPotential,
    profiles: &[HeteroclinicProfile; 3],
    angles: &AngleTriple,
    radius: f64,
    resolution: usize,
    tol: f64,
    exec: Exec,
) -> Result<StationaryTriple> {
    if resolution < 8 || resolution % 2 != 0 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} must be even and >= 8")));
    }
    let model = GluedModel::new(w, profiles, angles);
    let h = 2.0 * radius / resolution as f64;
    // room for the spline stencil and the decay of the prefilter's end effects
    let pad = 8;
    let grid = Grid { n: resolution + 1 + 2 * pad, x0: -radius - pad as f64 * h, h };
    let n = grid.n;
    let mut u: Vec<Point> = (0..grid.len()).map(|k| model.eval(&grid.point_at(k))).collect();
    let interior: Vec<bool> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            i > 0 && j > 0 && i + 1 < n && j + 1 < n && grid.point_at(k).norm() < radius
        })
        .collect();
    let range = u.iter().map(|p| p.norm()).fold(0.0, f64::max) * 1.1;
    let lam = w.max_hessian_eigenvalue(range).max(1e-3);
    // below both h²/4 and 1/(2Λ), and inside the forward-Euler bound 2/(8/h² + Λ)
    let dt = 1.0 / (8.0 / (h * h) + lam);
    let mut f = vec![Point::zeros(); grid.len()];
    let sup = |f: &[Point]| {
        f.iter()
            .map(|p| p.norm())
            .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
    };

    let explicit = |u: &mut Vec<Point>, f: &mut Vec<Point>, steps: usize, stop: f64| -> f64 {
        let mut res = f64::INFINITY;
        for _ in 0..steps {
            laplacian_residual(w, &grid, u, &interior, f, exec);
            res = sup(f);
            if res <= stop {
                break;
            }
            for k in 0..u.len() {
                u[k] += f[k] * dt;
            }
        }
        res
    };

    let mut res = explicit(&mut u, &mut f, 4000, 0.05);
    log::debug!("stationary warmup: residual {res:.3e}");
    let ih2 = 1.0 / (h * h);
    let idx: Vec<usize> = (0..grid.len()).filter(|&k| interior[k]).collect();
    let mut pos = vec![usize::MAX; grid.len()];
    for (q, &k) in idx.iter().enumerate() {
        pos[k] = q;
    }
    for _newton in 0..30 {
        laplacian_residual(w, &grid, &u, &interior, &mut f, exec);
        res = sup(&f);
        log::debug!("stationary newton: residual {res:.3e}");
        if res <= tol {
            break;
        }
        let hess: Vec<[f64; 3]> = idx
            .iter()
            .map(|&k| {
                let m = w.hessian(&u[k]);
                [m[(0, 0)], m[(0, 1)], m[(1, 1)]]
            })
            .collect();
        // A = −Δ_h + Hess W(u) on interior unknowns (Dirichlet values fixed)
        let apply = |x: &[f64], y: &mut [f64]| {
            for (q, &k) in idx.iter().enumerate() {
                let mut acc = [4.0 * ih2 * x[2 * q], 4.0 * ih2 * x[2 * q + 1]];
                for nb in [k - 1, k + 1, k - n, k + n] {
                    let p = pos[nb];
                    if p != usize::MAX {
                        acc[0] -= ih2 * x[2 * p];
                        acc[1] -= ih2 * x[2 * p + 1];
                    }
                }
                let hq = hess[q];
                y[2 * q] = acc[0] + hq[0] * x[2 * q] + hq[1] * x[2 * q + 1];
                y[2 * q + 1] = acc[1] + hq[1] * x[2 * q] + hq[2] * x[2 * q + 1];
            }
        };
        let b: Vec<f64> = idx.iter().flat_map(|&k| [f[k].x, f[k].y]).collect();
        let mut delta = vec![0.0; b.len()];
        let inner_tol = (0.1 * tol / res.max(1e-300)).clamp(1e-12, 1e-2);
        match conjugate_gradient(apply, &b, &mut delta, inner_tol, 20_000) {
            Ok(_) => {}
            Err(Error::LinearSolve(_)) => {
                // not yet in the basin of a stable solution
                explicit(&mut u, &mut f, 4000, 0.1 * res);
                continue;
            }
            Err(e) => return Err(e),
        }
        let base = u.clone();
        let mut step = 1.0;
        loop {
            for (q, &k) in idx.iter().enumerate() {
                u[k] = base[k] + Point::new(delta[2 * q], delta[2 * q + 1]) * step;
            }
            laplacian_residual(w, &grid, &u, &interior, &mut f, exec);
            if sup(&f) < res || step < 1e-3 {
                break;
            }
            step *= 0.5;
        }
    }
    laplacian_residual(w, &grid, &u, &interior, &mut f, exec);
    res = sup(&f);
    if res > tol {
        return Err(Error::StationaryStagnated {
            residual: res,
            target: tol,
            field: f.iter().map(|p| p.norm()).collect(),
        });
    }
    let coeffs = spline_coefficients(&u, grid.n);
    Ok(StationaryTriple { radius, resolution, grid, values: u, angles: *angles, model, residual: res, coeffs })
}

/// Solves `(c_{k−1} + 4c_k + c_{k+1})/6 = v_k` along a line with `c = v` at both ends.
fn prefilter_line(v: &mut [Point]) {
    let n = v.len();
    if n < 3 {
        return;
    }
    // Thomas algorithm on the interior unknowns 1..n-1
    let mut cp = vec![0.0; n];
    let mut dp = vec![Point::zeros(); n];
    for k in 1..n - 1 {
        let mut rhs = v[k] * 6.0;
        if k == 1 {
            rhs -= v[0];
        }
        if k == n - 2 {
            rhs -= v[n - 1];
        }
        let (a, b, c) = (if k > 1 { 1.0 } else { 0.0 }, 4.0, if k < n - 2 { 1.0 } else { 0.0 });
        let m = b - a * cp[k - 1];
        cp[k] = c / m;
        dp[k] = (rhs - dp[k - 1] * a) / m;
    }
    for k in (1..n - 1).rev() {
        v[k] = if k == n - 2 { dp[k] } else { dp[k] - v[k + 1] * cp[k] };
    }
}

fn spline_coefficients(values: &[Point], n: usize) -> Vec<Point> {
    let mut c = values.to_vec();
    for row in c.chunks_mut(n) {
        prefilter_line(row);
    }
    let mut col = vec![Point::zeros(); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = c[j * n + i];
        }
        prefilter_line(&mut col);
        for j in 0..n {
            c[j * n + i] = col[j];
        }
    }
    c
}

fn bspline_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0]
}

impl StationaryTriple {
    /// Cubic B-spline interpolation (`C²`) inside the disk, glued model outside.
    pub fn eval(&self, y: &Point) -> Point {
        if y.norm() >= self.radius {
            return self.model.eval(y);
        }
        let g = &self.grid;
        let fx = (y.x - g.x0) / g.h;
        let fy = (y.y - g.x0) / g.h;
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let wx = bspline_weights(fx - i as f64);
        let wy = bspline_weights(fy - j as f64);
        let mut out = Point::zeros();
        for b in 0..4 {
            let mut row = Point::zeros();
            for a in 0..4 {
                row += self.coeffs[g.index(i + a - 1, j + b - 1)] * wx[a];
            }
            out += row * wy[b];
        }
        out
    }

    /// `u_*(R_{θ_gauge}(x − o) / ε)`.
    pub fn eval_junction_core(&self, x: &Point, o: &Point, theta_gauge: f64, eps: f64) -> Point {
        self.eval(&(rotate(&(x - o), theta_gauge) / eps))
    }

    /// The interpolant at the origin (a node, so equal to the nodal value up to rounding).
    pub fn value_at_center(&self) -> Point {
        self.eval(&Point::zeros())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Writes `x,y,u1,u2` rows for nodes inside the disk and a JSON header next to it.
    pub fn write(&self, csv: &Path, header: &Path, potential_id: &str) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(csv)?);
        writeln!(f, "x,y,u1,u2")?;
        for (k, v) in self.values.iter().enumerate() {
            let p = self.grid.point_at(k);
            if p.norm() <= self.radius {
                writeln!(f, "{:.17e},{:.17e},{:.17e},{:.17e}", p.x, p.y, v.x, v.y)?;
            }
        }
        let h = Header {
            radius: self.radius,
            resolution: self.resolution,
            nodes: self.grid.n,
            x0: self.grid.x0,
            h: self.grid.h,
            alpha: self.angles.alpha,
            theta: self.angles.theta,
            delta_int: self.model.partition.delta_int,
            residual: self.residual,
            potential: potential_id,
        };
        std::fs::write(header, serde_json::to_string_pretty(&h)?)?;
        Ok(())
    }
}
