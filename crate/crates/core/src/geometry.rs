//! Signed distances to the arms of a triod, sectors, admissibility radii
//! and the evolution identity satisfied by the distance function.

use serde::{Deserialize, Serialize};

use crate::curve::{Foot, Polyline};
use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::linalg::{wrap_angle, Point};
use crate::triod::{Trajectory, Triod};

/// Distance queries against one triod snapshot.
///
/// Sector `s` is the region between curve `s − 1` and curve `s`
/// (counter-clockwise) and holds well `s`; `d_i > 0` to the left of curve
/// `i`, i.e. in sector `i + 1`.
#[derive(Clone, Debug)]
pub struct TriodGeometry {
    pub polys: [Polyline; 3],
    pub junction: Point,
    /// Measured tangent angles at the junction.
    pub tangent_angles: [f64; 3],
}

#[derive(Clone, Copy, Debug)]
pub struct PointDistances {
    pub signed: [f64; 3],
    pub sector: usize,
}

impl TriodGeometry {
    pub fn new(triod: &Triod) -> Self {
        TriodGeometry {
            polys: [triod.polyline(0), triod.polyline(1), triod.polyline(2)],
            junction: triod.junction(),
            tangent_angles: [triod.tangent_angle(0), triod.tangent_angle(1), triod.tangent_angle(2)],
        }
    }

    fn angular_sector(&self, x: &Point) -> usize {
        let v = x - self.junction;
        let a = v.y.atan2(v.x);
        for s in 0..3 {
            let lo = self.tangent_angles[(s + 2) % 3];
            let width = (self.tangent_angles[s] - lo).rem_euclid(std::f64::consts::TAU);
            if (a - lo).rem_euclid(std::f64::consts::TAU) < width {
                return s;
            }
        }
        0
    }

    fn classify(&self, x: &Point, feet: &[Foot; 3]) -> usize {
        let mut i = 0;
        for k in 1..3 {
            if feet[k].dist < feet[i].dist {
                i = k;
            }
        }
        let f = &feet[i];
        if (f.seg == 0 && f.t <= 0.0) || (x - self.junction).norm() == 0.0 {
            return self.angular_sector(x);
        }
        let side = self.polys[i].side(x, f);
        if side < 0.0 {
            i
        } else {
            (i + 1) % 3
        }
    }

    pub fn sector(&self, x: &Point) -> usize {
        let feet = [self.polys[0].nearest(x), self.polys[1].nearest(x), self.polys[2].nearest(x)];
        self.classify(x, &feet)
    }

    pub fn distances(&self, x: &Point) -> PointDistances {
        let feet = [self.polys[0].nearest(x), self.polys[1].nearest(x), self.polys[2].nearest(x)];
        let sector = self.classify(x, &feet);
        let mut signed = [0.0; 3];
        for i in 0..3 {
            let s = if sector == (i + 1) % 3 {
                1.0
            } else if sector == i {
                -1.0
            } else {
                let side = self.polys[i].side(x, &feet[i]);
                if side == 0.0 { 1.0 } else { side }
            };
            signed[i] = s * feet[i].dist;
        }
        PointDistances { signed, sector }
    }

    pub fn signed_distance(&self, i: usize, x: &Point) -> f64 {
        self.distances(x).signed[i]
    }

    /// Distance to `γ^i ∪ γ^j`, positive in the sector between the two
    /// curves and antisymmetric in `(i, j)`.
    pub fn pair_distance(&self, i: usize, j: usize, x: &Point) -> f64 {
        let d = self.distances(x);
        pair_from(&d, i, j)
    }
}

pub(crate) fn pair_from(d: &PointDistances, i: usize, j: usize) -> f64 {
    if i == j {
        return d.signed[i];
    }
    let m = d.signed[i].abs().min(d.signed[j].abs());
    // orient the pair as (a, a + 1)
    let (a, flip) = if j == (i + 1) % 3 { (i, 1.0) } else { (j, -1.0) };
    let s = if d.sector == (a + 1) % 3 { 1.0 } else { -1.0 };
    flip * s * m
}

pub fn signed_distance(triod: &Triod, i: usize, x: &Point) -> f64 {
    TriodGeometry::new(triod).signed_distance(i, x)
}

pub fn pair_distance(triod: &Triod, i: usize, j: usize, x: &Point) -> f64 {
    TriodGeometry::new(triod).pair_distance(i, j, x)
}

/// Radii parametrizing the ansatz: the junction ball `delta_tilde`, the
/// angular half-width `delta_int` and the tube radius `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub delta_tilde: f64,
    pub delta_int: f64,
    pub delta: f64,
}

/// Fraction of the smallest admissible angle used as `delta_int`.
pub const DELTA_INT_FRACTION: f64 = 0.45;

fn ball_predicate(triod: &Triod, r: f64, reference: &[f64; 3], half_width: f64) -> bool {
    let o = triod.junction();
    for i in 0..3 {
        let c = &triod.curves[i];
        let dir = crate::linalg::unit(reference[i]);
        let mut exited = None;
        let mut last_proj = 0.0;
        for (k, p) in c.iter().enumerate().skip(1) {
            let v = p - o;
            if v.norm() >= r {
                exited = Some(k);
                break;
            }
            let proj = v.dot(&dir);
            if proj <= last_proj {
                return false;
            }
            last_proj = proj;
            if wrap_angle(v.y.atan2(v.x) - reference[i]).abs() >= half_width {
                return false;
            }
        }
        let Some(k) = exited else { return false };
        // the rest of the curve never comes back into the ball
        if k + 1 < c.len() {
            let tail = Polyline::new(c[k..].to_vec(), false);
            if tail.nearest(&o).dist < r {
                return false;
            }
        }
    }
    true
}

/// Reference edge directions: the tangent of curve 0 plus the prescribed opening angles.
pub fn reference_angles(triod: &Triod) -> [f64; 3] {
    let a = triod.angle_mode.alphas();
    let t0 = triod.tangent_angle(0);
    [t0, t0 + a[1], t0 + a[1] + a[2]]
}

pub fn admissibility_radii(triod: &Triod, domain: &Domain) -> Result<Radii> {
    let alphas = triod.angle_mode.alphas();
    let amin = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let delta_int = DELTA_INT_FRACTION * amin;
    let reference = reference_angles(triod);
    let cap = 0.95 * domain.boundary_distance(&triod.junction());
    if cap <= 0.0 {
        return Err(Error::NotAdmissible("junction outside the domain".into()));
    }
    let pred = |r: f64| ball_predicate(triod, r, &reference, 0.5 * delta_int);
    let delta_tilde = if pred(cap) {
        cap
    } else {
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    if delta_tilde <= 0.0 {
        return Err(Error::NotAdmissible("no ball around the junction where the arms are graphs".into()));
    }
    let o = triod.junction();
    let inner = 0.75 * delta_tilde;
    let mut kmax: f64 = 0.0;
    let mut sep = f64::INFINITY;
    let polys = [triod.polyline(0), triod.polyline(1), triod.polyline(2)];
    for i in 0..3 {
        let c = &triod.curves[i];
        for k in 1..c.len() - 1 {
            if (c[k] - o).norm() > inner {
                if let Some(kk) = crate::triod::node_curvature(c, k) {
                    kmax = kmax.max(kk.abs());
                }
            }
        }
        for p in c.iter().filter(|p| (*p - o).norm() > inner) {
            for j in 0..3 {
                if j != i {
                    sep = sep.min(polys[j].nearest(p).dist);
                }
            }
        }
    }
    let reach = if kmax > 0.0 { 0.5 / kmax } else { f64::INFINITY };
    let delta = reach.min(0.5 * sep);
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::NotAdmissible(format!("tube radius {delta}")));
    }
    Ok(Radii { delta_tilde, delta_int, delta })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceResidual {
    /// `(d_t − Δd) − k² d / (1 + k d)`.
    pub residual: f64,
    /// `|∇d| − 1`.
    pub gradient_defect: f64,
}

/// Finite-difference check of `d_t − Δd = k² d / (1 + k d)` for the signed
/// distance to the curve returned by `curve_at(time)`.
pub fn distance_residual_with<F>(curve_at: F, x: &Point, t: f64, h: f64, dt: f64) -> Result<DistanceResidual>
where
    F: Fn(f64) -> Result<Polyline>,
{
    let now = curve_at(t)?;
    let foot = now.nearest(x);
    let nseg = now.num_segments();
    if !now.closed && ((foot.seg == 0 && foot.t <= 0.0) || (foot.seg + 1 == nseg && foot.t >= 1.0)) {
        return Err(Error::OutsideTube("foot point at the end of the curve".into()));
    }
    let k = now
        .curvature_at(&foot)
        .ok_or_else(|| Error::OutsideTube("foot point on an end segment".into()))?;
    let d = |c: &Polyline, p: Point| c.signed_distance(&p);
    let ex = Point::new(h, 0.0);
    let ey = Point::new(0.0, h);
    let d0 = d(&now, *x);
    let (dxp, dxm, dyp, dym) = (d(&now, x + ex), d(&now, x - ex), d(&now, x + ey), d(&now, x - ey));
    let lap = (dxp + dxm + dyp + dym - 4.0 * d0) / (h * h);
    let grad = Point::new(dxp - dxm, dyp - dym) / (2.0 * h);
    let dtd = (d(&curve_at(t + dt)?, *x) - d(&curve_at(t - dt)?, *x)) / (2.0 * dt);
    let rhs = k * k * d0 / (1.0 + k * d0);
    Ok(DistanceResidual { residual: (dtd - lap) - rhs, gradient_defect: grad.norm() - 1.0 })
}

/// [`distance_residual_with`] for curve `i` of a trajectory.
pub fn distance_evolution_residual(
    traj: &Trajectory,
    i: usize,
    x: &Point,
    t: f64,
    h: f64,
    dt: f64,
) -> Result<DistanceResidual> {
    distance_residual_with(|s| Ok(traj.at(s)?.polyline(i)), x, t, h, dt)
}

/// Points along all arms of a triod within `radius` of the origin, with
/// segments subdivided to spacing at most `spacing`.
pub fn sample_in_window(triod: &Triod, radius: f64, spacing: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for c in &triod.curves {
        for w in c.windows(2) {
            let m = ((w[1] - w[0]).norm() / spacing).ceil().max(1.0) as usize;
            for q in 0..m {
                let p = w[0] + (w[1] - w[0]) * (q as f64 / m as f64);
                if p.norm() <= radius {
                    out.push(p);
                }
            }
        }
        if c.last().unwrap().norm() <= radius {
            out.push(*c.last().unwrap());
        }
    }
    out
}

/// Hausdorff distance between two triods restricted to the ball of the
/// given radius around the origin.
pub fn hausdorff_in_window(a: &Triod, b: &Triod, radius: f64) -> f64 {
    let spacing = 1e-3 * radius;
    let pa = [a.polyline(0), a.polyline(1), a.polyline(2)];
    let pb = [b.polyline(0), b.polyline(1), b.polyline(2)];
    let directed = |pts: Vec<Point>, polys: &[Polyline; 3]| {
        pts.iter()
            .map(|p| polys.iter().map(|c| c.nearest(p).dist).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(sample_in_window(a, radius, spacing), &pb).max(directed(sample_in_window(b, radius, spacing), &pa))
}

/// Hausdorff distance between finite point sets (infinite if exactly one is empty).
pub fn hausdorff_points(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
            .sqrt()
    };
    directed(a, b).max(directed(b, a))
}
